#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lacnet/scene.hpp"

namespace lacnet {

/// Depth on disk is 16-bit millimeters; 0 stays invalid.
std::uint16_t depth_to_millimeters(float meters);
float millimeters_to_depth(std::uint16_t mm);

/// Writes <dir>/<scene_id>/{rgb.png, depth.png, camera.json, instances.json, masks/...}.
void save_scene(const RgbdScene& scene, const std::filesystem::path& scene_dir);
void save_dataset(const std::vector<RgbdScene>& scenes, const std::filesystem::path& directory);

/// Throws DataError naming the offending file when anything is missing or malformed.
RgbdScene load_scene(const std::filesystem::path& scene_dir);
/// Every subdirectory is a scene; scenes are returned sorted by directory name.
std::vector<RgbdScene> load_dataset(const std::filesystem::path& directory);

}  // namespace lacnet
