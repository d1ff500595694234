#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lacnet/bitmap.hpp"

namespace lacnet {

/// Pinhole intrinsics in pixels.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws DataError when fx, fy are not positive or the principal point lies outside the image.
  void validate() const;
  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

/// Visible/amodal ratio below which an instance counts as occluded.
inline constexpr double kOcclusionRatio = 0.95;

/// True when visible_area / amodal_area < 0.95. Throws DataError for an empty amodal mask.
bool occlusion_flag(std::size_t visible_area, std::size_t amodal_area);

struct InstanceAnnotation {
  Bitmap amodal_mask;
  Bitmap visible_mask;
  Bitmap occluded_mask;  // amodal AND NOT visible
  bool occluded_flag = false;
  int depth_rank = 0;  // 0 = nearest
  std::string label;

  /// Builds an annotation with the derived fields filled in; checks visible ⊆ amodal and a nonempty amodal mask.
  static InstanceAnnotation make(Bitmap amodal, Bitmap visible, int depth_rank, std::string label);
};

struct RgbdScene {
  std::string scene_id;
  RgbImage rgb;      // 3 channels, 8-bit
  DepthImage depth;  // meters, 0 = invalid
  CameraIntrinsics intrinsics;
  std::vector<InstanceAnnotation> instances;

  int width() const { return rgb.width; }
  int height() const { return rgb.height; }
  /// Checks matching image and mask sizes plus per-instance invariants. Throws DataError.
  void validate() const;
};

enum class ShapeKind { rectangle, ellipse, capsule, triangle, l_shape };

const char* shape_name(ShapeKind kind);
ShapeKind parse_shape(const std::string& name);
bool is_convex(ShapeKind kind);

struct GeneratorConfig {
  int canvas_size = 128;
  std::pair<int, int> object_count_range{2, 8};
  std::vector<ShapeKind> shape_set{ShapeKind::rectangle, ShapeKind::ellipse, ShapeKind::capsule,
                                   ShapeKind::triangle, ShapeKind::l_shape};
  /// Longest side of an object before rotation, in pixels.
  std::pair<double, double> object_size_range{20.0, 56.0};
  std::pair<double, double> object_depth_range{0.4, 1.0};
  double background_depth = 1.2;
  std::pair<double, double> foam_cover_fraction_range{0.0, 0.5};
  std::pair<double, double> foam_disc_radius_range{2.0, 4.0};
  double color_noise_std = 6.0;
  /// Instances whose visible fraction falls below this are re-placed; always at least one pixel stays visible.
  double min_visible_fraction = 0.1;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Pure function of (config, scene_index). Throws ConfigError if objects cannot be
/// placed after 100 attempts.
RgbdScene generate_scene(const GeneratorConfig& config, std::int64_t scene_index);

/// Scenes [first, first + count), generated in parallel; identical to serial generation.
std::vector<RgbdScene> generate_scenes(const GeneratorConfig& config, std::int64_t first, std::int64_t count);

std::string scene_id_for(std::int64_t scene_index);

/// visible_i = amodal_i minus every strictly nearer amodal mask minus the foam mask.
/// Ranks must be unique. Labels default to empty.
std::vector<InstanceAnnotation> derive_visible_masks(const std::vector<Bitmap>& amodal_masks,
                                                     const std::vector<int>& depth_ranks,
                                                     const Bitmap& foam_mask);

}  // namespace lacnet
