#include "lacnet/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "lacnet/errors.hpp"
#include "lacnet/png_io.hpp"

namespace lacnet {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint16_t depth_to_millimeters(float meters) {
  if (!(meters > 0.0f)) return 0;
  const double mm = std::round(static_cast<double>(meters) * 1000.0);
  return static_cast<std::uint16_t>(std::clamp(mm, 0.0, 65535.0));
}

float millimeters_to_depth(std::uint16_t mm) { return static_cast<float>(mm) / 1000.0f; }

namespace {

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing file: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("parse error in " + path.string() + ": " + e.what());
  }
}

}  // namespace

void save_scene(const RgbdScene& scene, const fs::path& dir) {
  scene.validate();
  fs::create_directories(dir / "masks");
  png::write_u8(dir / "rgb.png", scene.rgb);
  Image<std::uint16_t> depth_mm(scene.depth.width, scene.depth.height, 1);
  for (std::size_t i = 0; i < depth_mm.data.size(); ++i) depth_mm.data[i] = depth_to_millimeters(scene.depth.data[i]);
  png::write_u16(dir / "depth.png", depth_mm);

  const auto& k = scene.intrinsics;
  write_json(dir / "camera.json",
             json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}});

  json instances = json::array();
  for (std::size_t i = 0; i < scene.instances.size(); ++i) {
    const auto& inst = scene.instances[i];
    const std::string amodal = "masks/" + std::to_string(i) + "_amodal.png";
    const std::string visible = "masks/" + std::to_string(i) + "_visible.png";
    png::write_mask(dir / amodal, inst.amodal_mask);
    png::write_mask(dir / visible, inst.visible_mask);
    instances.push_back(json{{"amodal", amodal},
                             {"visible", visible},
                             {"occluded_flag", inst.occluded_flag},
                             {"depth_rank", inst.depth_rank},
                             {"label", inst.label}});
  }
  write_json(dir / "instances.json", instances);
}

void save_dataset(const std::vector<RgbdScene>& scenes, const fs::path& directory) {
  fs::create_directories(directory);
  for (const auto& s : scenes) save_scene(s, directory / s.scene_id);
}

RgbdScene load_scene(const fs::path& dir) {
  RgbdScene scene;
  scene.scene_id = dir.filename().string();

  const fs::path camera_path = dir / "camera.json";
  const json cam = read_json(camera_path);
  try {
    scene.intrinsics = CameraIntrinsics{cam.at("fx").get<double>(), cam.at("fy").get<double>(),
                                        cam.at("cx").get<double>(), cam.at("cy").get<double>(),
                                        cam.at("width").get<int>(),  cam.at("height").get<int>()};
    scene.intrinsics.validate();
  } catch (const json::exception& e) {
    throw DataError("parse error in " + camera_path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError("invalid " + camera_path.string() + ": " + e.what());
  }

  scene.rgb = png::read_u8(dir / "rgb.png");
  if (scene.rgb.channels != 3) throw DataError("rgb.png must be RGB: " + (dir / "rgb.png").string());
  const auto depth_mm = png::read_u16(dir / "depth.png");
  scene.depth = DepthImage(depth_mm.width, depth_mm.height, 1);
  for (std::size_t i = 0; i < depth_mm.data.size(); ++i) scene.depth.data[i] = millimeters_to_depth(depth_mm.data[i]);

  const fs::path inst_path = dir / "instances.json";
  const json instances = read_json(inst_path);
  if (!instances.is_array()) throw DataError("parse error in " + inst_path.string() + ": expected an array");
  for (const auto& entry : instances) {
    try {
      auto amodal = png::read_mask(dir / entry.at("amodal").get<std::string>());
      auto visible = png::read_mask(dir / entry.at("visible").get<std::string>());
      const bool flag = entry.at("occluded_flag").get<bool>();
      auto inst = InstanceAnnotation::make(std::move(amodal), std::move(visible), entry.at("depth_rank").get<int>(),
                                           entry.value("label", std::string{}));
      if (inst.occluded_flag != flag)
        throw DataError("occluded_flag disagrees with the visible/amodal area ratio");
      scene.instances.push_back(std::move(inst));
    } catch (const json::exception& e) {
      throw DataError("parse error in " + inst_path.string() + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("invalid annotation in " + inst_path.string() + ": " + e.what());
    }
  }
  scene.validate();
  return scene;
}

std::vector<RgbdScene> load_dataset(const fs::path& directory) {
  if (!fs::is_directory(directory)) throw DataError("dataset directory not found: " + directory.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(directory))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  std::vector<RgbdScene> scenes;
  scenes.reserve(dirs.size());
  for (const auto& d : dirs) scenes.push_back(load_scene(d));
  return scenes;
}

}  // namespace lacnet
