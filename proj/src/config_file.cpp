#include "lacnet/config_file.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "lacnet/errors.hpp"

namespace lacnet {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw ConfigError("config key '" + key + "': " + why);
}

std::vector<std::string> split_list(const std::string& key, std::string v) {
  v = trim(v);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') bad(key, "unbalanced brackets");
    v = v.substr(1, v.size() - 2);
  }
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (out.empty() || std::any_of(out.begin(), out.end(), [](const std::string& s) { return s.empty(); }))
    bad(key, "empty list element");
  return out;
}

template <typename N>
N number(const std::string& key, const std::string& v) {
  N out{};
  const std::string t = trim(v);
  if constexpr (std::is_floating_point_v<N>) {
    try {
      std::size_t pos = 0;
      out = static_cast<N>(std::stod(t, &pos));
      if (pos != t.size()) bad(key, "not a number: '" + v + "'");
    } catch (const std::logic_error&) {
      bad(key, "not a number: '" + v + "'");
    }
  } else {
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc() || ptr != t.data() + t.size()) bad(key, "not an integer: '" + v + "'");
  }
  return out;
}

template <typename N>
std::pair<N, N> range(const std::string& key, const std::string& v) {
  const auto parts = split_list(key, v);
  if (parts.size() != 2) bad(key, "expected two values");
  return {number<N>(key, parts[0]), number<N>(key, parts[1])};
}

std::array<int, 4> four(const std::string& key, const std::string& v) {
  const auto parts = split_list(key, v);
  if (parts.size() != 4) bad(key, "expected four values");
  std::array<int, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) out[i] = number<int>(key, parts[i]);
  return out;
}

bool boolean(const std::string& key, const std::string& v) {
  std::string t = trim(v);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  bad(key, "expected true or false");
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text, const std::string& source) {
  ConfigFile f;
  f.source = source;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": missing key");
    f.entries.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return f;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str(), path.string());
}

GeneratorConfig generator_config_from(const ConfigFile& file, GeneratorConfig c) {
  for (const auto& [key, v] : file.entries) {
    if (key == "canvas_size") c.canvas_size = number<int>(key, v);
    else if (key == "object_count_range") c.object_count_range = range<int>(key, v);
    else if (key == "object_size_range") c.object_size_range = range<double>(key, v);
    else if (key == "object_depth_range") c.object_depth_range = range<double>(key, v);
    else if (key == "background_depth") c.background_depth = number<double>(key, v);
    else if (key == "foam_cover_fraction_range") c.foam_cover_fraction_range = range<double>(key, v);
    else if (key == "foam_disc_radius_range") c.foam_disc_radius_range = range<double>(key, v);
    else if (key == "color_noise_std") c.color_noise_std = number<double>(key, v);
    else if (key == "min_visible_fraction") c.min_visible_fraction = number<double>(key, v);
    else if (key == "seed") c.seed = number<std::uint64_t>(key, v);
    else if (key == "shape_set") {
      c.shape_set.clear();
      for (const auto& name : split_list(key, v)) {
        try {
          c.shape_set.push_back(parse_shape(name));
        } catch (const ConfigError& e) {
          bad(key, e.what());
        }
      }
    } else {
      throw ConfigError(file.source + ": unknown config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

void apply_train_config(const ConfigFile& file, ModelConfig& m, TrainConfig& t) {
  for (const auto& [key, v] : file.entries) {
    if (key == "preset") {
      const std::string p = trim(v);
      const auto keep_fusion = m.fusion;
      if (p == "desk") m = ModelConfig{};
      else if (p == "tiny") m = ModelConfig::tiny();
      else if (p == "resnet50") m = ModelConfig::resnet50();
      else bad(key, "unknown preset '" + p + "'");
      m.fusion = keep_fusion;
    } else if (key == "input_size") m.input_size = number<int>(key, v);
    else if (key == "stem_channels") m.stem_channels = number<int>(key, v);
    else if (key == "channels") m.channels = four(key, v);
    else if (key == "blocks_per_stage") m.blocks_per_stage = four(key, v);
    else if (key == "decoder_channels") m.decoder_channels = four(key, v);
    else if (key == "block") {
      const std::string b = trim(v);
      if (b == "basic") m.block = BlockType::basic;
      else if (b == "bottleneck") m.block = BlockType::bottleneck;
      else bad(key, "expected basic or bottleneck");
    } else if (key == "fusion") {
      try {
        m.fusion = parse_fusion(trim(v));
      } catch (const ConfigError& e) {
        bad(key, e.what());
      }
    } else if (key == "depth_as_3ch") m.depth_as_3ch = boolean(key, v);
    else if (key == "model_seed") m.seed = number<std::uint64_t>(key, v);
    else if (key == "learning_rate") t.learning_rate = number<double>(key, v);
    else if (key == "batch_size") t.batch_size = number<int>(key, v);
    else if (key == "total_iterations" || key == "iterations") t.total_iterations = number<std::int64_t>(key, v);
    else if (key == "weight_decay") t.weight_decay = number<double>(key, v);
    else if (key == "beta1") t.beta1 = number<double>(key, v);
    else if (key == "beta2") t.beta2 = number<double>(key, v);
    else if (key == "epsilon") t.epsilon = number<double>(key, v);
    else if (key == "eval_every") t.eval_every = number<std::int64_t>(key, v);
    else if (key == "seed") t.seed = number<std::uint64_t>(key, v);
    else if (key == "expansion_factor") t.expansion_factor = number<double>(key, v);
    else if (key == "augment_dilate_radius_range") t.augment.dilate_radius_range = range<int>(key, v);
    else if (key == "augment_erode_radius_range") t.augment.erode_radius_range = range<int>(key, v);
    else if (key == "augment_blur_sigma_range") t.augment.blur_sigma_range = range<double>(key, v);
    else if (key == "augment_dilate_probability") t.augment.dilate_probability = number<double>(key, v);
    else if (key == "augment_erode_probability") t.augment.erode_probability = number<double>(key, v);
    else if (key == "augment_blur_probability") t.augment.blur_probability = number<double>(key, v);
    else throw ConfigError(file.source + ": unknown config key '" + key + "'");
  }
  m.validate();
  t.validate();
}

}  // namespace lacnet
