#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lacnet/model.hpp"
#include "lacnet/scene.hpp"
#include "lacnet/training.hpp"

namespace lacnet {

/// `key = value` lines; `#` starts a comment. Ranges and lists are comma separated,
/// optionally in brackets: `object_count_range = [2, 8]`.
struct ConfigFile {
  std::string source;  // file name for messages
  std::vector<std::pair<std::string, std::string>> entries;

  static ConfigFile parse(const std::string& text, const std::string& source = "<config>");
  static ConfigFile load(const std::filesystem::path& path);
};

/// Each throws ConfigError naming the key for an unknown key or a bad value.
GeneratorConfig generator_config_from(const ConfigFile& file, GeneratorConfig base = {});
/// Training files may mix model keys (input_size, channels, fusion, ...) and optimizer keys.
void apply_train_config(const ConfigFile& file, ModelConfig& model, TrainConfig& train);

}  // namespace lacnet
