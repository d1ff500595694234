#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "lacnet/model.hpp"
#include "lacnet/optim.hpp"

namespace lacnet {

/// Binary layout: "LACNETCK", u32 version, u64 header length, JSON header, then the
/// float32 little-endian arrays listed in the header (parameters, then optimizer moments if present).
struct Checkpoint {
  ModelConfig model_config;
  nlohmann::json train_config = nlohmann::json::object();  // echo only
  std::int64_t step = 0;
  double best_score = -1.0;
  ParamStore<float> params;
  std::optional<AdamWState> optimizer;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Throws DataError for a missing, truncated or inconsistent file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Rebuilds the network from a checkpoint and installs its parameters.
LacNet<float> model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace lacnet
