#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lacnet/checkpoint.hpp"
#include "lacnet/metrics.hpp"
#include "lacnet/model.hpp"
#include "lacnet/optim.hpp"
#include "lacnet/preprocess.hpp"
#include "lacnet/scene.hpp"

namespace lacnet {

struct TrainConfig {
  double learning_rate = 3e-4;
  int batch_size = 16;
  std::int64_t total_iterations = 5000;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t eval_every = 500;
  std::uint64_t seed = 0;
  double expansion_factor = 2.0;
  AugmentParams augment;

  AdamWConfig adamw() const { return {learning_rate, beta1, beta2, epsilon, weight_decay}; }
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);

struct HistoryRow {
  std::int64_t iteration = 0;
  double loss = 0;
  std::optional<double> miou_full, miou_occ;  // only on evaluation iterations
};

/// CSV with header iteration,loss,miou_full,miou_occ; metrics left empty when not evaluated.
void write_history_csv(const std::vector<HistoryRow>& rows, const std::filesystem::path& path);
std::vector<HistoryRow> read_history_csv(const std::filesystem::path& path);

/// Flat (scene, instance) index used for uniform sampling with replacement.
struct InstanceRef {
  int scene = 0, instance = 0;
};
std::vector<InstanceRef> instance_index(const std::vector<RgbdScene>& scenes);

/// The crops of iteration `iteration` (1-based). Each slot draws from its own stream
/// derived from (seed, iteration, slot), so a batch does not depend on earlier iterations.
std::vector<CropSample> sample_batch(const std::vector<RgbdScene>& scenes, const std::vector<InstanceRef>& index,
                                     const TrainConfig& config, int input_size, std::int64_t iteration);

/// Model plus optimizer state between iterations.
struct TrainState {
  LacNet<float> model;
  AdamWState optimizer;
  std::int64_t iteration = 0;  // completed iterations
  double best_score = -1.0;

  explicit TrainState(const ModelConfig& config);
  static TrainState from_checkpoint(const Checkpoint& ckpt);
  Checkpoint to_checkpoint(const TrainConfig& config) const;
};

/// Forward, backward and one AdamW step; returns the batch loss. Throws NumericalError for a non-finite loss.
double train_iteration(TrainState& state, const std::vector<RgbdScene>& scenes, const std::vector<InstanceRef>& index,
                       const TrainConfig& config);

/// Loss and parameter gradients on one batch, without updating anything.
double loss_and_gradients(const LacNet<float>& model, const Batch<float>& batch, std::vector<Tensor<float>>* grads);

enum class VisibleSource { ground_truth, corrupted, copy_visible };

/// Predicts every instance of every scene from its visible mask and accumulates metrics.
/// `corrupted` passes each GT visible mask through augment_mask with a per-instance stream of `seed`;
/// `copy_visible` skips the network and returns the visible prior as both masks.
MetricsAccumulator evaluate_dataset(const LacNet<float>* model, const std::vector<RgbdScene>& scenes,
                                    VisibleSource source, const AugmentParams& corruption = {},
                                    std::uint64_t seed = 0);

struct TrainOptions {
  std::filesystem::path out_dir;               // empty: keep nothing on disk
  std::optional<std::filesystem::path> resume;  // checkpoint to continue from
  std::function<void(const HistoryRow&)> on_row;
  bool log_progress = false;
};

struct TrainResult {
  TrainState state;
  std::vector<HistoryRow> history;
};

/// Runs iterations state.iteration+1 .. total_iterations. Evaluates on `eval_scenes` every eval_every
/// iterations and at the end, writes final.ckpt, best.ckpt (best eval mIoU_full) and history.csv.
TrainResult train(const std::vector<RgbdScene>& train_scenes, const std::vector<RgbdScene>& eval_scenes,
                  const ModelConfig& model_config, const TrainConfig& config, const TrainOptions& options = {});

}  // namespace lacnet
