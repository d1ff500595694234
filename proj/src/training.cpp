#include "lacnet/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lacnet/errors.hpp"
#include "lacnet/rng.hpp"

namespace lacnet {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0)) throw ConfigError("learning_rate must be non-negative");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (total_iterations < 0) throw ConfigError("total_iterations must be non-negative");
  if (eval_every <= 0) throw ConfigError("eval_every must be positive");
  if (total_iterations > 0 && eval_every > total_iterations)
    throw ConfigError("eval_every must not exceed total_iterations");
  if (!(weight_decay >= 0)) throw ConfigError("weight_decay must be non-negative");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("betas must lie in [0, 1)");
  if (!(epsilon > 0)) throw ConfigError("epsilon must be positive");
  if (!(expansion_factor >= 1)) throw ConfigError("expansion_factor must be >= 1");
  augment.validate();
}

nlohmann::json to_json(const TrainConfig& c) {
  const auto& a = c.augment;
  return {{"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"total_iterations", c.total_iterations},
          {"weight_decay", c.weight_decay},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon},
          {"eval_every", c.eval_every},
          {"seed", c.seed},
          {"expansion_factor", c.expansion_factor},
          {"augment",
           {{"dilate_radius_range", {a.dilate_radius_range.first, a.dilate_radius_range.second}},
            {"erode_radius_range", {a.erode_radius_range.first, a.erode_radius_range.second}},
            {"blur_sigma_range", {a.blur_sigma_range.first, a.blur_sigma_range.second}},
            {"dilate_probability", a.dilate_probability},
            {"erode_probability", a.erode_probability},
            {"blur_probability", a.blur_probability}}}};
}

namespace {

std::string fmt(double v, int digits = 17) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

}  // namespace

void write_history_csv(const std::vector<HistoryRow>& rows, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError(path.string() + ": cannot open for writing");
  os << "iteration,loss,miou_full,miou_occ\n";
  for (const auto& r : rows)
    os << r.iteration << ',' << fmt(r.loss) << ',' << (r.miou_full ? fmt(*r.miou_full) : "") << ','
       << (r.miou_occ ? fmt(*r.miou_occ) : "") << '\n';
}

std::vector<HistoryRow> read_history_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError(path.string() + ": cannot open history");
  std::string line;
  std::getline(is, line);
  if (line != "iteration,loss,miou_full,miou_occ") throw DataError(path.string() + ": unexpected history header");
  std::vector<HistoryRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    while (f.size() < 4) f.emplace_back();
    try {
      rows.push_back({std::stoll(f[0]), std::stod(f[1]), parse_opt(f[2]), parse_opt(f[3])});
    } catch (const std::exception&) {
      throw DataError(path.string() + ": malformed row '" + line + "'");
    }
  }
  return rows;
}

std::vector<InstanceRef> instance_index(const std::vector<RgbdScene>& scenes) {
  std::vector<InstanceRef> idx;
  for (std::size_t s = 0; s < scenes.size(); ++s)
    for (std::size_t i = 0; i < scenes[s].instances.size(); ++i)
      idx.push_back({static_cast<int>(s), static_cast<int>(i)});
  return idx;
}

std::vector<CropSample> sample_batch(const std::vector<RgbdScene>& scenes, const std::vector<InstanceRef>& index,
                                     const TrainConfig& config, int input_size, std::int64_t iteration) {
  if (index.empty()) throw DataError("training set has no instances");
  std::vector<CropSample> crops(static_cast<std::size_t>(config.batch_size));
#pragma omp parallel for schedule(static)
  for (int slot = 0; slot < config.batch_size; ++slot) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(slot)));
    const InstanceRef ref = index[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(index.size()) - 1))];
    const RgbdScene& scene = scenes[static_cast<std::size_t>(ref.scene)];
    const InstanceAnnotation& inst = scene.instances[static_cast<std::size_t>(ref.instance)];
    const Bitmap prior = augment_mask(inst.visible_mask, config.augment, rng);
    crops[static_cast<std::size_t>(slot)] = make_crop(scene, prior, input_size, config.expansion_factor, &inst);
  }
  return crops;
}

TrainState::TrainState(const ModelConfig& config)
    : model(config), optimizer(AdamWState::zeros_like(model.params().tensors)) {}

TrainState TrainState::from_checkpoint(const Checkpoint& ckpt) {
  TrainState s(ckpt.model_config);
  s.model = model_from_checkpoint(ckpt);
  if (ckpt.optimizer) {
    s.optimizer = *ckpt.optimizer;
    for (std::size_t i = 0; i < s.optimizer.m.size(); ++i)
      if (i >= s.model.params().size() || !s.optimizer.m[i].same_shape(s.model.params().tensors[i]))
        throw DataError("checkpoint optimizer state does not match the model");
  }
  s.iteration = ckpt.step;
  s.best_score = ckpt.best_score;
  return s;
}

Checkpoint TrainState::to_checkpoint(const TrainConfig& config) const {
  Checkpoint c;
  c.model_config = model.config();
  c.train_config = to_json(config);
  c.step = iteration;
  c.best_score = best_score;
  c.params = model.params();
  c.optimizer = optimizer;
  return c;
}

double loss_and_gradients(const LacNet<float>& model, const Batch<float>& batch, std::vector<Tensor<float>>* grads) {
  Tape<float> tape(grads != nullptr);
  const auto bound = model.bind(tape);
  const HeadOutputs out = model.forward(tape, bound, batch);
  const Var loss = model.loss(tape, out, batch.target_amodal, batch.target_visible);
  const double value = tape.value(loss).data[0];
  if (grads) {
    tape.backward(loss);
    grads->clear();
    for (std::size_t i = 0; i < bound.size(); ++i) {
      const auto& p = model.params().tensors[i];
      grads->push_back(tape.has_grad(bound[i]) ? tape.grad(bound[i]) : Tensor<float>(p.n, p.c, p.h, p.w));
    }
  }
  return value;
}

double train_iteration(TrainState& state, const std::vector<RgbdScene>& scenes, const std::vector<InstanceRef>& index,
                       const TrainConfig& config) {
  const std::int64_t it = state.iteration + 1;
  const Batch<float> batch =
      collate<float>(sample_batch(scenes, index, config, state.model.config().input_size, it));
  std::vector<Tensor<float>> grads;
  const double loss = loss_and_gradients(state.model, batch, &grads);
  if (!std::isfinite(loss)) throw NumericalError("non-finite loss at iteration " + std::to_string(it), it);
  adamw_step(state.model.params().tensors, grads, state.optimizer, config.adamw());
  state.iteration = it;
  return loss;
}

MetricsAccumulator evaluate_dataset(const LacNet<float>* model, const std::vector<RgbdScene>& scenes,
                                    VisibleSource source, const AugmentParams& corruption, std::uint64_t seed) {
  if (source != VisibleSource::copy_visible && !model) throw std::invalid_argument("evaluate_dataset: model required");
  MetricsAccumulator total;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const RgbdScene& scene = scenes[s];
    std::vector<Bitmap> priors;
    for (std::size_t i = 0; i < scene.instances.size(); ++i) {
      const Bitmap& v = scene.instances[i].visible_mask;
      if (source == VisibleSource::corrupted) {
        Rng rng(derive_seed(seed, s, i));
        priors.push_back(augment_mask(v, corruption, rng));
      } else {
        priors.push_back(v);
      }
    }
    std::vector<MaskPrediction> preds;
    if (source == VisibleSource::copy_visible) {
      for (const auto& p : priors) preds.push_back({p, p});
    } else if (!priors.empty()) {
      for (auto& ip : predict_amodal_batch(*model, scene, priors))
        preds.push_back({std::move(ip.image.amodal_mask), std::move(ip.image.visible_mask)});
    }
    total.merge(evaluate_scene(preds, scene.instances, default_boundary_tolerance(scene.width(), scene.height())));
  }
  return total;
}

TrainResult train(const std::vector<RgbdScene>& train_scenes, const std::vector<RgbdScene>& eval_scenes,
                  const ModelConfig& model_config, const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  if (train_scenes.empty()) throw DataError("training set is empty");
  if (eval_scenes.empty()) throw DataError("at least one evaluation scene is required");
  const auto index = instance_index(train_scenes);

  std::vector<HistoryRow> history;
  std::optional<TrainState> loaded;
  if (options.resume) {
    loaded.emplace(TrainState::from_checkpoint(load_checkpoint(*options.resume)));
    const auto hist_path = options.out_dir / "history.csv";
    if (!options.out_dir.empty() && std::filesystem::exists(hist_path))
      for (const auto& r : read_history_csv(hist_path))
        if (r.iteration <= loaded->iteration) history.push_back(r);
  }
  TrainResult result{loaded ? std::move(*loaded) : TrainState(model_config), {}};
  TrainState& state = result.state;
  const bool to_disk = !options.out_dir.empty();
  if (to_disk) std::filesystem::create_directories(options.out_dir);

  while (state.iteration < config.total_iterations) {
    HistoryRow row;
    row.loss = train_iteration(state, train_scenes, index, config);
    row.iteration = state.iteration;
    const bool eval_now = state.iteration % config.eval_every == 0 || state.iteration == config.total_iterations;
    if (eval_now) {
      const MetricsReport rep = make_report(evaluate_dataset(&state.model, eval_scenes, VisibleSource::ground_truth));
      row.miou_full = rep.miou_full.value_or(0.0);
      row.miou_occ = rep.miou_occ.value_or(0.0);
      const bool best = *row.miou_full > state.best_score;
      if (best) state.best_score = *row.miou_full;
      if (to_disk) {
        const Checkpoint ckpt = state.to_checkpoint(config);
        if (best) save_checkpoint(ckpt, options.out_dir / "best.ckpt");
        save_checkpoint(ckpt, options.out_dir / "latest.ckpt");
      }
    }
    history.push_back(row);
    if (eval_now && to_disk) write_history_csv(history, options.out_dir / "history.csv");
    if (options.on_row) options.on_row(row);
    if (options.log_progress && (eval_now || state.iteration % 50 == 0)) {
      std::cerr << "iter " << row.iteration << " loss " << fmt(row.loss, 6);
      if (row.miou_full) std::cerr << " miou_full " << fmt(*row.miou_full, 4) << " miou_occ " << fmt(*row.miou_occ, 4);
      std::cerr << '\n';
    }
  }
  if (to_disk) {
    const Checkpoint ckpt = state.to_checkpoint(config);
    save_checkpoint(ckpt, options.out_dir / "final.ckpt");
    if (!std::filesystem::exists(options.out_dir / "best.ckpt")) save_checkpoint(ckpt, options.out_dir / "best.ckpt");
    write_history_csv(history, options.out_dir / "history.csv");
  }
  result.history = std::move(history);
  return result;
}

}  // namespace lacnet
