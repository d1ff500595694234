#include "lacnet/commands.hpp"

#include <omp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lacnet/checkpoint.hpp"
#include "lacnet/config_file.hpp"
#include "lacnet/dataset_io.hpp"
#include "lacnet/errors.hpp"
#include "lacnet/grasp.hpp"
#include "lacnet/metrics.hpp"
#include "lacnet/png_io.hpp"
#include "lacnet/render.hpp"
#include "lacnet/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lacnet {
namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

struct Global {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::vector<std::string> argv;
};

/// One manifest per output directory, written before any artifact.
void write_manifest(const fs::path& dir, const std::string& command, const Global& g, const json& config,
                    std::uint64_t seed, const json& inputs, const json& outputs) {
  fs::create_directories(dir);
  json m{{"command", command},
         {"argv", g.argv},
         {"config", config},
         {"seed", seed},
         {"threads", g.threads},
         {"tool_version", kToolVersion},
         {"started_at", utc_now()},
         {"inputs", inputs},
         {"outputs", outputs}};
  std::ofstream os(dir / "manifest.json", std::ios::trunc);
  if (!os) throw DataError((dir / "manifest.json").string() + ": cannot write");
  os << m.dump(2) << '\n';
}

fs::path parent_or_dot(const fs::path& p) { return p.has_parent_path() ? p.parent_path() : fs::path("."); }

json generator_json(const GeneratorConfig& c) {
  std::vector<std::string> shapes;
  for (auto s : c.shape_set) shapes.emplace_back(shape_name(s));
  return {{"canvas_size", c.canvas_size},
          {"object_count_range", {c.object_count_range.first, c.object_count_range.second}},
          {"shape_set", shapes},
          {"object_size_range", {c.object_size_range.first, c.object_size_range.second}},
          {"object_depth_range", {c.object_depth_range.first, c.object_depth_range.second}},
          {"background_depth", c.background_depth},
          {"foam_cover_fraction_range", {c.foam_cover_fraction_range.first, c.foam_cover_fraction_range.second}},
          {"foam_disc_radius_range", {c.foam_disc_radius_range.first, c.foam_disc_radius_range.second}},
          {"color_noise_std", c.color_noise_std},
          {"min_visible_fraction", c.min_visible_fraction},
          {"seed", c.seed}};
}

int cmd_gen_data(const Global& g, const std::string& config_path, const fs::path& out_dir, std::int64_t count,
                 std::int64_t first, std::ostream& out) {
  GeneratorConfig cfg;
  if (!config_path.empty()) cfg = generator_config_from(ConfigFile::load(config_path));
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  if (count < 0) throw ConfigError("--count must be non-negative");
  write_manifest(out_dir, "gen-data", g, generator_json(cfg), cfg.seed, {{"config", config_path}},
                 {{"dataset", out_dir.string()}, {"first", first}, {"count", count}});
  // Generate in chunks to bound memory on large counts.
  const std::int64_t chunk = 256;
  for (std::int64_t s = first; s < first + count; s += chunk) {
    const auto scenes = generate_scenes(cfg, s, std::min(chunk, first + count - s));
    save_dataset(scenes, out_dir);
  }
  out << "wrote " << count << " scenes to " << out_dir.string() << '\n';
  return 0;
}

int cmd_train(const Global& g, const fs::path& data, const std::string& eval_data, const std::string& config_path,
              const fs::path& out_dir, std::optional<std::int64_t> iterations, const std::string& resume,
              const std::string& fusion, std::ostream& out) {
  ModelConfig mc;
  TrainConfig tc;
  if (!config_path.empty()) apply_train_config(ConfigFile::load(config_path), mc, tc);
  if (iterations) tc.total_iterations = *iterations;
  if (!fusion.empty()) mc.fusion = parse_fusion(fusion);
  if (g.seed) tc.seed = *g.seed;
  mc.seed = tc.seed;
  if (tc.total_iterations > 0) tc.eval_every = std::min(tc.eval_every, tc.total_iterations);
  mc.validate();
  tc.validate();

  std::vector<RgbdScene> train_set = load_dataset(data), eval_set;
  if (!eval_data.empty()) {
    eval_set = load_dataset(eval_data);
  } else {
    if (train_set.size() < 2) throw DataError(data.string() + ": need at least 2 scenes to hold one out for evaluation");
    const std::size_t hold = std::max<std::size_t>(1, train_set.size() / 10);
    eval_set.assign(train_set.end() - static_cast<std::ptrdiff_t>(hold), train_set.end());
    train_set.resize(train_set.size() - hold);
  }
  write_manifest(out_dir, "train", g, {{"model", to_json(mc)}, {"train", to_json(tc)}}, tc.seed,
                 {{"data", data.string()}, {"eval_data", eval_data}, {"config", config_path}, {"resume", resume}},
                 {{"final", (out_dir / "final.ckpt").string()},
                  {"best", (out_dir / "best.ckpt").string()},
                  {"history", (out_dir / "history.csv").string()}});
  TrainOptions opts;
  opts.out_dir = out_dir;
  opts.log_progress = true;
  if (!resume.empty()) opts.resume = fs::path(resume);
  const TrainResult r = train(train_set, eval_set, mc, tc, opts);
  out << "trained " << r.state.iteration << " iterations on " << train_set.size() << " scenes; checkpoints in "
      << out_dir.string() << '\n';
  return 0;
}

std::vector<Bitmap> load_mask_dir(const fs::path& dir, const RgbdScene& scene) {
  const fs::path sd = dir / scene.scene_id;
  if (!fs::is_directory(sd)) throw DataError(sd.string() + ": no visible masks for scene");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(sd))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<Bitmap> masks;
  for (const auto& f : files) {
    Bitmap m = png::read_mask(f);
    if (m.width != scene.width() || m.height != scene.height()) throw DataError(f.string() + ": mask size differs from scene");
    if (!m.empty()) masks.push_back(std::move(m));
  }
  return masks;
}

int cmd_eval(const Global& g, const fs::path& data, const std::string& checkpoint, const std::string& mask_dir,
             bool copy_visible, bool corrupt_visible, const std::string& out_dir, std::ostream& out) {
  const std::uint64_t seed = g.seed.value_or(0);
  std::string mode = "gt-visible";
  if (!mask_dir.empty()) mode = "mask-dir";
  if (copy_visible) mode = "copy-visible";
  if (corrupt_visible) mode = "corrupt-visible";
  if (!copy_visible && checkpoint.empty()) throw ConfigError("--checkpoint is required unless --copy-visible is given");
  if (!out_dir.empty())
    write_manifest(out_dir, "eval", g, {{"mode", mode}}, seed,
                   {{"data", data.string()}, {"checkpoint", checkpoint}, {"mask_dir", mask_dir}},
                   {{"report", (fs::path(out_dir) / "report.json").string()}});
  const auto scenes = load_dataset(data);
  std::optional<LacNet<float>> model;
  if (!copy_visible) model.emplace(model_from_checkpoint(load_checkpoint(checkpoint)));

  MetricsAccumulator acc;
  if (!mask_dir.empty()) {
    for (const auto& scene : scenes) {
      const auto priors = load_mask_dir(mask_dir, scene);
      std::vector<MaskPrediction> preds;
      if (copy_visible) {
        for (const auto& p : priors) preds.push_back({p, p});
      } else if (!priors.empty()) {
        for (auto& ip : predict_amodal_batch(*model, scene, priors))
          preds.push_back({std::move(ip.image.amodal_mask), std::move(ip.image.visible_mask)});
      }
      acc.merge(evaluate_scene(preds, scene.instances, default_boundary_tolerance(scene.width(), scene.height())));
    }
  } else {
    const VisibleSource src = copy_visible      ? VisibleSource::copy_visible
                              : corrupt_visible ? VisibleSource::corrupted
                                                : VisibleSource::ground_truth;
    AugmentParams corruption;
    corruption.dilate_probability = corruption.erode_probability = corruption.blur_probability = 0.5;
    acc = evaluate_dataset(model ? &*model : nullptr, scenes, src, corruption, seed);
  }
  const MetricsReport rep = make_report(acc);
  json j = to_json(rep);
  j["mode"] = mode;
  if (!out_dir.empty()) {
    std::ofstream os(fs::path(out_dir) / "report.json", std::ios::trunc);
    os << j.dump(2) << '\n';
  }
  out << format_table(rep, "evaluation (" + mode + ", " + std::to_string(scenes.size()) + " scenes)");
  return 0;
}

int cmd_render(const Global& g, const fs::path& scene_dir, const std::vector<std::string>& pred_amodal,
               const std::vector<std::string>& pred_visible, const fs::path& out_image, std::ostream& out) {
  if (pred_amodal.size() != pred_visible.size())
    throw ConfigError("--pred-amodal and --pred-visible must list the same number of files");
  write_manifest(parent_or_dot(out_image), "render", g, json::object(), g.seed.value_or(0),
                 {{"scene", scene_dir.string()}, {"pred_amodal", pred_amodal}, {"pred_visible", pred_visible}},
                 {{"image", out_image.string()}});
  const RgbdScene scene = load_scene(scene_dir);
  std::vector<MaskPrediction> preds;
  for (std::size_t i = 0; i < pred_amodal.size(); ++i) {
    MaskPrediction p{png::read_mask(pred_amodal[i]), png::read_mask(pred_visible[i])};
    if (p.amodal.width != scene.width() || p.amodal.height != scene.height() || !p.visible.same_shape(p.amodal))
      throw DataError(pred_amodal[i] + ": prediction size differs from scene");
    preds.push_back(std::move(p));
  }
  png::write_u8(out_image, render_overlay(scene, preds));
  out << "wrote " << out_image.string() << '\n';
  return 0;
}

int cmd_grasp(const Global& g, const fs::path& scene_dir, const std::string& checkpoint, int instance,
              const std::string& visible_mask, bool copy_visible, const std::string& out_json, std::ostream& out) {
  if (!out_json.empty())
    write_manifest(parent_or_dot(out_json), "grasp", g, {{"instance", instance}, {"copy_visible", copy_visible}},
                   g.seed.value_or(0),
                   {{"scene", scene_dir.string()}, {"checkpoint", checkpoint}, {"visible_mask", visible_mask}},
                   {{"grasp", out_json}});
  const RgbdScene scene = load_scene(scene_dir);
  Bitmap prior;
  if (!visible_mask.empty()) {
    prior = png::read_mask(visible_mask);
    if (prior.width != scene.width() || prior.height != scene.height())
      throw DataError(visible_mask + ": mask size differs from scene");
  } else {
    if (instance < 0 || instance >= static_cast<int>(scene.instances.size()))
      throw ConfigError("--instance " + std::to_string(instance) + " out of range (scene has " +
                        std::to_string(scene.instances.size()) + " instances)");
    prior = scene.instances[static_cast<std::size_t>(instance)].visible_mask;
  }
  if (prior.empty()) throw DataError("visible mask is empty");
  Bitmap amodal = prior, visible = prior;
  if (!copy_visible) {
    if (checkpoint.empty()) throw ConfigError("--checkpoint is required unless --copy-visible is given");
    const LacNet<float> model = model_from_checkpoint(load_checkpoint(checkpoint));
    InstancePrediction ip = predict_amodal(model, scene, prior);
    amodal = std::move(ip.image.amodal_mask);
    visible = std::move(ip.image.visible_mask);
    if (amodal.empty()) throw DataError("predicted amodal mask is empty");
    // Depth is read under the visible prior when the visible head predicts nothing.
    if (visible.empty()) visible = prior;
  }
  const GraspPoint gp = generate_grasp(scene, amodal, visible);
  const json j{{"pixel", {gp.pixel.u, gp.pixel.v}},
               {"point3d", {gp.point3d.x, gp.point3d.y, gp.point3d.z}},
               {"strategy", gp.strategy},
               {"region", region_name(classify_grasp_region(gp.pixel, amodal))}};
  if (!out_json.empty()) {
    std::ofstream os(out_json, std::ios::trunc);
    if (!os) throw DataError(out_json + ": cannot write");
    os << j.dump(2) << '\n';
  }
  out << j.dump() << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Amodal instance segmentation toolkit: data generation, training, evaluation, grasping"};
  app.require_subcommand(1);
  Global g;
  g.argv = args;
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Override the seed of the command's config");
  app.add_option("--threads", g.threads, "OpenMP thread count (0 = runtime default)")->check(CLI::NonNegativeNumber);

  std::string config, data, eval_data, out_dir, checkpoint, mask_dir, resume, fusion, scene_dir, out_path,
      visible_mask;
  std::int64_t count = 0, first = 0, iterations = -1;
  int instance = 0;
  bool gt_visible = false, copy_visible = false, corrupt_visible = false;
  std::vector<std::string> pred_amodal, pred_visible;

  auto* gen = app.add_subcommand("gen-data", "Generate a procedural dataset");
  gen->add_option("--config", config, "Generator config file (key = value)");
  gen->add_option("--out", out_dir, "Output dataset directory")->required();
  gen->add_option("--count", count, "Number of scenes")->required();
  gen->add_option("--first", first, "Index of the first scene");

  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--data", data, "Training dataset directory")->required();
  tr->add_option("--eval-data", eval_data, "Evaluation dataset (default: last 10% of --data)");
  tr->add_option("--config", config, "Model/training config file (key = value)");
  tr->add_option("--out", out_dir, "Output directory for checkpoints and history")->required();
  tr->add_option("--iterations", iterations, "Override total_iterations");
  tr->add_option("--resume", resume, "Checkpoint to resume from");
  tr->add_option("--fusion", fusion, "linear | conv1x1 | stacked6ch");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--data", data, "Dataset directory")->required();
  ev->add_option("--checkpoint", checkpoint, "Model checkpoint");
  auto* gt_flag = ev->add_flag("--gt-visible", gt_visible, "Use ground-truth visible masks as priors (default)");
  auto* md = ev->add_option("--mask-dir", mask_dir, "Visible masks as <dir>/<scene_id>/*.png");
  auto* cv = ev->add_flag("--copy-visible", copy_visible, "Baseline: predict the visible prior as the amodal mask");
  auto* cr = ev->add_flag("--corrupt-visible", corrupt_visible, "Corrupt GT visible masks with mask augmentation");
  gt_flag->excludes(md)->excludes(cr);
  cr->excludes(md);
  (void)cv;
  ev->add_option("--out", out_path, "Directory for report.json and manifest");

  auto* rd = app.add_subcommand("render", "Render an overlay image");
  rd->add_option("--scene", scene_dir, "Scene directory")->required();
  rd->add_option("--pred-amodal", pred_amodal, "Predicted amodal mask PNGs");
  rd->add_option("--pred-visible", pred_visible, "Predicted visible mask PNGs (same order)");
  rd->add_option("--out", out_path, "Output PNG")->required();

  auto* gr = app.add_subcommand("grasp", "Compute a top-grasp point for one instance");
  gr->add_option("--scene", scene_dir, "Scene directory")->required();
  gr->add_option("--checkpoint", checkpoint, "Model checkpoint");
  gr->add_option("--instance", instance, "Instance index whose GT visible mask is the prior");
  gr->add_option("--visible-mask", visible_mask, "Visible prior PNG instead of --instance");
  gr->add_flag("--copy-visible", copy_visible, "Use the visible prior as the amodal mask");
  gr->add_option("--out", out_path, "Also write the JSON here");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    std::stringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? 0 : 1;
  }
  if (app.count("--seed")) g.seed = seed;
  if (g.threads > 0) omp_set_num_threads(g.threads);

  try {
    if (*gen) return cmd_gen_data(g, config, out_dir, count, first, out);
    if (*tr)
      return cmd_train(g, data, eval_data, config, out_dir,
                       iterations >= 0 ? std::optional<std::int64_t>(iterations) : std::nullopt, resume, fusion, out);
    if (*ev) return cmd_eval(g, data, checkpoint, mask_dir, copy_visible, corrupt_visible, out_path, out);
    if (*rd) return cmd_render(g, scene_dir, pred_amodal, pred_visible, out_path, out);
    if (*gr) return cmd_grasp(g, scene_dir, checkpoint, instance, visible_mask, copy_visible, out_path, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure at iteration " << e.iteration() << ": " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace lacnet
