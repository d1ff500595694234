#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "lacnet/errors.hpp"
#include "lacnet/training.hpp"
#include "test_util.hpp"

using namespace lacnet;

namespace {

Tensor<float> scalar(float v) {
  Tensor<float> t(1, 1, 1, 1);
  t.data[0] = v;
  return t;
}

float one_step(float p, float g, double lr, double wd) {
  std::vector<Tensor<float>> params{scalar(p)}, grads{scalar(g)};
  auto state = AdamWState::zeros_like(params);
  AdamWConfig cfg;
  cfg.learning_rate = lr;
  cfg.weight_decay = wd;
  adamw_step(params, grads, state, cfg);
  return params[0].data[0];
}

std::vector<RgbdScene> scenes(int count, std::uint64_t seed = 0) {
  GeneratorConfig g;
  g.seed = seed;
  return generate_scenes(g, 0, count);
}

TrainConfig small_config(int iterations) {
  TrainConfig c;
  c.batch_size = 4;
  c.total_iterations = iterations;
  c.eval_every = iterations;
  c.seed = 11;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("adamw single-step examples") {
  CHECK(one_step(1.0f, 1.0f, 0.1, 0.0) == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(one_step(1.0f, 0.0f, 0.1, 0.0) == 1.0f);
  CHECK(one_step(1.0f, 0.0f, 0.1, 0.1) == doctest::Approx(0.99).epsilon(1e-7));
  CHECK(one_step(-2.0f, -3.0f, 0.01, 0.0) == doctest::Approx(-1.99).epsilon(1e-6));
}

TEST_CASE("adamw matches the recurrences over several steps") {
  std::vector<Tensor<float>> params{scalar(0.5f)};
  auto state = AdamWState::zeros_like(params);
  AdamWConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.weight_decay = 0.2;
  double p = 0.5, m = 0, v = 0;
  const double gs[] = {0.3, -1.2, 0.7, 2.0, -0.1};
  for (int t = 1; t <= 5; ++t) {
    const double g = gs[t - 1];
    std::vector<Tensor<float>> grads{scalar(static_cast<float>(g))};
    adamw_step(params, grads, state, cfg);
    p = static_cast<float>(p);
    p -= cfg.learning_rate * cfg.weight_decay * p;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    p -= cfg.learning_rate * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    CHECK(params[0].data[0] == doctest::Approx(p).epsilon(1e-6));
  }
  CHECK(state.step == 5);
}

TEST_CASE("train config validation") {
  CHECK_NOTHROW(TrainConfig{}.validate());
  TrainConfig c;
  c.eval_every = c.total_iterations + 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.learning_rate = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("batch sampling is a function of (seed, iteration)") {
  const auto data = scenes(4);
  const auto index = instance_index(data);
  const auto cfg = small_config(10);
  const auto a = sample_batch(data, index, cfg, 64, 3);
  const auto b = sample_batch(data, index, cfg, 64, 3);
  const auto c = sample_batch(data, index, cfg, 64, 4);
  REQUIRE(a.size() == 4);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mask == b[i].mask);
    CHECK(a[i].rgb.data == b[i].rgb.data);
    differs |= !(a[i].rgb.data == c[i].rgb.data);
    // Targets are never augmented: the amodal target covers the visible target.
    REQUIRE_FALSE(a[i].target_amodal.empty());
    for (std::size_t k = 0; k < a[i].target_visible.data.size(); ++k)
      if (a[i].target_visible.data[k]) CHECK(a[i].target_amodal.data[k]);
  }
  CHECK(differs);
}

TEST_CASE("learning rate zero leaves parameters bit-identical") {
  const auto data = scenes(2);
  const auto index = instance_index(data);
  auto cfg = small_config(3);
  cfg.learning_rate = 0;
  TrainState state(ModelConfig{});
  const auto before = state.model.params().tensors;
  for (int i = 0; i < 3; ++i) train_iteration(state, data, index, cfg);
  CHECK(state.model.params().tensors == before);
  CHECK(state.iteration == 3);
}

TEST_CASE("overfitting a single scene lowers the loss within 10 iterations") {
  const auto data = scenes(1);
  const auto index = instance_index(data);
  auto cfg = small_config(10);
  cfg.augment.dilate_probability = cfg.augment.erode_probability = cfg.augment.blur_probability = 0;
  TrainState state(ModelConfig{});
  std::vector<double> losses;
  for (int i = 0; i < 10; ++i) losses.push_back(train_iteration(state, data, index, cfg));
  MESSAGE("loss 1: " << losses.front() << "  loss 10: " << losses.back());
  CHECK(losses.back() < losses.front());
  CHECK(losses.back() < 0.9 * losses.front());
}

TEST_CASE("training is deterministic and resumable") {
  const auto data = scenes(3);
  const auto index = instance_index(data);
  const auto cfg = small_config(6);
  auto run = [&](TrainState& s, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(train_iteration(s, data, index, cfg));
    return out;
  };
  TrainState a(ModelConfig{}), b(ModelConfig{});
  const auto la = run(a, 6);
  CHECK(run(b, 6) == la);
  CHECK(a.model.params().tensors == b.model.params().tensors);

  testutil::TempDir dir("resume");
  TrainState c(ModelConfig{});
  const auto first = run(c, 3);
  save_checkpoint(c.to_checkpoint(cfg), dir.path / "mid.ckpt");
  TrainState d = TrainState::from_checkpoint(load_checkpoint(dir.path / "mid.ckpt"));
  CHECK(d.iteration == 3);
  const auto rest = run(d, 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(first[static_cast<std::size_t>(i)] == la[static_cast<std::size_t>(i)]);
    CHECK(rest[static_cast<std::size_t>(i)] == la[static_cast<std::size_t>(i + 3)]);
  }
  CHECK(d.model.params().tensors == a.model.params().tensors);
}

TEST_CASE("checkpoint save, load, save is byte-identical") {
  testutil::TempDir dir("ckpt");
  TrainState s(ModelConfig{});
  const auto data = scenes(2);
  train_iteration(s, data, instance_index(data), small_config(1));
  s.best_score = 0.25;
  save_checkpoint(s.to_checkpoint(small_config(1)), dir.path / "a.ckpt");
  const Checkpoint loaded = load_checkpoint(dir.path / "a.ckpt");
  save_checkpoint(loaded, dir.path / "b.ckpt");
  CHECK(slurp(dir.path / "a.ckpt") == slurp(dir.path / "b.ckpt"));
  CHECK(loaded.step == 1);
  CHECK(loaded.best_score == 0.25);
  CHECK(model_from_checkpoint(loaded).params().tensors == s.model.params().tensors);

  const std::string bytes = slurp(dir.path / "a.ckpt");
  std::ofstream(dir.path / "short.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() - 7);
  CHECK_THROWS_AS(load_checkpoint(dir.path / "short.ckpt"), DataError);
  std::ofstream(dir.path / "long.ckpt", std::ios::binary) << bytes << "x";
  CHECK_THROWS_AS(load_checkpoint(dir.path / "long.ckpt"), DataError);
  CHECK_THROWS_AS(load_checkpoint(dir.path / "missing.ckpt"), DataError);
}

TEST_CASE("non-finite loss aborts with the iteration index") {
  const auto data = scenes(2);
  const auto index = instance_index(data);
  const auto cfg = small_config(5);
  TrainState s(ModelConfig{});
  train_iteration(s, data, index, cfg);
  train_iteration(s, data, index, cfg);
  for (auto& t : s.model.params().tensors) t.fill(std::numeric_limits<float>::quiet_NaN());
  try {
    train_iteration(s, data, index, cfg);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.iteration() == 3);
  }
}

TEST_CASE("history csv round trip") {
  testutil::TempDir dir("hist");
  std::vector<HistoryRow> rows{{1, 0.5, std::nullopt, std::nullopt}, {2, 0.25, 0.75, 0.125}};
  write_history_csv(rows, dir.path / "h.csv");
  CHECK(slurp(dir.path / "h.csv").rfind("iteration,loss,miou_full,miou_occ\n", 0) == 0);
  const auto back = read_history_csv(dir.path / "h.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].iteration == 1);
  CHECK_FALSE(back[0].miou_full.has_value());
  CHECK(back[1].loss == 0.25);
  CHECK(*back[1].miou_full == 0.75);
  CHECK(*back[1].miou_occ == 0.125);
}

TEST_CASE("train writes checkpoints and a gap-free history, and resumes") {
  const auto data = scenes(6);
  const std::vector<RgbdScene> train_set(data.begin(), data.begin() + 5), eval_set(data.begin() + 5, data.end());
  testutil::TempDir full_dir("full"), part_dir("part");
  auto cfg = small_config(6);
  cfg.eval_every = 3;
  const auto full = train(train_set, eval_set, ModelConfig{}, cfg, {full_dir.path});
  REQUIRE(full.history.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(full.history[i].iteration == static_cast<std::int64_t>(i + 1));
  CHECK(full.history[2].miou_full.has_value());
  CHECK_FALSE(full.history[3].miou_full.has_value());
  CHECK(full.history[5].miou_occ.has_value());
  for (const char* f : {"final.ckpt", "best.ckpt", "history.csv"}) CHECK(std::filesystem::exists(full_dir.path / f));

  auto half = cfg;
  half.total_iterations = 3;
  train(train_set, eval_set, ModelConfig{}, half, {part_dir.path});
  TrainOptions resume{part_dir.path};
  resume.resume = part_dir.path / "final.ckpt";
  const auto resumed = train(train_set, eval_set, ModelConfig{}, cfg, resume);
  REQUIRE(resumed.history.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(resumed.history[i].iteration == full.history[i].iteration);
    CHECK(resumed.history[i].loss == full.history[i].loss);
  }
  CHECK(slurp(part_dir.path / "final.ckpt") == slurp(full_dir.path / "final.ckpt"));
  CHECK(read_history_csv(part_dir.path / "history.csv").size() == 6);
}

TEST_CASE("loss over 200 iterations is finite and its moving average falls") {
  const auto data = scenes(64, 5);
  const auto index = instance_index(data);
  TrainConfig cfg;
  cfg.total_iterations = 200;
  cfg.eval_every = 200;
  cfg.seed = 3;
  TrainState s(ModelConfig{});
  std::vector<double> losses;
  for (int i = 0; i < 200; ++i) losses.push_back(train_iteration(s, data, index, cfg));
  for (double l : losses) REQUIRE(std::isfinite(l));
  auto avg = [&](std::size_t end) {
    double sum = 0;
    for (std::size_t i = end - 50; i < end; ++i) sum += losses[i];
    return sum / 50;
  };
  MESSAGE("moving average: first window " << avg(50) << ", last window " << avg(200));
  CHECK(avg(200) <= avg(50));
  CHECK(avg(200) <= avg(150));
}
