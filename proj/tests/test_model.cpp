#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "lacnet/errors.hpp"
#include "lacnet/kernels.hpp"
#include "lacnet/model.hpp"
#include "test_util.hpp"

using namespace lacnet;

namespace {

Tensor<float> rnd(int n, int c, int h, int w, std::uint64_t seed, double lo = -1, double hi = 1) {
  Tensor<float> t(n, c, h, w);
  Rng rng(seed);
  for (auto& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

Batch<float> random_batch(int n, int s, std::uint64_t seed, double lo = 0, double hi = 1) {
  Batch<float> b{rnd(n, 3, s, s, seed, lo, hi), rnd(n, 1, s, s, seed + 1, lo, hi), Tensor<float>(n, 1, s, s),
                 Tensor<float>(n, 1, s, s), Tensor<float>(n, 1, s, s)};
  for (int i = 0; i < n; ++i)
    for (int y = s / 4; y < s / 2; ++y)
      for (int x = s / 4; x < 3 * s / 4; ++x) b.mask.at(i, 0, y, x) = 1;
  b.target_visible = b.mask;
  b.target_amodal = b.mask;
  return b;
}

bool all_finite(const Tensor<float>& t) {
  return std::all_of(t.data.begin(), t.data.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace

TEST_CASE("encoder stage shapes follow the stride schedule") {
  const LacNet<float> net(ModelConfig{});
  Tape<float> tape(false);
  const auto bound = net.bind(tape);
  const auto b = random_batch(2, 64, 1);
  const auto pyr = net.encode(tape, bound, tape.constant(b.rgb), Stream::rgb);
  const int sizes[4] = {16, 8, 4, 2};
  for (int s = 0; s < 4; ++s) {
    const auto& v = tape.value(pyr[static_cast<std::size_t>(s)]);
    CHECK(v.h == sizes[s]);
    CHECK(v.w == sizes[s]);
    CHECK(v.c == net.config().channels[static_cast<std::size_t>(s)]);
    CHECK(v.h * kStageStrides[static_cast<std::size_t>(s)] == 64);
  }
  CHECK_THROWS_AS(net.encode(tape, bound, tape.constant(b.depth), Stream::rgb), ConfigError);
  CHECK_THROWS_AS(net.encode(tape, bound, tape.constant(b.rgb), Stream::stacked), ConfigError);
  const auto again = net.encode(tape, bound, tape.constant(b.rgb), Stream::rgb);
  CHECK(tape.value(again[3]) == tape.value(pyr[3]));
}

TEST_CASE("zero input gives finite features") {
  const LacNet<float> net(ModelConfig{});
  Tape<float> tape(false);
  const auto bound = net.bind(tape);
  Batch<float> b = random_batch(1, 64, 2);
  b.rgb.fill(0);
  b.depth.fill(0);
  const auto out = net.forward(tape, bound, b);
  CHECK(all_finite(tape.value(out.amodal_logits)));
  CHECK(all_finite(tape.value(out.visible_logits)));
}

TEST_CASE("linear fusion starts as the mean of the two streams") {
  const LacNet<float> net(ModelConfig{});
  Tape<float> tape(false);
  const auto bound = net.bind(tape);
  const auto b = random_batch(2, 64, 3);
  const auto rgb = net.encode(tape, bound, tape.constant(b.rgb), Stream::rgb);
  const auto dep = net.encode(tape, bound, tape.constant(b.depth), Stream::depth);
  const auto fused = net.fuse(tape, bound, rgb, dep);
  for (std::size_t s = 0; s < 4; ++s) {
    const auto &f = tape.value(fused[s]), &a = tape.value(rgb[s]), &d = tape.value(dep[s]);
    REQUIRE(f.same_shape(a));
    CHECK(f.c == net.config().channels[s]);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(f.data[i] == doctest::Approx(0.5f * (a.data[i] + d.data[i])).epsilon(1e-6));
  }
}

TEST_CASE("linear fusion with a zero depth pyramid is an affine map of rgb") {
  LacNet<float> net(ModelConfig{});
  // Randomize the stage-2 projection so the oracle is not the trivial mean.
  const auto wi = net.params().index_of("fuse.stage2.weight"), bi = net.params().index_of("fuse.stage2.bias");
  auto& W = net.params().tensors[wi];
  auto& B = net.params().tensors[bi];
  W = rnd(W.n, W.c, 1, 1, 4);
  B = rnd(1, B.c, 1, 1, 5);
  Tape<float> tape(false);
  const auto bound = net.bind(tape);
  const auto b = random_batch(2, 64, 6);
  const auto rgb = net.encode(tape, bound, tape.constant(b.rgb), Stream::rgb);
  FeaturePyramid zero;
  for (std::size_t s = 0; s < 4; ++s) {
    const auto& v = tape.value(rgb[s]);
    zero[s] = tape.constant(Tensor<float>(v.n, v.c, v.h, v.w));
  }
  const auto fused = net.fuse(tape, bound, rgb, zero);
  const auto& x = tape.value(rgb[1]);
  const auto& y = tape.value(fused[1]);
  const int C = x.c;
  // Dense oracle: y[:, o, p] = sum_i W[o, i] x[:, i, p] + b[o] (depth half contributes nothing).
  double worst = 0;
  for (int n = 0; n < x.n; ++n)
    for (int o = 0; o < C; ++o)
      for (int py = 0; py < x.h; ++py)
        for (int px = 0; px < x.w; ++px) {
          double s = B.data[static_cast<std::size_t>(o)];
          for (int i = 0; i < C; ++i) s += static_cast<double>(W.at(o, i, 0, 0)) * x.at(n, i, py, px);
          worst = std::max(worst, std::abs(s - y.at(n, o, py, px)));
        }
  CHECK(worst < 1e-4);
}

TEST_CASE("attention map is a distribution over stride-32 positions") {
  const LacNet<float> net(ModelConfig{});
  Tape<float> tape(false);
  const auto bound = net.bind(tape);
  const auto b = random_batch(3, 64, 7);
  const auto fused = net.fuse(tape, bound, net.encode(tape, bound, tape.constant(b.rgb), Stream::rgb),
                              net.encode(tape, bound, tape.constant(b.depth), Stream::depth));
  const auto& a = tape.value(net.attention_map(tape, fused, b.mask));
  CHECK(a.h == 2);
  CHECK(a.c == 1);
  for (int n = 0; n < a.n; ++n) {
    double s = 0;
    for (std::size_t i = 0; i < a.plane(); ++i) {
      CHECK(a.ptr(n, 0)[i] >= 0);
      s += a.ptr(n, 0)[i];
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("decoder output shapes and finiteness") {
  for (int size : {64, 128}) {
    ModelConfig cfg;
    cfg.input_size = size;
    const LacNet<float> net(cfg);
    Tape<float> tape(false);
    const auto bound = net.bind(tape);
    const auto b = random_batch(2, size, 8, -3, 3);
    const auto out = net.forward(tape, bound, b);
    for (Var v : {out.amodal_logits, out.visible_logits}) {
      const auto& t = tape.value(v);
      CHECK(t.n == 2);
      CHECK(t.c == 1);
      CHECK(t.h == size);
      CHECK(t.w == size);
      CHECK(all_finite(t));
    }
    // Channel counts do not depend on the input size.
    CHECK(net.params().total_size() == LacNet<float>(ModelConfig{}).params().total_size());
  }
}

TEST_CASE("fusion strategies") {
  ModelConfig lin, conv, stacked, stacked6;
  conv.fusion = FusionStrategy::conv1x1;
  stacked.fusion = FusionStrategy::stacked6ch;
  stacked6 = stacked;
  stacked6.depth_as_3ch = true;
  const auto n_lin = LacNet<float>(lin).params().total_size();
  const auto n_stacked = LacNet<float>(stacked).params().total_size();
  CHECK(n_stacked < n_lin);
  CHECK(LacNet<float>(stacked6).params().total_size() > n_stacked);
  for (const auto& cfg : {conv, stacked, stacked6}) {
    const LacNet<float> net(cfg);
    Tape<float> tape(false);
    const auto bound = net.bind(tape);
    const auto out = net.forward(tape, bound, random_batch(1, 64, 9));
    CHECK(all_finite(tape.value(out.amodal_logits)));
  }
  const LacNet<float> st(stacked);
  Tape<float> tape(false);
  const auto bound = st.bind(tape);
  CHECK_THROWS_AS(st.encode(tape, bound, tape.constant(random_batch(1, 64, 1).rgb), Stream::rgb), ConfigError);
}

TEST_CASE("loss values") {
  const LacNet<float> net(ModelConfig{});
  Tape<float> tape;
  Tensor<float> t(1, 1, 4, 4), z(1, 1, 4, 4);
  for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = static_cast<float>(i % 3 == 0);
  for (std::size_t i = 0; i < t.size(); ++i) z.data[i] = t.data[i] > 0 ? 100.0f : -100.0f;
  HeadOutputs out{tape.constant(z), tape.constant(z)};
  CHECK(tape.value(net.loss(tape, out, t, t)).data[0] < 1e-6);
  HeadOutputs zero{tape.constant(Tensor<float>(1, 1, 4, 4)), tape.constant(Tensor<float>(1, 1, 4, 4))};
  CHECK(tape.value(net.loss(tape, zero, t, t)).data[0] == doctest::Approx(2 * std::log(2.0)).epsilon(1e-6));
  Tensor<float> bad = t;
  bad.data[0] = 0.5f;
  CHECK_THROWS(net.loss(tape, zero, bad, t));
}

TEST_CASE("initialization is a function of the seed") {
  ModelConfig a, b;
  b.seed = 1;
  CHECK(LacNet<float>(a).params().tensors == LacNet<float>(a).params().tensors);
  CHECK_FALSE(LacNet<float>(a).params().tensors == LacNet<float>(b).params().tensors);
  const LacNet<float> net(a);
  const auto back = net.cast<double>().cast<float>();
  CHECK(back.params().tensors == net.params().tensors);
}

TEST_CASE("model config json round trip and validation") {
  ModelConfig c = ModelConfig::tiny();
  c.fusion = FusionStrategy::conv1x1;
  c.seed = 77;
  const ModelConfig d = model_config_from_json(to_json(c));
  CHECK(to_json(d) == to_json(c));
  ModelConfig bad;
  bad.input_size = 48;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(parse_fusion("sum"), ConfigError);
}

TEST_CASE("resnet50 preset builds the ResNet stage layout") {
  ModelConfig cfg = ModelConfig::resnet50();
  cfg.input_size = 64;
  const LacNet<float> net(cfg);
  // Two bottleneck encoders: roughly 2 x 23.5M parameters in the stages.
  CHECK(net.params().total_size() > 40'000'000);
  Tape<float> tape(false);
  const auto bound = net.bind(tape);
  const auto pyr = net.encode(tape, bound, tape.constant(rnd(1, 3, 64, 64, 1, 0, 1)), Stream::rgb);
  CHECK(tape.value(pyr[0]).c == 256);
  CHECK(tape.value(pyr[3]).c == 2048);
  CHECK(tape.value(pyr[3]).h == 2);
}

TEST_CASE("predict_amodal returns image-sized binary masks") {
  GeneratorConfig gc;
  const RgbdScene scene = generate_scene(gc, 0);
  const LacNet<float> net(ModelConfig{});
  const auto p = predict_amodal(net, scene, scene.instances[0].visible_mask);
  CHECK(p.image.amodal_mask.width == scene.width());
  CHECK(p.image.visible_mask.height == scene.height());
  CHECK(p.crop.amodal_prob.width == 64);
  for (float v : p.image.amodal_prob.data) CHECK((v >= 0 && v <= 1));
  const auto q = predict_amodal(net, scene, scene.instances[0].visible_mask);
  CHECK(q.image.amodal_mask == p.image.amodal_mask);
  CHECK(q.image.amodal_prob == p.image.amodal_prob);
  CHECK_THROWS_AS(predict_amodal(net, scene, Bitmap(scene.width(), scene.height())), DataError);
  // Batched inference agrees with one-at-a-time inference.
  std::vector<Bitmap> priors;
  for (const auto& inst : scene.instances) priors.push_back(inst.visible_mask);
  const auto batch = predict_amodal_batch(net, scene, priors, 2);
  REQUIRE(batch.size() == priors.size());
  for (std::size_t i = 0; i < priors.size(); ++i) {
    const auto single = predict_amodal(net, scene, priors[i]);
    for (std::size_t k = 0; k < single.crop.amodal_prob.data.size(); ++k)
      CHECK(batch[i].crop.amodal_prob.data[k] == doctest::Approx(single.crop.amodal_prob.data[k]).epsilon(1e-5));
  }
}

TEST_CASE("analytic gradients match finite differences") {
  const auto r = testutil::gradient_check(150, 3);
  MESSAGE("passed " << r.passed << "/" << r.sampled << ", worst relative error " << r.worst_rel);
  CHECK(r.passed >= r.sampled * 99 / 100);
  CHECK(r.groups_covered >= r.groups * 9 / 10);
}
