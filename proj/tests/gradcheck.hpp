#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lacnet/model.hpp"
#include "lacnet/rng.hpp"
#include "lacnet/scene.hpp"

namespace testutil {

struct GradCheck {
  std::size_t sampled = 0, passed = 0;
  std::size_t groups = 0, groups_covered = 0;
  double worst_rel = 0;
  std::vector<double> rel_errors;
};

/// Central differences (step 1e-4, double precision) of the full loss against backprop
/// on `samples` parameter coordinates of the tiny model. Every parameter tensor gets at least
/// one coordinate; the rest are drawn uniformly over all coordinates.
inline GradCheck gradient_check(int samples, std::uint64_t seed, double tol = 1e-3) {
  using namespace lacnet;
  ModelConfig cfg = ModelConfig::tiny();
  cfg.seed = seed;
  const LacNet<double> model = LacNet<float>(cfg).cast<double>();

  GeneratorConfig gc;
  gc.seed = seed;
  const RgbdScene scene = generate_scene(gc, 0);
  std::vector<CropSample> crops;
  for (std::size_t i = 0; i < std::min<std::size_t>(2, scene.instances.size()); ++i)
    crops.push_back(make_crop(scene, scene.instances[i].visible_mask, cfg.input_size, 2.0, &scene.instances[i]));
  const Batch<double> batch = collate<double>(crops);

  auto loss_of = [&](const LacNet<double>& m) {
    Tape<double> t(false);
    const auto bound = m.bind(t);
    const HeadOutputs out = m.forward(t, bound, batch);
    return t.value(m.loss(t, out, batch.target_amodal, batch.target_visible)).data[0];
  };

  Tape<double> tape;
  const auto bound = model.bind(tape);
  const HeadOutputs out = model.forward(tape, bound, batch);
  const Var loss = model.loss(tape, out, batch.target_amodal, batch.target_visible);
  tape.backward(loss);

  const auto& params = model.params();
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t g = 0; g < params.size(); ++g) coords.emplace_back(g, 0);
  std::vector<std::size_t> offsets{0};
  for (const auto& t : params.tensors) offsets.push_back(offsets.back() + t.size());
  Rng rng(derive_seed(seed, 0x9c));
  for (auto& c : coords) c.second = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(params.tensors[c.first].size()) - 1));
  while (coords.size() < static_cast<std::size_t>(samples)) {
    const auto flat = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(offsets.back()) - 1));
    const auto g = static_cast<std::size_t>(std::upper_bound(offsets.begin(), offsets.end(), flat) - offsets.begin() - 1);
    coords.emplace_back(g, flat - offsets[g]);
  }
  // Keep the first `samples` (one per tensor first, so all groups are covered when samples >= groups).
  coords.resize(static_cast<std::size_t>(samples));

  GradCheck r;
  r.groups = params.size();
  std::vector<char> covered(params.size(), 0);
  const double h = 1e-4;
  LacNet<double> probe = model;
  for (const auto& [g, i] : coords) {
    const double analytic = tape.has_grad(bound[g]) ? tape.grad(bound[g]).data[i] : 0.0;
    double& p = probe.params().tensors[g].data[i];
    const double orig = p;
    p = orig + h;
    const double up = loss_of(probe);
    p = orig - h;
    const double down = loss_of(probe);
    p = orig;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    const double rel = scale == 0 ? 0.0 : std::abs(analytic - numeric) / scale;
    r.rel_errors.push_back(rel);
    r.worst_rel = std::max(r.worst_rel, rel);
    ++r.sampled;
    if (rel < tol) {
      ++r.passed;
      covered[g] = 1;
    }
  }
  r.groups_covered = static_cast<std::size_t>(std::count(covered.begin(), covered.end(), 1));
  return r;
}

}  // namespace testutil
