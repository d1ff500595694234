#include "lacnet/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace lacnet {

AdamWState AdamWState::zeros_like(const std::vector<Tensor<float>>& params) {
  AdamWState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.n, p.c, p.h, p.w);
    s.v.emplace_back(p.n, p.c, p.h, p.w);
  }
  return s;
}

void adamw_step(std::vector<Tensor<float>>& params, const std::vector<Tensor<float>>& grads, AdamWState& state,
                const AdamWConfig& config) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw std::invalid_argument("adamw_step: parameter, gradient and state counts differ");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  const double lr = config.learning_rate, decay = config.learning_rate * config.weight_decay;
  const double b1 = config.beta1, b2 = config.beta2, eps = config.epsilon;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k].data;
    const auto& g = grads[k].data;
    auto& m = state.m[k].data;
    auto& v = state.v[k].data;
    if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size())
      throw std::invalid_argument("adamw_step: shape mismatch");
    const auto n = static_cast<std::ptrdiff_t>(p.size());
#pragma omp parallel for schedule(static) if (n > 4096)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const double gi = g[static_cast<std::size_t>(i)];
      double pi = p[static_cast<std::size_t>(i)];
      pi -= decay * pi;
      const double mi = b1 * m[static_cast<std::size_t>(i)] + (1.0 - b1) * gi;
      const double vi = b2 * v[static_cast<std::size_t>(i)] + (1.0 - b2) * gi * gi;
      m[static_cast<std::size_t>(i)] = static_cast<float>(mi);
      v[static_cast<std::size_t>(i)] = static_cast<float>(vi);
      pi -= lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps);
      p[static_cast<std::size_t>(i)] = static_cast<float>(pi);
    }
  }
}

}  // namespace lacnet
