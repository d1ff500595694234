#pragma once

#include <cstdint>
#include <vector>

#include "lacnet/tensor.hpp"

namespace lacnet {

struct AdamWConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-2;
};

struct AdamWState {
  std::int64_t step = 0;
  std::vector<Tensor<float>> m, v;

  /// Zero moments shaped like `params`.
  static AdamWState zeros_like(const std::vector<Tensor<float>>& params);
};

/// One AdamW update with decoupled weight decay and bias correction:
///   p <- p - lr*wd*p
///   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2
///   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
void adamw_step(std::vector<Tensor<float>>& params, const std::vector<Tensor<float>>& grads, AdamWState& state,
                const AdamWConfig& config);

}  // namespace lacnet
