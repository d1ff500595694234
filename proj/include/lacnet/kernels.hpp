#pragma once

#include <vector>

#include "lacnet/tensor.hpp"

// OpenMP-parallel compute kernels. Every kernel partitions work so that each output
// element is written by exactly one thread, so results do not depend on thread timing.
// Serial reference versions live in reference_kernels.hpp.
namespace lacnet::kernels {

struct ConvGeometry {
  int stride = 1;
  int pad = 0;
};

inline int conv_out_size(int in, int k, ConvGeometry g) { return (in + 2 * g.pad - k) / g.stride + 1; }

/// y = conv(x, weight) + bias. `bias` may be empty. `col` receives the unfolded input for reuse in backward.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, ConvGeometry g,
                         std::vector<T>* col = nullptr);

template <typename T>
struct ConvGrads {
  Tensor<T> dx, dweight, dbias;
};

/// Gradients of conv2d_forward. Pass the `col` captured in forward, or empty to recompute.
/// `need_dx` = false skips the input gradient.
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy, ConvGeometry g,
                             bool with_bias, bool need_dx, const std::vector<T>* col = nullptr);

template <typename T>
struct GroupNormStats {
  std::vector<T> mean, rstd;  // per (n, group)
};

inline constexpr double kGroupNormEps = 1e-5;

template <typename T>
Tensor<T> group_norm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, int groups,
                             GroupNormStats<T>* stats);

template <typename T>
struct GroupNormGrads {
  Tensor<T> dx, dgamma, dbeta;
};

template <typename T>
GroupNormGrads<T> group_norm_backward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& dy, int groups,
                                      const GroupNormStats<T>& stats);

/// Pixel-center aligned bilinear resize with edge clamping.
template <typename T>
Tensor<T> resize_bilinear_forward(const Tensor<T>& x, int out_h, int out_w);
template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& dy, int in_h, int in_w);

/// Mean over non-overlapping factor×factor blocks.
template <typename T>
Tensor<T> area_downsample(const Tensor<T>& x, int factor);

/// Visible-mask-guided attention over positions of `features` (N,C,h,w) with `mask` (N,1,h,w) in [0,1].
/// query = mask-weighted mean feature (uniform weights when the mask sums to zero);
/// logits = query·feature / sqrt(C); output = softmax over the h·w positions, shape (N,1,h,w).
template <typename T>
Tensor<T> mask_attention_forward(const Tensor<T>& features, const Tensor<T>& mask, Tensor<T>* query = nullptr);
template <typename T>
Tensor<T> mask_attention_backward(const Tensor<T>& features, const Tensor<T>& mask, const Tensor<T>& query,
                                  const Tensor<T>& attention, const Tensor<T>& dattention);

/// Mean binary cross-entropy over all elements, from logits, in the overflow-free form
/// max(z,0) - z*t + log(1 + exp(-|z|)).
template <typename T>
double bce_with_logits_forward(const Tensor<T>& logits, const Tensor<T>& target);
/// d(mean BCE)/dz scaled by `upstream`.
template <typename T>
Tensor<T> bce_with_logits_backward(const Tensor<T>& logits, const Tensor<T>& target, T upstream);

}  // namespace lacnet::kernels
