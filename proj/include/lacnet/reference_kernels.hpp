#pragma once

#include "lacnet/kernels.hpp"

// Straightforward serial loops mirroring kernels.hpp. Used by tests and the benchmark as ground truth.
namespace lacnet::reference {

using kernels::ConvGeometry;

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, ConvGeometry g);
template <typename T>
kernels::ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy,
                                      ConvGeometry g, bool with_bias);

template <typename T>
Tensor<T> group_norm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, int groups);
template <typename T>
kernels::GroupNormGrads<T> group_norm_backward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& dy,
                                               int groups);

template <typename T>
Tensor<T> resize_bilinear_forward(const Tensor<T>& x, int out_h, int out_w);
template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& dy, int in_h, int in_w);

template <typename T>
Tensor<T> mask_attention_forward(const Tensor<T>& features, const Tensor<T>& mask);

}  // namespace lacnet::reference
