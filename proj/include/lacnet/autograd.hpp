#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "lacnet/kernels.hpp"
#include "lacnet/tensor.hpp"

namespace lacnet {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
  bool valid() const { return id != static_cast<std::size_t>(-1); }
};

/// Reverse-mode tape. Values are appended in evaluation order; backward() walks them in reverse.
/// A tape built with record = false keeps values only, for inference.
template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool record = true) : record_(record) {}

  bool recording() const { return record_; }

  Var constant(Tensor<T> value);
  /// Non-owning leaf; `value` must outlive the tape.
  Var parameter(const Tensor<T>& value);
  Var push(Tensor<T> value, bool requires_grad, Backward backward);

  const Tensor<T>& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  /// Gradient buffer, zero-initialized on first access.
  Tensor<T>& grad(Var v);
  bool has_grad(Var v) const { return !nodes_[v.id].grad.data.empty(); }
  /// Adds `g` into the gradient of `v` if it requires one.
  void accumulate(Var v, const Tensor<T>& g);

  /// Seeds d(root)/d(root) = 1 for a single-element root and propagates.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* external = nullptr;
    Tensor<T> grad;
    bool requires_grad = false;
    Backward backward;
  };
  bool record_;
  std::vector<Node> nodes_;
};

namespace ops {

using kernels::ConvGeometry;

template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var weight, Var bias, ConvGeometry g);
template <typename T>
Var group_norm(Tape<T>& tape, Var x, Var gamma, Var beta, int groups);
template <typename T>
Var relu(Tape<T>& tape, Var x);
template <typename T>
Var add(Tape<T>& tape, Var a, Var b);
template <typename T>
Var concat_channels(Tape<T>& tape, const std::vector<Var>& parts);
template <typename T>
Var resize_bilinear(Tape<T>& tape, Var x, int out_h, int out_w);
/// Attention over `features` guided by a constant mask (N,1,h,w).
template <typename T>
Var mask_attention(Tape<T>& tape, Var features, const Tensor<T>& mask);
/// Scalar mean BCE of logits against constant targets.
template <typename T>
Var bce_with_logits(Tape<T>& tape, Var logits, const Tensor<T>& target);

}  // namespace ops
}  // namespace lacnet
