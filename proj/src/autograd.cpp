#include "lacnet/autograd.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>
#include <utility>

namespace lacnet {

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
  nodes_.push_back(Node{std::move(value), nullptr, {}, false, {}});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::parameter(const Tensor<T>& value) {
  nodes_.push_back(Node{{}, &value, {}, record_, {}});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::push(Tensor<T> value, bool requires_grad, Backward backward) {
  const bool rg = record_ && requires_grad;
  nodes_.push_back(Node{std::move(value), nullptr, {}, rg, rg ? std::move(backward) : Backward{}});
  return Var{nodes_.size() - 1};
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
  const Node& n = nodes_[v.id];
  return n.external ? *n.external : n.owned;
}

template <typename T>
Tensor<T>& Tape<T>::grad(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.data.empty()) {
    const Tensor<T>& val = value(v);
    n.grad = Tensor<T>(val.n, val.c, val.h, val.w);
  }
  return n.grad;
}

template <typename T>
void Tape<T>::accumulate(Var v, const Tensor<T>& g) {
  if (!v.valid() || !nodes_[v.id].requires_grad) return;
  Tensor<T>& dst = grad(v);
  require_same_shape(dst, g, "accumulate");
  for (std::size_t i = 0; i < g.size(); ++i) dst.data[i] += g.data[i];
}

template <typename T>
void Tape<T>::backward(Var root) {
  if (!record_) throw std::logic_error("backward on a non-recording tape");
  if (value(root).size() != 1) throw std::invalid_argument("backward root must be a scalar");
  grad(root).data[0] = T{1};
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && !n.grad.data.empty()) n.backward(*this, i);
  }
}

namespace ops {

namespace {

template <typename T>
bool any_grad(const Tape<T>& tape, std::initializer_list<Var> vs) {
  for (Var v : vs)
    if (v.valid() && tape.requires_grad(v)) return true;
  return false;
}

}  // namespace

template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var weight, Var bias, ConvGeometry g) {
  static const Tensor<T> no_bias;
  const bool rg = any_grad(tape, {x, weight, bias});
  auto col = std::make_shared<std::vector<T>>();
  Tensor<T> y = kernels::conv2d_forward(tape.value(x), tape.value(weight), bias.valid() ? tape.value(bias) : no_bias,
                                        g, rg && tape.recording() ? col.get() : nullptr);
  return tape.push(std::move(y), rg, [x, weight, bias, g, col](Tape<T>& t, std::size_t self) {
    auto grads = kernels::conv2d_backward(t.value(x), t.value(weight), t.grad(Var{self}), g, bias.valid(),
                                          t.requires_grad(x), col.get());
    col->clear();
    col->shrink_to_fit();
    if (t.requires_grad(x)) t.accumulate(x, grads.dx);
    t.accumulate(weight, grads.dweight);
    if (bias.valid()) t.accumulate(bias, grads.dbias);
  });
}

template <typename T>
Var group_norm(Tape<T>& tape, Var x, Var gamma, Var beta, int groups) {
  auto stats = std::make_shared<kernels::GroupNormStats<T>>();
  Tensor<T> y = kernels::group_norm_forward(tape.value(x), tape.value(gamma), tape.value(beta), groups, stats.get());
  return tape.push(std::move(y), any_grad(tape, {x, gamma, beta}),
                   [x, gamma, beta, groups, stats](Tape<T>& t, std::size_t self) {
                     auto g = kernels::group_norm_backward(t.value(x), t.value(gamma), t.grad(Var{self}), groups,
                                                           *stats);
                     t.accumulate(x, g.dx);
                     t.accumulate(gamma, g.dgamma);
                     t.accumulate(beta, g.dbeta);
                   });
}

template <typename T>
Var relu(Tape<T>& tape, Var x) {
  Tensor<T> y = tape.value(x);
  for (auto& v : y.data) v = v > T{} ? v : T{};
  return tape.push(std::move(y), any_grad(tape, {x}), [x](Tape<T>& t, std::size_t self) {
    const Tensor<T>& xv = t.value(x);
    Tensor<T> dx = t.grad(Var{self});
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (!(xv.data[i] > T{})) dx.data[i] = T{};
    t.accumulate(x, dx);
  });
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  require_same_shape(tape.value(a), tape.value(b), "add");
  Tensor<T> y = tape.value(a);
  const Tensor<T>& bv = tape.value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += bv.data[i];
  return tape.push(std::move(y), any_grad(tape, {a, b}), [a, b](Tape<T>& t, std::size_t self) {
    const Tensor<T> g = t.grad(Var{self});
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

template <typename T>
Var concat_channels(Tape<T>& tape, const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
  const Tensor<T>& first = tape.value(parts.front());
  int channels = 0;
  bool rg = false;
  for (Var p : parts) {
    const Tensor<T>& v = tape.value(p);
    if (v.n != first.n || v.h != first.h || v.w != first.w)
      throw std::invalid_argument("concat_channels: mismatched shapes " + v.shape_string() + " vs " +
                                  first.shape_string());
    channels += v.c;
    rg = rg || tape.requires_grad(p);
  }
  Tensor<T> y(first.n, channels, first.h, first.w);
  const std::size_t plane = first.plane();
  int offset = 0;
  for (Var p : parts) {
    const Tensor<T>& v = tape.value(p);
    for (int n = 0; n < v.n; ++n)
      for (int c = 0; c < v.c; ++c) std::copy(v.ptr(n, c), v.ptr(n, c) + plane, y.ptr(n, offset + c));
    offset += v.c;
  }
  return tape.push(std::move(y), rg, [parts](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(Var{self});
    int off = 0;
    for (Var p : parts) {
      const Tensor<T>& v = t.value(p);
      if (t.requires_grad(p)) {
        Tensor<T> gp(v.n, v.c, v.h, v.w);
        for (int n = 0; n < v.n; ++n)
          for (int c = 0; c < v.c; ++c) std::copy(g.ptr(n, off + c), g.ptr(n, off + c) + v.plane(), gp.ptr(n, c));
        t.accumulate(p, gp);
      }
      off += v.c;
    }
  });
}

template <typename T>
Var resize_bilinear(Tape<T>& tape, Var x, int out_h, int out_w) {
  const Tensor<T>& xv = tape.value(x);
  if (xv.h == out_h && xv.w == out_w) return x;
  const int in_h = xv.h, in_w = xv.w;
  return tape.push(kernels::resize_bilinear_forward(xv, out_h, out_w), any_grad(tape, {x}),
                   [x, in_h, in_w](Tape<T>& t, std::size_t self) {
                     t.accumulate(x, kernels::resize_bilinear_backward(t.grad(Var{self}), in_h, in_w));
                   });
}

template <typename T>
Var mask_attention(Tape<T>& tape, Var features, const Tensor<T>& mask) {
  auto query = std::make_shared<Tensor<T>>();
  auto mask_copy = std::make_shared<Tensor<T>>(mask);
  Tensor<T> att = kernels::mask_attention_forward(tape.value(features), mask, query.get());
  return tape.push(std::move(att), any_grad(tape, {features}),
                   [features, query, mask_copy](Tape<T>& t, std::size_t self) {
                     t.accumulate(features, kernels::mask_attention_backward(t.value(features), *mask_copy, *query,
                                                                             t.value(Var{self}), t.grad(Var{self})));
                   });
}

template <typename T>
Var bce_with_logits(Tape<T>& tape, Var logits, const Tensor<T>& target) {
  for (T v : target.data)
    if (v != T{0} && v != T{1}) throw std::invalid_argument("bce_with_logits: targets must be binary");
  Tensor<T> out(1, 1, 1, 1, static_cast<T>(kernels::bce_with_logits_forward(tape.value(logits), target)));
  auto target_copy = std::make_shared<Tensor<T>>(target);
  return tape.push(std::move(out), any_grad(tape, {logits}), [logits, target_copy](Tape<T>& t, std::size_t self) {
    t.accumulate(logits, kernels::bce_with_logits_backward(t.value(logits), *target_copy, t.grad(Var{self}).data[0]));
  });
}

}  // namespace ops

#define LACNET_INSTANTIATE(T)                                                                \
  template class Tape<T>;                                                                    \
  template Var ops::conv2d(Tape<T>&, Var, Var, Var, ops::ConvGeometry);                      \
  template Var ops::group_norm(Tape<T>&, Var, Var, Var, int);                                \
  template Var ops::relu(Tape<T>&, Var);                                                     \
  template Var ops::add(Tape<T>&, Var, Var);                                                 \
  template Var ops::concat_channels(Tape<T>&, const std::vector<Var>&);                      \
  template Var ops::resize_bilinear(Tape<T>&, Var, int, int);                                \
  template Var ops::mask_attention(Tape<T>&, Var, const Tensor<T>&);                         \
  template Var ops::bce_with_logits(Tape<T>&, Var, const Tensor<T>&);

LACNET_INSTANTIATE(float)
LACNET_INSTANTIATE(double)
#undef LACNET_INSTANTIATE

}  // namespace lacnet
