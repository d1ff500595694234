#include "lacnet/reference_kernels.hpp"

#include <algorithm>
#include <cmath>

namespace lacnet::reference {

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, ConvGeometry g) {
  const int k = weight.h;
  const int ho = kernels::conv_out_size(x.h, k, g), wo = kernels::conv_out_size(x.w, k, g);
  Tensor<T> y(x.n, weight.n, ho, wo);
  for (int n = 0; n < x.n; ++n)
    for (int co = 0; co < weight.n; ++co)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          T s = bias.data.empty() ? T{} : bias.data[static_cast<std::size_t>(co)];
          for (int ci = 0; ci < x.c; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * g.stride - g.pad + ky, ix = ox * g.stride - g.pad + kx;
                if (iy >= 0 && iy < x.h && ix >= 0 && ix < x.w) s += weight.at(co, ci, ky, kx) * x.at(n, ci, iy, ix);
              }
          y.at(n, co, oy, ox) = s;
        }
  return y;
}

template <typename T>
kernels::ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy,
                                      ConvGeometry g, bool with_bias) {
  const int k = weight.h;
  kernels::ConvGrads<T> gr{Tensor<T>(x.n, x.c, x.h, x.w), Tensor<T>(weight.n, weight.c, k, k),
                           with_bias ? Tensor<T>(1, weight.n, 1, 1) : Tensor<T>()};
  for (int n = 0; n < x.n; ++n)
    for (int co = 0; co < weight.n; ++co)
      for (int oy = 0; oy < dy.h; ++oy)
        for (int ox = 0; ox < dy.w; ++ox) {
          const T d = dy.at(n, co, oy, ox);
          if (with_bias) gr.dbias.data[static_cast<std::size_t>(co)] += d;
          for (int ci = 0; ci < x.c; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * g.stride - g.pad + ky, ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                gr.dweight.at(co, ci, ky, kx) += d * x.at(n, ci, iy, ix);
                gr.dx.at(n, ci, iy, ix) += d * weight.at(co, ci, ky, kx);
              }
        }
  return gr;
}

template <typename T>
Tensor<T> group_norm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, int groups) {
  const int cg = x.c / groups;
  Tensor<T> y(x.n, x.c, x.h, x.w);
  for (int n = 0; n < x.n; ++n)
    for (int gi = 0; gi < groups; ++gi) {
      double s = 0, s2 = 0, m = 0;
      for (int c = gi * cg; c < (gi + 1) * cg; ++c)
        for (int yy = 0; yy < x.h; ++yy)
          for (int xx = 0; xx < x.w; ++xx) {
            s += x.at(n, c, yy, xx);
            m += 1;
          }
      const double mu = s / m;
      for (int c = gi * cg; c < (gi + 1) * cg; ++c)
        for (int yy = 0; yy < x.h; ++yy)
          for (int xx = 0; xx < x.w; ++xx) s2 += (x.at(n, c, yy, xx) - mu) * (x.at(n, c, yy, xx) - mu);
      const double r = 1.0 / std::sqrt(s2 / m + kernels::kGroupNormEps);
      for (int c = gi * cg; c < (gi + 1) * cg; ++c)
        for (int yy = 0; yy < x.h; ++yy)
          for (int xx = 0; xx < x.w; ++xx)
            y.at(n, c, yy, xx) = static_cast<T>((x.at(n, c, yy, xx) - mu) * r * gamma.data[static_cast<std::size_t>(c)] +
                                                beta.data[static_cast<std::size_t>(c)]);
    }
  return y;
}

template <typename T>
kernels::GroupNormGrads<T> group_norm_backward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& dy,
                                               int groups) {
  // Textbook form: dx_i = r/m * (m*g_i - sum g - xhat_i * sum g*xhat), g = dy*gamma.
  const int cg = x.c / groups;
  kernels::GroupNormGrads<T> gr{Tensor<T>(x.n, x.c, x.h, x.w), Tensor<T>(1, x.c, 1, 1), Tensor<T>(1, x.c, 1, 1)};
  for (int n = 0; n < x.n; ++n)
    for (int gi = 0; gi < groups; ++gi) {
      const int c0 = gi * cg, c1 = (gi + 1) * cg;
      const double m = static_cast<double>(cg) * x.h * x.w;
      double s = 0;
      for (int c = c0; c < c1; ++c)
        for (int i = 0; i < x.h * x.w; ++i) s += x.ptr(n, c)[i];
      const double mu = s / m;
      double s2 = 0;
      for (int c = c0; c < c1; ++c)
        for (int i = 0; i < x.h * x.w; ++i) s2 += (x.ptr(n, c)[i] - mu) * (x.ptr(n, c)[i] - mu);
      const double r = 1.0 / std::sqrt(s2 / m + kernels::kGroupNormEps);
      double sg = 0, sgx = 0;
      for (int c = c0; c < c1; ++c)
        for (int i = 0; i < x.h * x.w; ++i) {
          const double xhat = (x.ptr(n, c)[i] - mu) * r;
          const double gg = dy.ptr(n, c)[i] * gamma.data[static_cast<std::size_t>(c)];
          sg += gg;
          sgx += gg * xhat;
          gr.dgamma.data[static_cast<std::size_t>(c)] += static_cast<T>(dy.ptr(n, c)[i] * xhat);
          gr.dbeta.data[static_cast<std::size_t>(c)] += dy.ptr(n, c)[i];
        }
      for (int c = c0; c < c1; ++c)
        for (int i = 0; i < x.h * x.w; ++i) {
          const double xhat = (x.ptr(n, c)[i] - mu) * r;
          const double gg = dy.ptr(n, c)[i] * gamma.data[static_cast<std::size_t>(c)];
          gr.dx.ptr(n, c)[i] = static_cast<T>(r / m * (m * gg - sg - xhat * sgx));
        }
    }
  return gr;
}

namespace {

/// Source coordinate and clamped neighbours for output index o.
void tap(int in, int out, int o, int& i0, int& i1, double& f) {
  double s = (o + 0.5) * static_cast<double>(in) / out - 0.5;
  s = std::clamp(s, 0.0, static_cast<double>(in - 1));
  i0 = static_cast<int>(std::floor(s));
  i1 = std::min(i0 + 1, in - 1);
  f = s - i0;
}

}  // namespace

template <typename T>
Tensor<T> resize_bilinear_forward(const Tensor<T>& x, int out_h, int out_w) {
  Tensor<T> y(x.n, x.c, out_h, out_w);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c)
      for (int oy = 0; oy < out_h; ++oy)
        for (int ox = 0; ox < out_w; ++ox) {
          int y0, y1, x0, x1;
          double fy, fx;
          tap(x.h, out_h, oy, y0, y1, fy);
          tap(x.w, out_w, ox, x0, x1, fx);
          y.at(n, c, oy, ox) = static_cast<T>((1 - fy) * ((1 - fx) * x.at(n, c, y0, x0) + fx * x.at(n, c, y0, x1)) +
                                              fy * ((1 - fx) * x.at(n, c, y1, x0) + fx * x.at(n, c, y1, x1)));
        }
  return y;
}

template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& dy, int in_h, int in_w) {
  Tensor<T> dx(dy.n, dy.c, in_h, in_w);
  for (int n = 0; n < dy.n; ++n)
    for (int c = 0; c < dy.c; ++c)
      for (int oy = 0; oy < dy.h; ++oy)
        for (int ox = 0; ox < dy.w; ++ox) {
          int y0, y1, x0, x1;
          double fy, fx;
          tap(in_h, dy.h, oy, y0, y1, fy);
          tap(in_w, dy.w, ox, x0, x1, fx);
          const double g = dy.at(n, c, oy, ox);
          dx.at(n, c, y0, x0) += static_cast<T>(g * (1 - fy) * (1 - fx));
          dx.at(n, c, y0, x1) += static_cast<T>(g * (1 - fy) * fx);
          dx.at(n, c, y1, x0) += static_cast<T>(g * fy * (1 - fx));
          dx.at(n, c, y1, x1) += static_cast<T>(g * fy * fx);
        }
  return dx;
}

template <typename T>
Tensor<T> mask_attention_forward(const Tensor<T>& f, const Tensor<T>& mask) {
  Tensor<T> att(f.n, 1, f.h, f.w);
  const int P = f.h * f.w;
  for (int n = 0; n < f.n; ++n) {
    double total = 0;
    for (int i = 0; i < P; ++i) total += mask.ptr(n, 0)[i];
    std::vector<double> q(static_cast<std::size_t>(f.c), 0.0);
    for (int c = 0; c < f.c; ++c)
      for (int i = 0; i < P; ++i) {
        const double wgt = total > 0 ? mask.ptr(n, 0)[i] / total : 1.0 / P;
        q[static_cast<std::size_t>(c)] += wgt * f.ptr(n, c)[i];
      }
    std::vector<double> logits(static_cast<std::size_t>(P), 0.0);
    for (int i = 0; i < P; ++i) {
      for (int c = 0; c < f.c; ++c) logits[static_cast<std::size_t>(i)] += q[static_cast<std::size_t>(c)] * f.ptr(n, c)[i];
      logits[static_cast<std::size_t>(i)] /= std::sqrt(static_cast<double>(f.c));
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    for (double l : logits) z += std::exp(l - mx);
    for (int i = 0; i < P; ++i) att.ptr(n, 0)[i] = static_cast<T>(std::exp(logits[static_cast<std::size_t>(i)] - mx) / z);
  }
  return att;
}

#define LACNET_INSTANTIATE(T)                                                                                       \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, ConvGeometry);           \
  template kernels::ConvGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,             \
                                                 ConvGeometry, bool);                                              \
  template Tensor<T> group_norm_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int);                \
  template kernels::GroupNormGrads<T> group_norm_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                                          int);                                                    \
  template Tensor<T> resize_bilinear_forward(const Tensor<T>&, int, int);                                          \
  template Tensor<T> resize_bilinear_backward(const Tensor<T>&, int, int);                                         \
  template Tensor<T> mask_attention_forward(const Tensor<T>&, const Tensor<T>&);

LACNET_INSTANTIATE(float)
LACNET_INSTANTIATE(double)
#undef LACNET_INSTANTIATE

}  // namespace lacnet::reference
