#include "lacnet/kernels.hpp"

// Threads split GEMMs into fixed-size blocks below; Eigen must not split them again.
#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace lacnet::kernels {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

using Index = std::ptrdiff_t;

template <typename T>
using BlockMap = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using CBlockMap = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

/// Fixed block sizes keep every output element's summation order independent of the thread count.
constexpr Index kColBlock = 512;
constexpr Index kRowBlock = 8;

/// C (m×n) = A (m×k) · B (k×n), all row-major and contiguous; parallel over column blocks.
template <typename T>
void gemm_cols(const T* a, const T* b, T* c, Index m, Index k, Index n) {
  const Index blocks = (n + kColBlock - 1) / kColBlock;
#pragma omp parallel for schedule(static)
  for (Index bi = 0; bi < blocks; ++bi) {
    const Index j0 = bi * kColBlock, nb = std::min(kColBlock, n - j0);
    BlockMap<T>(c + j0, m, nb, Eigen::OuterStride<>(n)).noalias() =
        CMapMat<T>(a, m, k) * CBlockMap<T>(b + j0, k, nb, Eigen::OuterStride<>(n));
  }
}

/// C (m×n) = A (m×k) · B^T where B is (n×k); parallel over row blocks of C.
template <typename T>
void gemm_abt_rows(const T* a, const T* b, T* c, Index m, Index k, Index n) {
  const Index blocks = (m + kRowBlock - 1) / kRowBlock;
#pragma omp parallel for schedule(static)
  for (Index bi = 0; bi < blocks; ++bi) {
    const Index i0 = bi * kRowBlock, mb = std::min(kRowBlock, m - i0);
    MapMat<T>(c + i0 * n, mb, n).noalias() = CMapMat<T>(a + i0 * k, mb, k) * CMapMat<T>(b, n, k).transpose();
  }
}

/// C (m×n) = A^T · B where A is (k×m) and B is (k×n); parallel over column blocks.
template <typename T>
void gemm_atb_cols(const T* a, const T* b, T* c, Index m, Index k, Index n) {
  const Index blocks = (n + kColBlock - 1) / kColBlock;
#pragma omp parallel for schedule(static)
  for (Index bi = 0; bi < blocks; ++bi) {
    const Index j0 = bi * kColBlock, nb = std::min(kColBlock, n - j0);
    BlockMap<T>(c + j0, m, nb, Eigen::OuterStride<>(n)).noalias() =
        CMapMat<T>(a, k, m).transpose() * CBlockMap<T>(b + j0, k, nb, Eigen::OuterStride<>(n));
  }
}

/// Unfolds x into a (Ci*k*k) × (N*Ho*Wo) matrix.
template <typename T>
void im2col(const Tensor<T>& x, int k, ConvGeometry g, int ho, int wo, std::vector<T>& col) {
  const int N = x.n, Ci = x.c, H = x.h, W = x.w;
  const Index P = static_cast<Index>(ho) * wo;
  const Index cols = N * P;
  col.assign(static_cast<std::size_t>(Ci) * k * k * cols, T{});
#pragma omp parallel for collapse(2) schedule(static)
  for (int ci = 0; ci < Ci; ++ci)
    for (int n = 0; n < N; ++n) {
      const T* src = x.ptr(n, ci);
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          T* dst = col.data() + ((static_cast<Index>(ci) * k + ky) * k + kx) * cols + n * P;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * g.stride - g.pad + ky;
            T* row = dst + static_cast<Index>(oy) * wo;
            if (iy < 0 || iy >= H) continue;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * g.stride - g.pad + kx;
              if (ix >= 0 && ix < W) row[ox] = src[static_cast<Index>(iy) * W + ix];
            }
          }
        }
    }
}

/// Adds the columns back into dx. Each (n, ci) plane is owned by one iteration.
template <typename T>
void col2im(const std::vector<T>& dcol, int k, ConvGeometry g, int ho, int wo, Tensor<T>& dx) {
  const int N = dx.n, Ci = dx.c, H = dx.h, W = dx.w;
  const Index P = static_cast<Index>(ho) * wo;
  const Index cols = N * P;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n)
    for (int ci = 0; ci < Ci; ++ci) {
      T* dst = dx.ptr(n, ci);
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const T* src = dcol.data() + ((static_cast<Index>(ci) * k + ky) * k + kx) * cols + n * P;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * g.stride - g.pad + ky;
            if (iy < 0 || iy >= H) continue;
            const T* row = src + static_cast<Index>(oy) * wo;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * g.stride - g.pad + kx;
              if (ix >= 0 && ix < W) dst[static_cast<Index>(iy) * W + ix] += row[ox];
            }
          }
        }
    }
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, ConvGeometry g,
                         std::vector<T>* col_out) {
  if (weight.c != x.c) throw std::invalid_argument("conv2d: input channels " + std::to_string(x.c) +
                                                   " do not match weight " + weight.shape_string());
  const int k = weight.h, Co = weight.n;
  const int ho = conv_out_size(x.h, k, g), wo = conv_out_size(x.w, k, g);
  if (ho <= 0 || wo <= 0) throw std::invalid_argument("conv2d: output would be empty");
  const Index P = static_cast<Index>(ho) * wo, cols = x.n * P, K = static_cast<Index>(x.c) * k * k;

  std::vector<T> local;
  std::vector<T>& col = col_out ? *col_out : local;
  im2col(x, k, g, ho, wo, col);

  RowMat<T> out(Co, cols);
  gemm_cols(weight.data.data(), col.data(), out.data(), Co, K, cols);

  Tensor<T> y(x.n, Co, ho, wo);
  const bool has_bias = !bias.data.empty();
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < x.n; ++n)
    for (int co = 0; co < Co; ++co) {
      const T b = has_bias ? bias.data[static_cast<std::size_t>(co)] : T{};
      const T* src = out.data() + static_cast<Index>(co) * cols + n * P;
      T* dst = y.ptr(n, co);
      for (Index p = 0; p < P; ++p) dst[p] = src[p] + b;
    }
  return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy, ConvGeometry g,
                             bool with_bias, bool need_dx, const std::vector<T>* col_in) {
  const int k = weight.h, Co = weight.n;
  const int ho = dy.h, wo = dy.w;
  const Index P = static_cast<Index>(ho) * wo, cols = x.n * P, K = static_cast<Index>(x.c) * k * k;

  std::vector<T> local;
  const std::vector<T>* col = col_in;
  if (!col || col->empty()) {
    im2col(x, k, g, ho, wo, local);
    col = &local;
  }

  RowMat<T> dymat(Co, cols);
#pragma omp parallel for collapse(2) schedule(static)
  for (int co = 0; co < Co; ++co)
    for (int n = 0; n < x.n; ++n) {
      const T* src = dy.ptr(n, co);
      T* dst = dymat.data() + static_cast<Index>(co) * cols + n * P;
      for (Index p = 0; p < P; ++p) dst[p] = src[p];
    }

  ConvGrads<T> grads;
  grads.dweight = Tensor<T>(weight.n, weight.c, weight.h, weight.w);
  gemm_abt_rows(dymat.data(), col->data(), grads.dweight.data.data(), Co, cols, K);
  if (with_bias) {
    grads.dbias = Tensor<T>(1, Co, 1, 1);
    for (int co = 0; co < Co; ++co) {
      T s{};
      const T* row = dymat.data() + static_cast<Index>(co) * cols;
      for (Index i = 0; i < cols; ++i) s += row[i];
      grads.dbias.data[static_cast<std::size_t>(co)] = s;
    }
  }
  if (need_dx) {
    std::vector<T> dcol(static_cast<std::size_t>(K * cols));
    gemm_atb_cols(weight.data.data(), dymat.data(), dcol.data(), K, Co, cols);
    grads.dx = Tensor<T>(x.n, x.c, x.h, x.w);
    col2im(dcol, k, g, ho, wo, grads.dx);
  }
  return grads;
}

template <typename T>
Tensor<T> group_norm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, int groups,
                             GroupNormStats<T>* stats) {
  if (groups <= 0 || x.c % groups != 0) throw std::invalid_argument("group_norm: channels not divisible by groups");
  const int cg = x.c / groups;
  const Index m = static_cast<Index>(cg) * x.h * x.w;
  Tensor<T> y(x.n, x.c, x.h, x.w);
  std::vector<T> mean(static_cast<std::size_t>(x.n) * groups), rstd(mean.size());
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < x.n; ++n)
    for (int gi = 0; gi < groups; ++gi) {
      const T* src = x.ptr(n, gi * cg);
      double s = 0, s2 = 0;
      for (Index i = 0; i < m; ++i) s += src[i];
      const double mu = s / static_cast<double>(m);
      for (Index i = 0; i < m; ++i) {
        const double d = src[i] - mu;
        s2 += d * d;
      }
      const double r = 1.0 / std::sqrt(s2 / static_cast<double>(m) + kGroupNormEps);
      mean[static_cast<std::size_t>(n) * groups + gi] = static_cast<T>(mu);
      rstd[static_cast<std::size_t>(n) * groups + gi] = static_cast<T>(r);
      for (int cc = 0; cc < cg; ++cc) {
        const int c = gi * cg + cc;
        const T ga = gamma.data[static_cast<std::size_t>(c)], be = beta.data[static_cast<std::size_t>(c)];
        const T* xs = x.ptr(n, c);
        T* ys = y.ptr(n, c);
        for (std::size_t i = 0; i < x.plane(); ++i)
          ys[i] = static_cast<T>((xs[i] - mu) * r) * ga + be;
      }
    }
  if (stats) {
    stats->mean = std::move(mean);
    stats->rstd = std::move(rstd);
  }
  return y;
}

template <typename T>
GroupNormGrads<T> group_norm_backward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& dy, int groups,
                                      const GroupNormStats<T>& stats) {
  const int cg = x.c / groups;
  const double m = static_cast<double>(cg) * x.h * x.w;
  GroupNormGrads<T> g{Tensor<T>(x.n, x.c, x.h, x.w), Tensor<T>(1, x.c, 1, 1), Tensor<T>(1, x.c, 1, 1)};

#pragma omp parallel for schedule(static)
  for (int c = 0; c < x.c; ++c) {
    const int gi = c / cg;
    double dg = 0, db = 0;
    for (int n = 0; n < x.n; ++n) {
      const double mu = stats.mean[static_cast<std::size_t>(n) * groups + gi];
      const double r = stats.rstd[static_cast<std::size_t>(n) * groups + gi];
      const T* xs = x.ptr(n, c);
      const T* ds = dy.ptr(n, c);
      for (std::size_t i = 0; i < x.plane(); ++i) {
        dg += ds[i] * (xs[i] - mu) * r;
        db += ds[i];
      }
    }
    g.dgamma.data[static_cast<std::size_t>(c)] = static_cast<T>(dg);
    g.dbeta.data[static_cast<std::size_t>(c)] = static_cast<T>(db);
  }

#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < x.n; ++n)
    for (int gi = 0; gi < groups; ++gi) {
      const double mu = stats.mean[static_cast<std::size_t>(n) * groups + gi];
      const double r = stats.rstd[static_cast<std::size_t>(n) * groups + gi];
      double sum_d = 0, sum_dx = 0;
      for (int cc = 0; cc < cg; ++cc) {
        const int c = gi * cg + cc;
        const double ga = gamma.data[static_cast<std::size_t>(c)];
        const T* xs = x.ptr(n, c);
        const T* ds = dy.ptr(n, c);
        for (std::size_t i = 0; i < x.plane(); ++i) {
          const double d = ds[i] * ga;
          sum_d += d;
          sum_dx += d * (xs[i] - mu) * r;
        }
      }
      const double mean_d = sum_d / m, mean_dx = sum_dx / m;
      for (int cc = 0; cc < cg; ++cc) {
        const int c = gi * cg + cc;
        const double ga = gamma.data[static_cast<std::size_t>(c)];
        const T* xs = x.ptr(n, c);
        const T* ds = dy.ptr(n, c);
        T* out = g.dx.ptr(n, c);
        for (std::size_t i = 0; i < x.plane(); ++i) {
          const double xhat = (xs[i] - mu) * r;
          out[i] = static_cast<T>(r * (ds[i] * ga - mean_d - xhat * mean_dx));
        }
      }
    }
  return g;
}

namespace {

struct Tap {
  int i0, i1;
  double w0, w1;
};

std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double s = (o + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, in - 1);
    const double f = s - i0;
    taps[static_cast<std::size_t>(o)] = {i0, i1, 1.0 - f, f};
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> resize_bilinear_forward(const Tensor<T>& x, int out_h, int out_w) {
  const auto ty = bilinear_taps(x.h, out_h), tx = bilinear_taps(x.w, out_w);
  Tensor<T> y(x.n, x.c, out_h, out_w);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c) {
      const T* src = x.ptr(n, c);
      T* dst = y.ptr(n, c);
      for (int oy = 0; oy < out_h; ++oy) {
        const Tap& a = ty[static_cast<std::size_t>(oy)];
        const T* r0 = src + static_cast<Index>(a.i0) * x.w;
        const T* r1 = src + static_cast<Index>(a.i1) * x.w;
        for (int ox = 0; ox < out_w; ++ox) {
          const Tap& b = tx[static_cast<std::size_t>(ox)];
          const double top = b.w0 * r0[b.i0] + b.w1 * r0[b.i1];
          const double bot = b.w0 * r1[b.i0] + b.w1 * r1[b.i1];
          dst[static_cast<Index>(oy) * out_w + ox] = static_cast<T>(a.w0 * top + a.w1 * bot);
        }
      }
    }
  return y;
}

template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& dy, int in_h, int in_w) {
  const auto ty = bilinear_taps(in_h, dy.h), tx = bilinear_taps(in_w, dy.w);
  Tensor<T> dx(dy.n, dy.c, in_h, in_w);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < dy.n; ++n)
    for (int c = 0; c < dy.c; ++c) {
      const T* src = dy.ptr(n, c);
      T* dst = dx.ptr(n, c);
      for (int oy = 0; oy < dy.h; ++oy) {
        const Tap& a = ty[static_cast<std::size_t>(oy)];
        for (int ox = 0; ox < dy.w; ++ox) {
          const Tap& b = tx[static_cast<std::size_t>(ox)];
          const double g = src[static_cast<Index>(oy) * dy.w + ox];
          dst[static_cast<Index>(a.i0) * in_w + b.i0] += static_cast<T>(g * a.w0 * b.w0);
          dst[static_cast<Index>(a.i0) * in_w + b.i1] += static_cast<T>(g * a.w0 * b.w1);
          dst[static_cast<Index>(a.i1) * in_w + b.i0] += static_cast<T>(g * a.w1 * b.w0);
          dst[static_cast<Index>(a.i1) * in_w + b.i1] += static_cast<T>(g * a.w1 * b.w1);
        }
      }
    }
  return dx;
}

template <typename T>
Tensor<T> area_downsample(const Tensor<T>& x, int factor) {
  if (factor <= 0 || x.h % factor != 0 || x.w % factor != 0)
    throw std::invalid_argument("area_downsample: size not divisible by factor");
  const int oh = x.h / factor, ow = x.w / factor;
  Tensor<T> y(x.n, x.c, oh, ow);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double s = 0;
          for (int dy = 0; dy < factor; ++dy)
            for (int dx = 0; dx < factor; ++dx) s += x.at(n, c, oy * factor + dy, ox * factor + dx);
          y.at(n, c, oy, ox) = static_cast<T>(s * inv);
        }
  return y;
}

namespace {

/// Normalized pooling weights for one sample; uniform when the mask sums to zero.
template <typename T>
std::vector<double> pooling_weights(const Tensor<T>& mask, int n) {
  const std::size_t P = mask.plane();
  std::vector<double> u(P);
  double s = 0;
  for (std::size_t i = 0; i < P; ++i) s += mask.ptr(n, 0)[i];
  for (std::size_t i = 0; i < P; ++i) u[i] = s > 0 ? mask.ptr(n, 0)[i] / s : 1.0 / static_cast<double>(P);
  return u;
}

}  // namespace

template <typename T>
Tensor<T> mask_attention_forward(const Tensor<T>& f, const Tensor<T>& mask, Tensor<T>* query_out) {
  if (mask.n != f.n || mask.c != 1 || mask.h != f.h || mask.w != f.w)
    throw std::invalid_argument("mask_attention: mask shape " + mask.shape_string() + " vs features " +
                                f.shape_string());
  const std::size_t P = f.plane();
  const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(f.c));
  Tensor<T> att(f.n, 1, f.h, f.w);
  Tensor<T> query(f.n, f.c, 1, 1);
#pragma omp parallel for schedule(static)
  for (int n = 0; n < f.n; ++n) {
    const auto u = pooling_weights(mask, n);
    std::vector<double> q(static_cast<std::size_t>(f.c));
    for (int c = 0; c < f.c; ++c) {
      double s = 0;
      const T* fs = f.ptr(n, c);
      for (std::size_t i = 0; i < P; ++i) s += u[i] * fs[i];
      q[static_cast<std::size_t>(c)] = s;
      query.at(n, c, 0, 0) = static_cast<T>(s);
    }
    std::vector<double> logit(P, 0.0);
    for (int c = 0; c < f.c; ++c) {
      const T* fs = f.ptr(n, c);
      for (std::size_t i = 0; i < P; ++i) logit[i] += q[static_cast<std::size_t>(c)] * fs[i];
    }
    double mx = -1e300;
    for (auto& l : logit) mx = std::max(mx, l *= inv_sqrt_c);
    double z = 0;
    for (auto& l : logit) z += (l = std::exp(l - mx));
    for (std::size_t i = 0; i < P; ++i) att.ptr(n, 0)[i] = static_cast<T>(logit[i] / z);
  }
  if (query_out) *query_out = std::move(query);
  return att;
}

template <typename T>
Tensor<T> mask_attention_backward(const Tensor<T>& f, const Tensor<T>& mask, const Tensor<T>& query,
                                  const Tensor<T>& att, const Tensor<T>& datt) {
  const std::size_t P = f.plane();
  const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(f.c));
  Tensor<T> df(f.n, f.c, f.h, f.w);
#pragma omp parallel for schedule(static)
  for (int n = 0; n < f.n; ++n) {
    const auto u = pooling_weights(mask, n);
    const T* a = att.ptr(n, 0);
    const T* da = datt.ptr(n, 0);
    double dot = 0;
    for (std::size_t i = 0; i < P; ++i) dot += static_cast<double>(a[i]) * da[i];
    std::vector<double> dlogit(P);
    for (std::size_t i = 0; i < P; ++i) dlogit[i] = a[i] * (da[i] - dot) * inv_sqrt_c;
    for (int c = 0; c < f.c; ++c) {
      const T* fs = f.ptr(n, c);
      const double q = query.at(n, c, 0, 0);
      double dq = 0;
      for (std::size_t i = 0; i < P; ++i) dq += dlogit[i] * fs[i];
      T* out = df.ptr(n, c);
      for (std::size_t i = 0; i < P; ++i) out[i] = static_cast<T>(dlogit[i] * q + u[i] * dq);
    }
  }
  return df;
}

template <typename T>
double bce_with_logits_forward(const Tensor<T>& z, const Tensor<T>& t) {
  require_same_shape(z, t, "bce_with_logits");
  double s = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zi = z.data[i], ti = t.data[i];
    s += std::max(zi, 0.0) - zi * ti + std::log1p(std::exp(-std::abs(zi)));
  }
  return s / static_cast<double>(z.size());
}

template <typename T>
Tensor<T> bce_with_logits_backward(const Tensor<T>& z, const Tensor<T>& t, T upstream) {
  Tensor<T> dz(z.n, z.c, z.h, z.w);
  const double scale = static_cast<double>(upstream) / static_cast<double>(z.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zi = z.data[i];
    const double sig = zi >= 0 ? 1.0 / (1.0 + std::exp(-zi)) : std::exp(zi) / (1.0 + std::exp(zi));
    dz.data[i] = static_cast<T>((sig - t.data[i]) * scale);
  }
  return dz;
}

#define LACNET_INSTANTIATE(T)                                                                                   \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, ConvGeometry,        \
                                    std::vector<T>*);                                                           \
  template ConvGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, ConvGeometry,    \
                                        bool, bool, const std::vector<T>*);                                     \
  template Tensor<T> group_norm_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int,             \
                                        GroupNormStats<T>*);                                                    \
  template GroupNormGrads<T> group_norm_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int,    \
                                                 const GroupNormStats<T>&);                                     \
  template Tensor<T> resize_bilinear_forward(const Tensor<T>&, int, int);                                      \
  template Tensor<T> resize_bilinear_backward(const Tensor<T>&, int, int);                                     \
  template Tensor<T> area_downsample(const Tensor<T>&, int);                                                   \
  template Tensor<T> mask_attention_forward(const Tensor<T>&, const Tensor<T>&, Tensor<T>*);                   \
  template Tensor<T> mask_attention_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,             \
                                             const Tensor<T>&, const Tensor<T>&);                               \
  template double bce_with_logits_forward(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> bce_with_logits_backward(const Tensor<T>&, const Tensor<T>&, T);

LACNET_INSTANTIATE(float)
LACNET_INSTANTIATE(double)
#undef LACNET_INSTANTIATE

}  // namespace lacnet::kernels
