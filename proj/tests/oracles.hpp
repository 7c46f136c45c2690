#pragma once

// Naive-loop reference implementations. Each one recomputes its result
// directly from the defining formula, index by index, without sharing code
// with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "depthbench/core/random.hpp"
#include "depthbench/core/tensor.hpp"

namespace oracle {

using depthbench::Shape;
using depthbench::Tensor;
using Vec = std::vector<double>;

inline Tensor random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = false) {
  Vec v(depthbench::shape_numel(shape));
  for (auto& x : v) x = depthbench::uniform_real(rng, lo, hi);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

inline std::size_t rand_int(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return static_cast<std::size_t>(depthbench::uniform_int(rng, static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const Tensor& a, const Vec& b) { return max_abs_diff(a.values(), b); }

// out[n][o][y][x] = b[o] + sum_{c,ky,kx} in[n][c][y*s+ky-p][x*s+kx-p] * w[o][c][ky][kx]
inline Vec conv2d(const Vec& in, std::size_t N, std::size_t C, std::size_t H, std::size_t W, const Vec& w,
                  std::size_t O, std::size_t K, const Vec* bias, std::size_t s, std::size_t p, std::size_t& OH,
                  std::size_t& OW) {
  OH = (H + 2 * p - K) / s + 1;
  OW = (W + 2 * p - K) / s + 1;
  Vec out(N * O * OH * OW, 0.0);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t y = 0; y < OH; ++y)
        for (std::size_t x = 0; x < OW; ++x) {
          double acc = bias ? (*bias)[o] : 0.0;
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t ky = 0; ky < K; ++ky)
              for (std::size_t kx = 0; kx < K; ++kx) {
                const long iy = static_cast<long>(y * s + ky) - static_cast<long>(p);
                const long ix = static_cast<long>(x * s + kx) - static_cast<long>(p);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(H) || ix >= static_cast<long>(W)) continue;
                acc += in[((n * C + c) * H + static_cast<std::size_t>(iy)) * W + static_cast<std::size_t>(ix)] *
                       w[((o * C + c) * K + ky) * K + kx];
              }
          out[((n * O + o) * OH + y) * OW + x] = acc;
        }
  return out;
}

inline Vec conv3d(const Vec& in, std::size_t N, std::size_t C, std::size_t D, std::size_t H, std::size_t W,
                  const Vec& w, std::size_t O, std::size_t K, const Vec* bias, std::size_t p) {
  const std::size_t OD = D + 2 * p - K + 1, OH = H + 2 * p - K + 1, OW = W + 2 * p - K + 1;
  Vec out(N * O * OD * OH * OW, 0.0);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t z = 0; z < OD; ++z)
        for (std::size_t y = 0; y < OH; ++y)
          for (std::size_t x = 0; x < OW; ++x) {
            double acc = bias ? (*bias)[o] : 0.0;
            for (std::size_t c = 0; c < C; ++c)
              for (std::size_t kz = 0; kz < K; ++kz)
                for (std::size_t ky = 0; ky < K; ++ky)
                  for (std::size_t kx = 0; kx < K; ++kx) {
                    const long iz = static_cast<long>(z + kz) - static_cast<long>(p);
                    const long iy = static_cast<long>(y + ky) - static_cast<long>(p);
                    const long ix = static_cast<long>(x + kx) - static_cast<long>(p);
                    if (iz < 0 || iy < 0 || ix < 0 || iz >= static_cast<long>(D) || iy >= static_cast<long>(H) ||
                        ix >= static_cast<long>(W))
                      continue;
                    acc += in[(((n * C + c) * D + static_cast<std::size_t>(iz)) * H + static_cast<std::size_t>(iy)) * W +
                              static_cast<std::size_t>(ix)] *
                           w[(((o * C + c) * K + kz) * K + ky) * K + kx];
                  }
            out[(((n * O + o) * OD + z) * OH + y) * OW + x] = acc;
          }
  return out;
}

inline Vec maxpool2x2(const Vec& in, std::size_t planes, std::size_t H, std::size_t W) {
  Vec out(planes * (H / 2) * (W / 2));
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < H / 2; ++y)
      for (std::size_t x = 0; x < W / 2; ++x) {
        double m = -INFINITY;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) m = std::max(m, in[(p * H + 2 * y + dy) * W + 2 * x + dx]);
        out[(p * (H / 2) + y) * (W / 2) + x] = m;
      }
  return out;
}

// Align-corners-false: output i samples src = (i + 0.5) * in / out - 0.5,
// clamped to [0, in - 1]; linear blend of floor/ceil neighbours.
inline double sample_1d_coord(std::size_t i, std::size_t in, std::size_t out, std::size_t& i0, std::size_t& i1) {
  double src = (static_cast<double>(i) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
  src = std::clamp(src, 0.0, static_cast<double>(in - 1));
  i0 = static_cast<std::size_t>(std::floor(src));
  i1 = std::min(i0 + 1, in - 1);
  return src - static_cast<double>(i0);
}

inline Vec bilinear(const Vec& in, std::size_t planes, std::size_t H, std::size_t W, std::size_t OH, std::size_t OW) {
  Vec out(planes * OH * OW);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < OH; ++y)
      for (std::size_t x = 0; x < OW; ++x) {
        std::size_t y0, y1, x0, x1;
        const double fy = sample_1d_coord(y, H, OH, y0, y1);
        const double fx = sample_1d_coord(x, W, OW, x0, x1);
        auto at = [&](std::size_t yy, std::size_t xx) { return in[(p * H + yy) * W + xx]; };
        const double top = at(y0, x0) * (1 - fx) + at(y0, x1) * fx;
        const double bot = at(y1, x0) * (1 - fx) + at(y1, x1) * fx;
        out[(p * OH + y) * OW + x] = top * (1 - fy) + bot * fy;
      }
  return out;
}

inline Vec nearest2x(const Vec& in, std::size_t planes, std::size_t H, std::size_t W) {
  Vec out(planes * 4 * H * W);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < 2 * H; ++y)
      for (std::size_t x = 0; x < 2 * W; ++x) out[(p * 2 * H + y) * 2 * W + x] = in[(p * H + y / 2) * W + x / 2];
  return out;
}

// Training-mode batchnorm over axis 1 with biased variance.
inline Vec batchnorm_train(const Vec& x, std::size_t N, std::size_t C, std::size_t S, const Vec& gamma,
                           const Vec& beta, double eps, Vec* mean_out = nullptr, Vec* unbiased_var_out = nullptr) {
  Vec out(x.size());
  for (std::size_t c = 0; c < C; ++c) {
    double m = 0;
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t s = 0; s < S; ++s) m += x[(n * C + c) * S + s];
    m /= static_cast<double>(N * S);
    double v = 0;
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t s = 0; s < S; ++s) v += (x[(n * C + c) * S + s] - m) * (x[(n * C + c) * S + s] - m);
    if (mean_out) mean_out->push_back(m);
    if (unbiased_var_out) unbiased_var_out->push_back(v / static_cast<double>(N * S - 1));
    v /= static_cast<double>(N * S);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t s = 0; s < S; ++s)
        out[(n * C + c) * S + s] = gamma[c] * (x[(n * C + c) * S + s] - m) / std::sqrt(v + eps) + beta[c];
  }
  return out;
}

inline Vec batchnorm_eval(const Vec& x, std::size_t N, std::size_t C, std::size_t S, const Vec& gamma, const Vec& beta,
                          const Vec& rm, const Vec& rv, double eps) {
  Vec out(x.size());
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t s = 0; s < S; ++s)
        out[(n * C + c) * S + s] = (x[(n * C + c) * S + s] - rm[c]) / std::sqrt(rv[c] + eps) * gamma[c] + beta[c];
  return out;
}

// cost[n][i][y][x] = mean_c |L[n][c][y][x] - R[n][c][y][x - shift_i]|; out-of-range
// candidates take the maximum in-bounds cost of the same (n, y, x).
inline Vec cost_volume(const Vec& L, const Vec& R, std::size_t N, std::size_t C, std::size_t H, std::size_t W,
                       const std::vector<int>& shifts) {
  const std::size_t D = shifts.size();
  Vec out(N * D * H * W);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        Vec col(D, NAN);
        double mx = -INFINITY;
        for (std::size_t i = 0; i < D; ++i) {
          const long xr = static_cast<long>(x) - shifts[i];
          if (xr < 0 || xr >= static_cast<long>(W)) continue;
          double s = 0;
          for (std::size_t c = 0; c < C; ++c)
            s += std::abs(L[((n * C + c) * H + y) * W + x] - R[((n * C + c) * H + y) * W + static_cast<std::size_t>(xr)]);
          col[i] = s / static_cast<double>(C);
          mx = std::max(mx, col[i]);
        }
        for (std::size_t i = 0; i < D; ++i) out[((n * D + i) * H + y) * W + x] = std::isnan(col[i]) ? mx : col[i];
      }
  return out;
}

// out[c][y][x] = R[c][y][clamp(x - d)] with linear interpolation between columns.
inline Vec warp(const Vec& R, const Vec& disp, std::size_t N, std::size_t C, std::size_t H, std::size_t W) {
  Vec out(R.size());
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
          const double pos = std::clamp(static_cast<double>(x) - disp[(n * H + y) * W + x], 0.0, static_cast<double>(W - 1));
          const auto x0 = static_cast<std::size_t>(std::floor(pos));
          const std::size_t x1 = std::min(x0 + 1, W - 1);
          const double a = pos - static_cast<double>(x0);
          const double* row = &R[((n * C + c) * H + y) * W];
          out[((n * C + c) * H + y) * W + x] = (1 - a) * row[x0] + a * row[x1];
        }
  return out;
}

inline Vec soft_argmin(const Vec& cost, std::size_t N, std::size_t D, std::size_t HW, double base, double step) {
  Vec out(N * HW);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t p = 0; p < HW; ++p) {
      double mx = -INFINITY;
      for (std::size_t i = 0; i < D; ++i) mx = std::max(mx, -cost[(n * D + i) * HW + p]);
      double z = 0, acc = 0;
      for (std::size_t i = 0; i < D; ++i) {
        const double e = std::exp(-cost[(n * D + i) * HW + p] - mx);
        z += e;
        acc += e * (base + step * static_cast<double>(i));
      }
      out[n * HW + p] = acc / z;
    }
  return out;
}

// mean over (H, W-1) of |dx d| exp(-mean_c |dx I|) + mean over (H-1, W) of the y analogue.
inline double smoothness(const Vec& d, const Vec& img, std::size_t N, std::size_t C, std::size_t H, std::size_t W) {
  double sx = 0, sy = 0;
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        if (x + 1 < W) {
          double g = 0;
          for (std::size_t c = 0; c < C; ++c)
            g += std::abs(img[((n * C + c) * H + y) * W + x + 1] - img[((n * C + c) * H + y) * W + x]);
          sx += std::abs(d[(n * H + y) * W + x + 1] - d[(n * H + y) * W + x]) * std::exp(-g / static_cast<double>(C));
        }
        if (y + 1 < H) {
          double g = 0;
          for (std::size_t c = 0; c < C; ++c)
            g += std::abs(img[((n * C + c) * H + y + 1) * W + x] - img[((n * C + c) * H + y) * W + x]);
          sy += std::abs(d[(n * H + y + 1) * W + x] - d[(n * H + y) * W + x]) * std::exp(-g / static_cast<double>(C));
        }
      }
  return sx / static_cast<double>(N * H * (W - 1)) + sy / static_cast<double>(N * (H - 1) * W);
}

// Mean SSIM over valid 11x11 Gaussian windows, computed window by window.
inline double ssim(const Vec& a, const Vec& b, std::size_t planes, std::size_t H, std::size_t W, double max_val) {
  const std::size_t K = 11;
  double g[K], gs = 0;
  for (std::size_t i = 0; i < K; ++i) {
    const double t = static_cast<double>(i) - 5.0;
    g[i] = std::exp(-t * t / (2 * 1.5 * 1.5));
    gs += g[i];
  }
  const double c1 = (0.01 * max_val) * (0.01 * max_val), c2 = (0.03 * max_val) * (0.03 * max_val);
  double total = 0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y + K <= H; ++y)
      for (std::size_t x = 0; x + K <= W; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (std::size_t ky = 0; ky < K; ++ky)
          for (std::size_t kx = 0; kx < K; ++kx) {
            const double w = g[ky] * g[kx] / (gs * gs);
            const double va = a[(p * H + y + ky) * W + x + kx], vb = b[(p * H + y + ky) * W + x + kx];
            ma += w * va;
            mb += w * vb;
            saa += w * va * va;
            sbb += w * vb * vb;
            sab += w * va * vb;
          }
        const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
        total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return total / static_cast<double>(count);
}

}  // namespace oracle
