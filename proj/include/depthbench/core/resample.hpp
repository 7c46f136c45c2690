#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "depthbench/core/tensor.hpp"

namespace depthbench {

namespace detail {

inline void require_spatial(const Tensor& x, const char* op) {
  if (x.rank() < 3) throw ShapeError(std::string(op) + ": expected at least 3 axes, got " + shape_str(x.shape()));
}

// One output coordinate of align-corners-false linear interpolation.
struct LinearTap {
  std::size_t i0 = 0, i1 = 0;
  double w0 = 1, w1 = 0;
};

inline std::vector<LinearTap> linear_taps(std::size_t in, std::size_t out) {
  std::vector<LinearTap> taps(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
    if (src < 0) src = 0;
    auto i0 = static_cast<std::size_t>(src);
    if (i0 > in - 1) i0 = in - 1;
    const double frac = src - static_cast<double>(i0);
    taps[i].i0 = i0;
    taps[i].i1 = i0 + 1 < in ? i0 + 1 : i0;
    taps[i].w1 = frac;
    taps[i].w0 = 1.0 - frac;
  }
  return taps;
}

}  // namespace detail

/// 2x2 max pooling with stride 2 over the last two axes.
inline Tensor max_pool2x2(const Tensor& x) {
  detail::require_spatial(x, "max_pool2x2");
  const std::size_t H = x.dim(x.rank() - 2), W = x.dim(x.rank() - 1);
  if (H % 2 || W % 2) throw ShapeError("max_pool2x2: spatial extents must be even, got " + shape_str(x.shape()));
  const std::size_t planes = x.numel() / (H * W), OH = H / 2, OW = W / 2;
  Shape out_shape = x.shape();
  out_shape[x.rank() - 2] = OH;
  out_shape[x.rank() - 1] = OW;
  std::vector<double> out(planes * OH * OW);
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < OH; ++y)
      for (std::size_t xx = 0; xx < OW; ++xx) {
        std::size_t best = (p * H + 2 * y) * W + 2 * xx;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (p * H + 2 * y + dy) * W + 2 * xx + dx;
            if (x[idx] > x[best]) best = idx;
          }
        const std::size_t o = (p * OH + y) * OW + xx;
        out[o] = x[best];
        argmax[o] = best;
      }
  auto xn = x.node();
  return detail::make_result("max_pool2x2", out_shape, std::move(out), {x},
                             [xn, argmax = std::move(argmax)](detail::Node& self) {
                               if (auto* g = detail::grad_sink(xn))
                                 for (std::size_t o = 0; o < argmax.size(); ++o) (*g)[argmax[o]] += self.grad[o];
                             });
}

inline Tensor upsample_nearest2x(const Tensor& x) {
  detail::require_spatial(x, "upsample_nearest2x");
  const std::size_t H = x.dim(x.rank() - 2), W = x.dim(x.rank() - 1);
  const std::size_t planes = x.numel() / (H * W), OH = 2 * H, OW = 2 * W;
  Shape out_shape = x.shape();
  out_shape[x.rank() - 2] = OH;
  out_shape[x.rank() - 1] = OW;
  std::vector<double> out(planes * OH * OW);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < OH; ++y)
      for (std::size_t xx = 0; xx < OW; ++xx) out[(p * OH + y) * OW + xx] = x[(p * H + y / 2) * W + xx / 2];
  auto xn = x.node();
  return detail::make_result("upsample_nearest2x", out_shape, std::move(out), {x},
                             [xn, planes, H, W, OH, OW](detail::Node& self) {
                               auto* g = detail::grad_sink(xn);
                               if (!g) return;
                               for (std::size_t p = 0; p < planes; ++p)
                                 for (std::size_t y = 0; y < OH; ++y)
                                   for (std::size_t xx = 0; xx < OW; ++xx)
                                     (*g)[(p * H + y / 2) * W + xx / 2] += self.grad[(p * OH + y) * OW + xx];
                             });
}

/// Bilinear resampling of the last two axes with the align-corners-false
/// convention: output pixel i samples input coordinate (i + 0.5) * in/out - 0.5,
/// clamped at the borders.
inline Tensor resize_bilinear(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  detail::require_spatial(x, "resize_bilinear");
  if (out_h == 0 || out_w == 0) throw ShapeError("resize_bilinear: target extents must be positive");
  const std::size_t H = x.dim(x.rank() - 2), W = x.dim(x.rank() - 1);
  const std::size_t planes = x.numel() / (H * W);
  auto ty = detail::linear_taps(H, out_h), tx = detail::linear_taps(W, out_w);
  Shape out_shape = x.shape();
  out_shape[x.rank() - 2] = out_h;
  out_shape[x.rank() - 1] = out_w;
  std::vector<double> out(planes * out_h * out_w);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = x.values().data() + p * H * W;
    for (std::size_t y = 0; y < out_h; ++y) {
      const auto& a = ty[y];
      for (std::size_t xx = 0; xx < out_w; ++xx) {
        const auto& b = tx[xx];
        out[(p * out_h + y) * out_w + xx] =
            a.w0 * (b.w0 * src[a.i0 * W + b.i0] + b.w1 * src[a.i0 * W + b.i1]) +
            a.w1 * (b.w0 * src[a.i1 * W + b.i0] + b.w1 * src[a.i1 * W + b.i1]);
      }
    }
  }
  auto xn = x.node();
  return detail::make_result(
      "resize_bilinear", out_shape, std::move(out), {x},
      [xn, ty = std::move(ty), tx = std::move(tx), planes, H, W, out_h, out_w](detail::Node& self) {
        auto* g = detail::grad_sink(xn);
        if (!g) return;
        for (std::size_t p = 0; p < planes; ++p) {
          double* dst = g->data() + p * H * W;
          for (std::size_t y = 0; y < out_h; ++y) {
            const auto& a = ty[y];
            for (std::size_t xx = 0; xx < out_w; ++xx) {
              const auto& b = tx[xx];
              const double go = self.grad[(p * out_h + y) * out_w + xx];
              dst[a.i0 * W + b.i0] += go * a.w0 * b.w0;
              dst[a.i0 * W + b.i1] += go * a.w0 * b.w1;
              dst[a.i1 * W + b.i0] += go * a.w1 * b.w0;
              dst[a.i1 * W + b.i1] += go * a.w1 * b.w1;
            }
          }
        }
      });
}

inline Tensor upsample_bilinear2x(const Tensor& x) {
  detail::require_spatial(x, "upsample_bilinear2x");
  return resize_bilinear(x, 2 * x.dim(x.rank() - 2), 2 * x.dim(x.rank() - 1));
}

enum class ResampleMode { maxpool2x2, upsample_bilinear2x, upsample_nearest2x };

inline Tensor pool_and_resample(const Tensor& x, ResampleMode mode) {
  switch (mode) {
    case ResampleMode::maxpool2x2: return max_pool2x2(x);
    case ResampleMode::upsample_bilinear2x: return upsample_bilinear2x(x);
    case ResampleMode::upsample_nearest2x: return upsample_nearest2x(x);
  }
  throw ConfigError("unknown resample mode");
}

}  // namespace depthbench
