#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "depthbench/core/ops.hpp"

namespace depthbench::stereo {

/// Matching costs N x D x H x W. Candidate index i maps to disparity
/// base + step * i, plus `base_map` (N x 1 x H x W) when the volume is a
/// residual around a coarser estimate.
struct CostVolume {
  Tensor cost;
  double base = 0;
  double step = 1;
  std::optional<Tensor> base_map;

  std::size_t candidates() const { return cost.dim(1); }
};

namespace detail {

inline void require_features(const Tensor& left, const Tensor& right, const char* op) {
  if (left.rank() != 4) throw ShapeError(std::string(op) + ": expected N x C x H x W features");
  if (left.shape() != right.shape())
    throw ShapeError(std::string(op) + ": feature shape mismatch " + shape_str(left.shape()) + " vs " +
                     shape_str(right.shape()));
}

// cost[i, y, x] = mean_c |left(c, y, x) - right(c, y, x - shift_i)|. Where
// x - shift_i falls outside the image the entry copies the largest in-bounds
// cost of its (y, x) column, and its gradient is routed to that entry.
inline Tensor shifted_cost(const char* op, const Tensor& left, const Tensor& right, const std::vector<int>& shifts) {
  const std::size_t N = left.dim(0), C = left.dim(1), H = left.dim(2), W = left.dim(3), D = shifts.size();
  const double inv_c = 1.0 / static_cast<double>(C);
  std::vector<double> out(N * D * H * W, 0.0);
  std::vector<std::uint32_t> source(out.size());
  auto cidx = [=](std::size_t n, std::size_t i, std::size_t y, std::size_t x) { return ((n * D + i) * H + y) * W + x; };
  auto fidx = [=](std::size_t n, std::size_t c, std::size_t y, std::size_t x) { return ((n * C + c) * H + y) * W + x; };
  const auto& lv = left.values();
  const auto& rv = right.values();
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        std::size_t best = D;
        for (std::size_t i = 0; i < D; ++i) {
          const auto xr = static_cast<std::ptrdiff_t>(x) - shifts[i];
          if (xr < 0 || xr >= static_cast<std::ptrdiff_t>(W)) continue;
          double s = 0;
          for (std::size_t c = 0; c < C; ++c)
            s += std::abs(lv[fidx(n, c, y, x)] - rv[fidx(n, c, y, static_cast<std::size_t>(xr))]);
          out[cidx(n, i, y, x)] = s * inv_c;
          source[cidx(n, i, y, x)] = static_cast<std::uint32_t>(i);
          if (best == D || out[cidx(n, i, y, x)] > out[cidx(n, best, y, x)]) best = i;
        }
        if (best == D) throw ShapeError(std::string(op) + ": no candidate is in bounds at column " + std::to_string(x));
        for (std::size_t i = 0; i < D; ++i) {
          const auto xr = static_cast<std::ptrdiff_t>(x) - shifts[i];
          if (xr < 0 || xr >= static_cast<std::ptrdiff_t>(W)) {
            out[cidx(n, i, y, x)] = out[cidx(n, best, y, x)];
            source[cidx(n, i, y, x)] = static_cast<std::uint32_t>(best);
          }
        }
      }
  auto ln = left.node(), rn = right.node();
  return depthbench::detail::make_result(
      op, {N, D, H, W}, std::move(out), {left, right},
      [=, source = std::move(source)](depthbench::detail::Node& self) {
        auto* gl = depthbench::detail::grad_sink(ln);
        auto* gr = depthbench::detail::grad_sink(rn);
        std::vector<double> g(D);
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
              std::fill(g.begin(), g.end(), 0.0);
              for (std::size_t i = 0; i < D; ++i) g[source[cidx(n, i, y, x)]] += self.grad[cidx(n, i, y, x)];
              for (std::size_t i = 0; i < D; ++i) {
                if (g[i] == 0) continue;
                const auto xr = static_cast<std::ptrdiff_t>(x) - shifts[i];
                if (xr < 0 || xr >= static_cast<std::ptrdiff_t>(W)) continue;
                for (std::size_t c = 0; c < C; ++c) {
                  const auto li = fidx(n, c, y, x), ri = fidx(n, c, y, static_cast<std::size_t>(xr));
                  const double diff = ln->value[li] - rn->value[ri];
                  const double sgn = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
                  if (gl) (*gl)[li] += g[i] * sgn * inv_c;
                  if (gr) (*gr)[ri] -= g[i] * sgn * inv_c;
                }
              }
            }
      });
}

}  // namespace detail

/// Full-range volume over candidate disparities 0 .. D-1 (feature pixels).
inline CostVolume cost_volume_full(const Tensor& left, const Tensor& right, std::size_t candidates) {
  detail::require_features(left, right, "cost_volume_full");
  if (candidates == 0 || candidates > left.dim(3))
    throw ShapeError("cost_volume_full: " + std::to_string(candidates) + " candidates exceed feature width " +
                     std::to_string(left.dim(3)));
  std::vector<int> shifts(candidates);
  for (std::size_t i = 0; i < candidates; ++i) shifts[i] = static_cast<int>(i);
  return {detail::shifted_cost("cost_volume_full", left, right, shifts), 0.0, 1.0, std::nullopt};
}

/// Horizontal linear resampling: out(c, y, x) = right(c, y, x - d(y, x)),
/// clamped to the edge columns outside [0, W-1].
inline Tensor warp_with_disparity(const Tensor& right, const Tensor& disparity) {
  if (right.rank() != 4 || disparity.rank() != 4 || disparity.dim(1) != 1 || disparity.dim(0) != right.dim(0) ||
      disparity.dim(2) != right.dim(2) || disparity.dim(3) != right.dim(3))
    throw ShapeError("warp_with_disparity: disparity " + shape_str(disparity.shape()) +
                     " does not match features " + shape_str(right.shape()));
  const std::size_t N = right.dim(0), C = right.dim(1), H = right.dim(2), W = right.dim(3);
  struct Tap {
    std::size_t x0, x1;
    double a;
    bool clamped;
  };
  std::vector<Tap> taps(N * H * W);
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const std::size_t x = i % W;
    const double pos = static_cast<double>(x) - disparity[i];
    if (pos <= 0) {
      taps[i] = {0, 0, 0.0, pos < 0};
    } else if (pos >= static_cast<double>(W - 1)) {
      taps[i] = {W - 1, W - 1, 0.0, pos > static_cast<double>(W - 1)};
    } else {
      const auto x0 = static_cast<std::size_t>(std::floor(pos));
      taps[i] = {x0, x0 + 1, pos - static_cast<double>(x0), false};
    }
  }
  std::vector<double> out(right.numel());
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < H; ++y) {
        const double* row = right.values().data() + ((n * C + c) * H + y) * W;
        for (std::size_t x = 0; x < W; ++x) {
          const auto& t = taps[(n * H + y) * W + x];
          out[((n * C + c) * H + y) * W + x] = (1.0 - t.a) * row[t.x0] + t.a * row[t.x1];
        }
      }
  auto rn = right.node(), dn = disparity.node();
  return depthbench::detail::make_result(
      "warp_with_disparity", right.shape(), std::move(out), {right, disparity},
      [=, taps = std::move(taps)](depthbench::detail::Node& self) {
        auto* gr = depthbench::detail::grad_sink(rn);
        auto* gd = depthbench::detail::grad_sink(dn);
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t y = 0; y < H; ++y) {
              const std::size_t base = ((n * C + c) * H + y) * W;
              for (std::size_t x = 0; x < W; ++x) {
                const auto& t = taps[(n * H + y) * W + x];
                const double go = self.grad[base + x];
                if (gr) {
                  (*gr)[base + t.x0] += go * (1.0 - t.a);
                  (*gr)[base + t.x1] += go * t.a;
                }
                if (gd && !t.clamped && t.x1 != t.x0)
                  (*gd)[(n * H + y) * W + x] -= go * (rn->value[base + t.x1] - rn->value[base + t.x0]);
              }
            }
      });
}

/// Residual volume over offsets -k .. +k around an already-warped right view.
/// `coarse` (N x 1 x H x W, same pixel units) becomes the volume's base map.
inline CostVolume cost_volume_residual(const Tensor& left, const Tensor& right_warped, int k,
                                       std::optional<Tensor> coarse = std::nullopt) {
  detail::require_features(left, right_warped, "cost_volume_residual");
  if (k < 0) throw ShapeError("cost_volume_residual: range must be non-negative");
  std::vector<int> shifts;
  for (int o = -k; o <= k; ++o) shifts.push_back(o);
  return {detail::shifted_cost("cost_volume_residual", left, right_warped, shifts), static_cast<double>(-k), 1.0,
          std::move(coarse)};
}

/// d(y, x) = sum_i (base + step * i) * softmax_i(-cost)(i, y, x) [+ base_map].
inline Tensor soft_argmin(const CostVolume& volume) {
  const Tensor& cost = volume.cost;
  if (cost.rank() != 4) throw ShapeError("soft_argmin: expected N x D x H x W costs");
  const std::size_t N = cost.dim(0), D = cost.dim(1), HW = cost.dim(2) * cost.dim(3);
  std::vector<double> values(cost.numel());
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t i = 0; i < D; ++i)
      std::fill_n(values.begin() + static_cast<std::ptrdiff_t>((n * D + i) * HW), HW,
                  volume.base + volume.step * static_cast<double>(i));
  const Tensor probs = softmax(neg(cost), 1);
  Tensor d = sum_axis(mul(probs, Tensor::from(cost.shape(), std::move(values))), 1);
  if (volume.base_map) d = add(d, *volume.base_map);
  return d;
}

}  // namespace depthbench::stereo
