#pragma once

#include <cmath>
#include <vector>

#include "depthbench/core/conv.hpp"
#include "depthbench/core/ops.hpp"

namespace depthbench::mono {

/// Masked mean absolute depth error.
inline Tensor l1_depth_loss(const Tensor& pred, const Tensor& target, const Tensor& mask) {
  if (pred.shape() != target.shape()) throw ShapeError("l1_depth_loss: prediction/target shape mismatch");
  return masked_mean(abs(sub(target, pred)), mask);
}

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Normalized 11x11 Gaussian window (sigma 1.5) as a 1x1xKxK conv weight.
inline Tensor gaussian_window(std::size_t size = kSsimWindow, double sigma = kSsimSigma) {
  std::vector<double> g1(size);
  double s = 0;
  for (std::size_t i = 0; i < size; ++i) {
    const double x = static_cast<double>(i) - (static_cast<double>(size) - 1) / 2;
    g1[i] = std::exp(-x * x / (2 * sigma * sigma));
    s += g1[i];
  }
  for (auto& v : g1) v /= s;
  std::vector<double> w(size * size);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) w[y * size + x] = g1[y] * g1[x];
  return Tensor::from({1, 1, size, size}, std::move(w));
}

/// Per-window SSIM factors over valid window positions:
/// luminance (2 mx my + C1) / (mx^2 + my^2 + C1) and
/// contrast-structure (2 sxy + C2) / (sx^2 + sy^2 + C2).
struct SsimMaps {
  Tensor luminance;
  Tensor contrast_structure;
};

inline SsimMaps ssim_maps(const Tensor& x, const Tensor& y, double max_val) {
  if (x.shape() != y.shape()) throw ShapeError("ssim: image shape mismatch");
  if (x.rank() != 4) throw ShapeError("ssim: expected NCHW images");
  if (max_val <= 0) throw ConfigError("ssim: max_val must be positive");
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H < kSsimWindow || W < kSsimWindow)
    throw ShapeError("ssim: 11x11 window larger than image " + shape_str(x.shape()));
  const double c1 = (kSsimK1 * max_val) * (kSsimK1 * max_val);
  const double c2 = (kSsimK2 * max_val) * (kSsimK2 * max_val);
  const Tensor window = gaussian_window();

  auto blur = [&](const Tensor& t) { return conv2d(t, window); };
  const Tensor xs = reshape(x, {N * C, 1, H, W}), ys = reshape(y, {N * C, 1, H, W});
  const Tensor mu_x = blur(xs), mu_y = blur(ys);
  const Tensor mu_xx = mul(mu_x, mu_x), mu_yy = mul(mu_y, mu_y), mu_xy = mul(mu_x, mu_y);
  const Tensor var_x = sub(blur(mul(xs, xs)), mu_xx);
  const Tensor var_y = sub(blur(mul(ys, ys)), mu_yy);
  const Tensor cov = sub(blur(mul(xs, ys)), mu_xy);

  SsimMaps maps;
  maps.luminance = div(add_scalar(scale(mu_xy, 2.0), c1), add_scalar(add(mu_xx, mu_yy), c1));
  maps.contrast_structure = div(add_scalar(scale(cov, 2.0), c2), add_scalar(add(var_x, var_y), c2));
  return maps;
}

/// Mean structural similarity with an 11x11 Gaussian window (sigma 1.5),
/// C1 = (0.01 max_val)^2, C2 = (0.03 max_val)^2, averaged over valid window
/// positions, channels and batch.
inline Tensor ssim(const Tensor& x, const Tensor& y, double max_val = 1.0) {
  auto maps = ssim_maps(x, y, max_val);
  return mean(mul(maps.luminance, maps.contrast_structure));
}

/// Edge-aware smoothness: mean |d/dx depth| * exp(-mean_c |d/dx image|) plus the
/// same along y, using forward differences.
inline Tensor depth_smoothness_loss(const Tensor& depth, const Tensor& image) {
  if (depth.rank() != 4 || image.rank() != 4 || depth.dim(0) != image.dim(0) || depth.dim(2) != image.dim(2) ||
      depth.dim(3) != image.dim(3))
    throw ShapeError("depth_smoothness_loss: depth " + shape_str(depth.shape()) + " and image " +
                     shape_str(image.shape()) + " must share batch and spatial extents");
  const std::size_t H = depth.dim(2), W = depth.dim(3);
  if (H < 2 || W < 2) throw ShapeError("depth_smoothness_loss: need at least 2x2 pixels");
  auto dx = [W](const Tensor& t) { return sub(slice(t, 3, 1, W - 1), slice(t, 3, 0, W - 1)); };
  auto dy = [H](const Tensor& t) { return sub(slice(t, 2, 1, H - 1), slice(t, 2, 0, H - 1)); };
  const Tensor wx = exp(neg(mean_axis(abs(dx(image)), 1)));
  const Tensor wy = exp(neg(mean_axis(abs(dy(image)), 1)));
  const Tensor sx = mean(mul(abs(dx(depth)), wx));
  const Tensor sy = mean(mul(abs(dy(depth)), wy));
  return add(sx, sy);
}

struct LossWeights {
  double ssim = 0.85;
  double l1 = 0.1;
  double smooth = 0.9;
};

struct MonoLossTerms {
  Tensor total;
  Tensor ssim;
  Tensor l1;
  Tensor smoothness;
};

/// w_ssim * (1 - SSIM) / 2 + w_l1 * L1 + w_smooth * smoothness.
inline MonoLossTerms mono_loss_terms(const Tensor& pred, const Tensor& target, const Tensor& mask, const Tensor& rgb,
                                     const LossWeights& w) {
  if (w.ssim < 0 || w.l1 < 0 || w.smooth < 0) throw ConfigError("loss weights must be non-negative");
  MonoLossTerms t;
  t.ssim = ssim(pred, target, 1.0);
  t.l1 = l1_depth_loss(pred, target, mask);
  t.smoothness = depth_smoothness_loss(pred, rgb);
  const Tensor ssim_term = scale(add_scalar(neg(t.ssim), 1.0), 0.5 * w.ssim);
  t.total = add(add(ssim_term, scale(t.l1, w.l1)), scale(t.smoothness, w.smooth));
  return t;
}

inline Tensor mono_total_loss(const Tensor& pred, const Tensor& target, const Tensor& mask, const Tensor& rgb,
                              const LossWeights& w) {
  return mono_loss_terms(pred, target, mask, rgb, w).total;
}

}  // namespace depthbench::mono
