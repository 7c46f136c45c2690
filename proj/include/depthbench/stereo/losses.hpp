#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "depthbench/core/ops.hpp"

namespace depthbench::stereo {

/// Masked mean of the Huber-style penalty on d = target - pred:
/// d^2 / (2 beta) for |d| < beta, |d| - beta / 2 otherwise. Both branches meet
/// at |d| = beta with value beta / 2 and slope 1.
inline Tensor smooth_l1_loss(const Tensor& pred, const Tensor& target, const Tensor& mask, double beta = 1.0) {
  if (beta <= 0) throw ConfigError("smooth_l1_loss: beta must be positive");
  if (pred.shape() != target.shape()) throw ShapeError("smooth_l1_loss: prediction/target shape mismatch");
  const Tensor diff = sub(target, pred);
  const Tensor penalty = depthbench::detail::unary(
      "smooth_l1", diff,
      [beta](double d) { return std::abs(d) < beta ? d * d / (2 * beta) : std::abs(d) - beta / 2; },
      [beta](double d, double) { return std::abs(d) < beta ? d / beta : (d > 0 ? 1.0 : -1.0); });
  return masked_mean(penalty, mask);
}

enum class ThreePixelVariant { absolute, kitti };

/// Fraction of masked pixels with |pred - target| > 3 (absolute) or, for the
/// kitti variant, additionally > 5% of the true disparity.
inline double three_pixel_error(const Tensor& pred, const Tensor& target, const Tensor& mask,
                                ThreePixelVariant variant = ThreePixelVariant::absolute) {
  if (pred.shape() != target.shape() || pred.shape() != mask.shape())
    throw ShapeError("three_pixel_error: shape mismatch");
  double bad = 0, count = 0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    if (mask[i] == 0) continue;
    count += 1;
    const double err = std::abs(pred[i] - target[i]);
    bool wrong = err > 3.0;
    if (variant == ThreePixelVariant::kitti) wrong = wrong && err > 0.05 * std::abs(target[i]);
    if (wrong) bad += 1;
  }
  if (count == 0) throw ShapeError("three_pixel_error: mask selects no pixels");
  return bad / count;
}

struct StereoLoss {
  Tensor total;
  std::vector<Tensor> per_stage;  // unweighted smooth-L1 per computed stage
};

/// sum_s w_s * smooth_l1(stage_s, target) over the computed stages.
inline StereoLoss stereo_loss_terms(const std::vector<Tensor>& stages, const Tensor& target, const Tensor& mask,
                                    const std::vector<double>& weights, double beta = 1.0) {
  if (weights.size() != stages.size())
    throw ConfigError("stereo loss: " + std::to_string(weights.size()) + " weights for " +
                      std::to_string(stages.size()) + " stages");
  StereoLoss out;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    out.per_stage.push_back(smooth_l1_loss(stages[s], target, mask, beta));
    const Tensor weighted = scale(out.per_stage.back(), weights[s]);
    out.total = out.total.defined() ? add(out.total, weighted) : weighted;
  }
  if (!out.total.defined()) throw ConfigError("stereo loss: no stages");
  return out;
}

inline Tensor stereo_total_loss(const std::vector<Tensor>& stages, const Tensor& target, const Tensor& mask,
                                const std::vector<double>& weights, double beta = 1.0) {
  return stereo_loss_terms(stages, target, mask, weights, beta).total;
}

}  // namespace depthbench::stereo
