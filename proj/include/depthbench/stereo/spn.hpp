#pragma once

#include <array>
#include <string>
#include <vector>

#include "depthbench/core/conv.hpp"
#include "depthbench/core/ops.hpp"
#include "depthbench/nn/layers.hpp"

namespace depthbench::stereo {

enum class ScanDirection { left_to_right, right_to_left, top_to_bottom, bottom_to_top };

inline constexpr std::array<ScanDirection, 4> kScanDirections{ScanDirection::left_to_right, ScanDirection::right_to_left,
                                                              ScanDirection::top_to_bottom, ScanDirection::bottom_to_top};

/// One directional linear propagation pass.
///
/// Along the scan, h(p) = (1 - sum_i w_i(p)) x(p) + sum_i w_i(p) h(q_i) where q_1..q_3
/// are the three pixels of the previous scan line adjacent to p (diagonal,
/// straight, diagonal). Neighbours outside the image are dropped and their
/// weight stays on x(p). With w >= 0 and sum w <= 1 each h is a convex
/// combination of x values.
inline Tensor spn_propagate(const Tensor& x, const Tensor& w1, const Tensor& w2, const Tensor& w3, ScanDirection dir) {
  if (x.rank() != 4) throw ShapeError("spn_propagate: expected N x C x H x W input");
  for (const Tensor* w : {&w1, &w2, &w3})
    if (w->shape() != x.shape()) throw ShapeError("spn_propagate: gate shape must equal input shape");
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const bool horizontal = dir == ScanDirection::left_to_right || dir == ScanDirection::right_to_left;
  const std::size_t T = horizontal ? W : H;  // scan extent
  const std::size_t L = horizontal ? H : W;  // lateral extent
  // Pixel offset of (scan t, lateral l) inside one plane.
  auto pix = [=](std::size_t t, std::size_t l) -> std::size_t {
    switch (dir) {
      case ScanDirection::left_to_right: return l * W + t;
      case ScanDirection::right_to_left: return l * W + (W - 1 - t);
      case ScanDirection::top_to_bottom: return t * W + l;
      case ScanDirection::bottom_to_top: return (H - 1 - t) * W + l;
    }
    return 0;
  };

  std::vector<double> h(x.numel());
  const std::array<const std::vector<double>*, 3> gates{&w1.values(), &w2.values(), &w3.values()};
  for (std::size_t plane = 0; plane < N * C; ++plane) {
    const std::size_t off = plane * H * W;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t l = 0; l < L; ++l) {
        const std::size_t p = off + pix(t, l);
        double acc = 0, wsum = 0;
        if (t > 0)
          for (int k = 0; k < 3; ++k) {
            const auto nl = static_cast<std::ptrdiff_t>(l) + k - 1;
            if (nl < 0 || nl >= static_cast<std::ptrdiff_t>(L)) continue;
            const double w = (*gates[k])[p];
            acc += w * h[off + pix(t - 1, static_cast<std::size_t>(nl))];
            wsum += w;
          }
        h[p] = (1.0 - wsum) * x[p] + acc;
      }
  }

  auto xn = x.node();
  std::array<depthbench::detail::NodePtr, 3> wn{w1.node(), w2.node(), w3.node()};
  return depthbench::detail::make_result(
      "spn_propagate", x.shape(), std::move(h), {x, w1, w2, w3}, [=](depthbench::detail::Node& self) {
        auto* gx = depthbench::detail::grad_sink(xn);
        std::array<std::vector<double>*, 3> gw{};
        for (int k = 0; k < 3; ++k) gw[k] = depthbench::detail::grad_sink(wn[k]);
        std::vector<double> gh = self.grad;
        const auto& hv = self.value;
        for (std::size_t plane = 0; plane < N * C; ++plane) {
          const std::size_t off = plane * H * W;
          for (std::size_t t = T; t-- > 0;)
            for (std::size_t l = 0; l < L; ++l) {
              const std::size_t p = off + pix(t, l);
              const double g = gh[p];
              double wsum = 0;
              if (t > 0)
                for (int k = 0; k < 3; ++k) {
                  const auto nl = static_cast<std::ptrdiff_t>(l) + k - 1;
                  if (nl < 0 || nl >= static_cast<std::ptrdiff_t>(L)) continue;
                  const std::size_t q = off + pix(t - 1, static_cast<std::size_t>(nl));
                  const double w = wn[k]->value[p];
                  wsum += w;
                  if (gw[k]) (*gw[k])[p] += g * (hv[q] - xn->value[p]);
                  gh[q] += g * w;
                }
              if (gx) (*gx)[p] += g * (1.0 - wsum);
            }
        }
      });
}

/// conv2d whose taps per output channel are softmax-normalized and whose input
/// is edge-replicated, so every output is a convex combination of inputs.
inline Tensor convex_conv3x3(const Tensor& x, const Tensor& raw_weight) {
  const std::size_t O = raw_weight.dim(0), I = raw_weight.dim(1);
  const Tensor w = reshape(softmax(reshape(raw_weight, {O, I * 9}), 1), {O, I, 3, 3});
  return conv2d(pad_replicate(x, 1), w, 1, 0);
}

inline bool valid_spn_channels(std::size_t c) { return c == 1 || c == 2 || c == 4 || c == 8; }

/// Learned refinement of a disparity map guided by an RGB image.
///
/// The guidance CNN (3 -> 2C -> 2C -> 2C -> 3C, 3x3, no bias, ReLU between)
/// predicts three gate maps per hidden channel; gates are |g| / (1 + sum|g|).
/// The disparity is lifted to C channels, propagated in four scan directions
/// sharing the gates, averaged, and projected back to one channel. Lift and
/// projection are convex, which bounds the output by the input's extrema.
class SpnRefiner {
 public:
  SpnRefiner() = default;
  SpnRefiner(nn::ParamStore& store, const std::string& name, std::size_t channels) : channels_(channels) {
    if (!valid_spn_channels(channels))
      throw ConfigError("SPN channels must be one of 1, 2, 4, 8; got " + std::to_string(channels));
    const std::size_t c2 = 2 * channels;
    const nn::ConvOptions no_bias{.bias = false};
    guide_.emplace_back(store, name + ".guide0", 3, c2, no_bias);
    guide_.emplace_back(store, name + ".guide1", c2, c2, no_bias);
    guide_.emplace_back(store, name + ".guide2", c2, c2, no_bias);
    guide_.emplace_back(store, name + ".guide3", c2, 3 * channels, no_bias);
    lift_ = store.add(name + ".lift.weight", {channels, 1, 3, 3}, nn::ParamRole::weight);
    project_ = store.add(name + ".project.weight", {1, channels, 3, 3}, nn::ParamRole::weight);
    name_ = name;
  }

  std::size_t channels() const { return channels_; }

  /// Gate maps (three tensors of N x C x H x W) computed from the guidance image.
  std::array<Tensor, 3> gates(const Tensor& guidance) const {
    Tensor g = guidance;
    for (std::size_t i = 0; i < guide_.size(); ++i) {
      g = guide_[i](g);
      if (i + 1 < guide_.size()) g = activation(g, Activation::relu());
    }
    std::array<Tensor, 3> a;
    for (std::size_t k = 0; k < 3; ++k) a[k] = abs(slice(g, 1, k * channels_, channels_));
    const Tensor denom = add_scalar(add(add(a[0], a[1]), a[2]), 1.0);
    return {div(a[0], denom), div(a[1], denom), div(a[2], denom)};
  }

  Tensor operator()(const Tensor& disparity, const Tensor& guidance) const {
    if (disparity.rank() != 4 || disparity.dim(1) != 1) throw ShapeError("SPN expects N x 1 x H x W disparity");
    if (guidance.rank() != 4 || guidance.dim(1) != 3 || guidance.dim(0) != disparity.dim(0) ||
        guidance.dim(2) != disparity.dim(2) || guidance.dim(3) != disparity.dim(3))
      throw ShapeError("SPN guidance " + shape_str(guidance.shape()) + " must be N x 3 x H x W matching " +
                       shape_str(disparity.shape()));
    auto w = gates(guidance);
    return refine_with_gates(disparity, w);
  }

  Tensor refine_with_gates(const Tensor& disparity, const std::array<Tensor, 3>& w) const {
    LayerLabel label(name_ + ".propagate");
    const Tensor lifted = convex_conv3x3(disparity, lift_);
    Tensor acc;
    for (auto dir : kScanDirections) {
      Tensor h = spn_propagate(lifted, w[0], w[1], w[2], dir);
      acc = acc.defined() ? add(acc, h) : h;
    }
    return convex_conv3x3(scale(acc, 0.25), project_);
  }

  Tensor lift_weight() const { return lift_; }
  Tensor project_weight() const { return project_; }

 private:
  std::size_t channels_ = 0;
  std::string name_;
  std::vector<nn::Conv2d> guide_;
  Tensor lift_, project_;
};

inline Tensor spn_refine(const SpnRefiner& refiner, const Tensor& disparity, const Tensor& guidance_rgb) {
  return refiner(disparity, guidance_rgb);
}

}  // namespace depthbench::stereo
