#pragma once

#include <array>
#include <string>
#include <vector>

#include "depthbench/core/ops.hpp"
#include "depthbench/core/resample.hpp"
#include "depthbench/nn/blocks.hpp"
#include "depthbench/stereo/cost_volume.hpp"
#include "depthbench/stereo/losses.hpp"
#include "depthbench/stereo/spn.hpp"

namespace depthbench::stereo {

struct AnyNetConfig {
  std::size_t max_disparity = 192;  // full-resolution pixels
  int residual_range = 2;           // offsets -k..k at stages 2-3
  std::size_t spn_channels = 0;     // 0 = no SPN, else 1/2/4/8
  std::array<double, 4> stage_loss_weights{0.25, 0.5, 1.0, 1.0};
  std::size_t unet_base_channels = 1;
  std::array<std::size_t, 3> disparity_net_channels{16, 4, 4};
  std::size_t disparity_net_layers = 4;  // hidden c->c layers per stage

  static constexpr std::array<std::size_t, 3> kScales{16, 8, 4};

  std::size_t stage1_candidates() const { return max_disparity / 16 + 1; }

  std::string spn_name() const { return spn_channels == 0 ? "none" : std::to_string(spn_channels); }

  void validate() const {
    if (max_disparity == 0 || max_disparity % 16 != 0)
      throw ConfigError("max_disparity must be a positive multiple of 16, got " + std::to_string(max_disparity));
    if (spn_channels != 0 && !valid_spn_channels(spn_channels))
      throw ConfigError("spn_channels must be none, 1, 2, 4 or 8; got " + std::to_string(spn_channels));
    if (residual_range < 1) throw ConfigError("residual_range must be at least 1");
    if (unet_base_channels == 0) throw ConfigError("unet_base_channels must be positive");
    for (auto c : disparity_net_channels)
      if (c == 0) throw ConfigError("disparity_net_channels must be positive");
  }
};

namespace detail {

// BN -> ReLU -> 3x3 conv without bias.
class PreActConv {
 public:
  PreActConv(nn::ParamStore& store, const std::string& name, std::size_t in, std::size_t out, std::size_t stride = 1)
      : norm_(store, name + ".bn", in), conv_(store, name + ".conv", in, out, {.stride = stride, .bias = false}) {}

  Tensor operator()(const Tensor& x, bool training) {
    return conv_(activation(norm_(x, training), Activation::relu()));
  }

 private:
  nn::BatchNorm norm_;
  nn::Conv2d conv_;
};

}  // namespace detail

/// U-Net feature pyramid: full-res conv, stride-2 conv, three pooled
/// two-conv blocks down to 1/16 (2c, 4c, 8c channels), then two decoder blocks
/// that upsample and concatenate back to 1/8 (4c) and 1/4 (2c).
class FeatureExtractor {
 public:
  FeatureExtractor(nn::ParamStore& store, std::size_t c) : stem_(store, "unet.stem", 3, c) {
    stem_down_.emplace_back(store, "unet.stem_down", c, c, 2);
    std::size_t in = c;
    for (std::size_t level = 0; level < 3; ++level) {
      const std::size_t out = 2 * c << level;
      const std::string name = "unet.down" + std::to_string(level);
      down_.emplace_back(store, name + ".a", in, out);
      down_.emplace_back(store, name + ".b", out, out);
      in = out;
    }
    // 1/16 (8c) + 1/8 (4c) -> 4c; 1/8 (4c) + 1/4 (2c) -> 2c
    up_.emplace_back(store, "unet.up0.a", 12 * c, 4 * c);
    up_.emplace_back(store, "unet.up0.b", 4 * c, 4 * c);
    up_.emplace_back(store, "unet.up1.a", 6 * c, 2 * c);
    up_.emplace_back(store, "unet.up1.b", 2 * c, 2 * c);
  }

  /// Returns features at 1/16, 1/8, 1/4.
  std::array<Tensor, 3> operator()(const Tensor& image, bool training) {
    Tensor h = stem_down_[0](stem_(image), training);
    std::array<Tensor, 3> skips;  // 1/4, 1/8, 1/16
    for (std::size_t level = 0; level < 3; ++level) {
      h = max_pool2x2(h);
      h = down_[2 * level](h, training);
      h = down_[2 * level + 1](h, training);
      skips[level] = h;
    }
    Tensor f16 = skips[2];
    Tensor f8 = concat({resize_bilinear(f16, skips[1].dim(2), skips[1].dim(3)), skips[1]}, 1);
    f8 = up_[1](up_[0](f8, training), training);
    Tensor f4 = concat({resize_bilinear(f8, skips[0].dim(2), skips[0].dim(3)), skips[0]}, 1);
    f4 = up_[3](up_[2](f4, training), training);
    return {f16, f8, f4};
  }

 private:
  nn::Conv2d stem_;
  std::vector<detail::PreActConv> stem_down_, down_, up_;
};

/// 3-D regularization of a 1 x D x H x W cost volume: pre-activation
/// 3x3x3 convs 1 -> c, layers x (c -> c), c -> 1.
class DisparityNet {
 public:
  DisparityNet(nn::ParamStore& store, const std::string& name, std::size_t channels, std::size_t layers) {
    auto spec = [](std::size_t in, std::size_t out) {
      return nn::BlockSpec{.kind = nn::BlockKind::conv_volume,
                           .in_channels = in,
                           .out_channels = out,
                           .activation = Activation::relu()};
    };
    blocks_.push_back(nn::build_block(store, name + ".in", spec(1, channels)));
    for (std::size_t i = 0; i < layers; ++i)
      blocks_.push_back(nn::build_block(store, name + ".hidden" + std::to_string(i), spec(channels, channels)));
    blocks_.push_back(nn::build_block(store, name + ".out", spec(channels, 1)));
  }

  /// N x D x H x W costs -> regularized N x D x H x W costs.
  Tensor operator()(const Tensor& cost, bool training) {
    const auto& s = cost.shape();
    Tensor v = reshape(cost, {s[0], 1, s[1], s[2], s[3]});
    for (auto& b : blocks_) v = b.forward(v, training).out;
    return reshape(v, s);
  }

 private:
  std::vector<nn::Block> blocks_;
};

struct AnyNetOutput {
  std::vector<Tensor> full_res;    // one N x 1 x H x W map per computed stage
  std::vector<Tensor> stage_maps;  // the same maps at each stage's own scale
};

/// Four-stage anytime stereo network. Stage 1 regresses disparity from a
/// full cost volume at 1/16; stages 2-3 warp the right features with the
/// upsampled previous estimate and regress a residual at 1/8 and 1/4; stage 4
/// refines stage 3 with the SPN (or repeats it when SPN is disabled).
class AnyNet {
 public:
  explicit AnyNet(AnyNetConfig config) : config_(config), features_(store_, config.unet_base_channels) {
    config_.validate();
    for (std::size_t s = 0; s < 3; ++s)
      nets_.emplace_back(store_, "stage" + std::to_string(s + 1) + ".disparity_net",
                         config_.disparity_net_channels[s], config_.disparity_net_layers);
    if (config_.spn_channels) spn_ = SpnRefiner(store_, "stage4.spn", config_.spn_channels);
  }

  AnyNet(const AnyNet&) = delete;
  AnyNet& operator=(const AnyNet&) = delete;
  AnyNet(AnyNet&&) = default;
  AnyNet& operator=(AnyNet&&) = default;

  const AnyNetConfig& config() const { return config_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }
  bool has_spn() const { return config_.spn_channels != 0; }

  /// Runs stages 1..up_to_stage on N x 3 x H x W rectified pairs.
  AnyNetOutput forward(const Tensor& left, const Tensor& right, int up_to_stage, bool training) {
    if (up_to_stage < 1 || up_to_stage > 4) throw ConfigError("up_to_stage must be in 1..4");
    if (left.rank() != 4 || left.dim(1) != 3 || left.shape() != right.shape())
      throw ShapeError("AnyNet expects matching N x 3 x H x W left/right images");
    const std::size_t H = left.dim(2), W = left.dim(3);
    if (H % 16 || W % 16) throw ShapeError("AnyNet input " + shape_str(left.shape()) + " not divisible by 16");

    auto fl = [&] {
      LayerLabel label("unet.left");
      return features_(left, training);
    }();
    auto fr = [&] {
      LayerLabel label("unet.right");
      return features_(right, training);
    }();

    AnyNetOutput out;
    auto emit = [&](const Tensor& d, std::size_t scale) {
      out.stage_maps.push_back(d);
      out.full_res.push_back(scale_disparity(d, H, W, static_cast<double>(scale)));
    };

    Tensor d;
    {
      LayerLabel label("stage1");
      CostVolume cv = cost_volume_full(fl[0], fr[0], config_.stage1_candidates());
      cv.cost = nets_[0](cv.cost, training);
      d = soft_argmin(cv);
    }
    emit(d, 16);

    for (int s = 2; s <= std::min(up_to_stage, 3); ++s) {
      LayerLabel label("stage" + std::to_string(s));
      const std::size_t level = static_cast<std::size_t>(s - 1);
      const Tensor base = scale(upsample_bilinear2x(d), 2.0);
      const Tensor warped = warp_with_disparity(fr[level], base);
      CostVolume cv = cost_volume_residual(fl[level], warped, config_.residual_range, base);
      cv.cost = nets_[level](cv.cost, training);
      d = soft_argmin(cv);
      emit(d, AnyNetConfig::kScales[level]);
    }

    if (up_to_stage == 4) {
      if (spn_) {
        LayerLabel label("stage4");
        const Tensor guide = resize_bilinear(left, d.dim(2), d.dim(3));
        emit((*spn_)(d, guide), 4);
      } else {
        out.stage_maps.push_back(out.stage_maps.back());
        out.full_res.push_back(out.full_res.back());
      }
    }
    return out;
  }

  /// Weighted smooth-L1 over the computed stages (weights taken in stage order).
  StereoLoss loss(const AnyNetOutput& out, const Tensor& target, const Tensor& mask, double beta = 1.0) const {
    std::vector<double> w(config_.stage_loss_weights.begin(),
                          config_.stage_loss_weights.begin() + static_cast<std::ptrdiff_t>(out.full_res.size()));
    return stereo_loss_terms(out.full_res, target, mask, w, beta);
  }

  /// Bilinear resize to H x W with disparity values multiplied by `factor`.
  static Tensor scale_disparity(const Tensor& d, std::size_t H, std::size_t W, double factor) {
    return scale(resize_bilinear(d, H, W), factor);
  }

 private:
  AnyNetConfig config_;
  nn::ParamStore store_;
  FeatureExtractor features_;
  std::vector<DisparityNet> nets_;
  std::optional<SpnRefiner> spn_;
};

inline std::vector<Tensor> anynet_forward(AnyNet& model, const Tensor& left, const Tensor& right, int up_to_stage,
                                          bool training = false) {
  return model.forward(left, right, up_to_stage, training).full_res;
}

/// Conv MACs of a forward pass up to `up_to_stage`, per layer label.
inline MacProfile count_flops(AnyNet& model, std::size_t batch, std::size_t h, std::size_t w, int up_to_stage) {
  return nn::count_flops([&] {
    const Tensor img = Tensor::zeros({batch, 3, h, w});
    model.forward(img, img, up_to_stage, false);
  });
}

}  // namespace depthbench::stereo
