#pragma once

#include <functional>
#include <optional>
#include <string>

#include "depthbench/core/ops.hpp"
#include "depthbench/core/resample.hpp"
#include "depthbench/nn/layers.hpp"

namespace depthbench::nn {

enum class BlockKind { downscale, bottleneck, upscale, plain_conv, conv_volume };

inline std::string to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::downscale: return "downscale";
    case BlockKind::bottleneck: return "bottleneck";
    case BlockKind::upscale: return "upscale";
    case BlockKind::plain_conv: return "plain_conv";
    case BlockKind::conv_volume: return "conv_volume";
  }
  return "?";
}

/// Declarative description of one network block.
///
///  - downscale:   2 x (conv -> BN -> act), then 2x2 max pool
///  - bottleneck:  2 x (conv -> act), no BN
///  - upscale:     bilinear 2x upsample, optional skip concat, 2 x (conv -> BN -> act)
///  - plain_conv:  conv -> [BN] -> act
///  - conv_volume: BN -> act -> 3x3x3 conv (pre-activation, no bias) over NCDHW
struct BlockSpec {
  BlockKind kind = BlockKind::plain_conv;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  Activation activation = Activation::leaky_relu(0.2);
  bool has_batchnorm = true;
  bool has_skip_concat = false;
  std::size_t skip_channels = 0;  // channels appended by the skip concat
};

struct BlockOutput {
  Tensor out;
  Tensor skip_tap;  // downscale only: pre-pool activation for a U-Net skip
};

class Block {
 public:
  Block(ParamStore& store, const std::string& name, const BlockSpec& spec) : spec_(spec) {
    if (spec.in_channels == 0 || spec.out_channels == 0)
      throw ConfigError(name + ": block channel counts must be positive");
    if (spec.has_skip_concat && spec.kind != BlockKind::upscale)
      throw ConfigError(name + ": skip concat is only valid on upscale blocks");
    if (spec.has_skip_concat && spec.skip_channels == 0)
      throw ConfigError(name + ": skip concat needs skip_channels > 0");

    switch (spec.kind) {
      case BlockKind::downscale:
      case BlockKind::upscale: {
        const std::size_t first_in = spec.in_channels + (spec.has_skip_concat ? spec.skip_channels : 0);
        convs_.emplace_back(store, name + ".conv_a", first_in, spec.out_channels);
        if (spec.has_batchnorm) norms_.emplace_back(store, name + ".bn_a", spec.out_channels);
        convs_.emplace_back(store, name + ".conv_b", spec.out_channels, spec.out_channels);
        if (spec.has_batchnorm) norms_.emplace_back(store, name + ".bn_b", spec.out_channels);
        break;
      }
      case BlockKind::bottleneck:
        convs_.emplace_back(store, name + ".conv_a", spec.in_channels, spec.out_channels);
        convs_.emplace_back(store, name + ".conv_b", spec.out_channels, spec.out_channels);
        break;
      case BlockKind::plain_conv:
        convs_.emplace_back(store, name + ".conv", spec.in_channels, spec.out_channels);
        if (spec.has_batchnorm) norms_.emplace_back(store, name + ".bn", spec.out_channels);
        break;
      case BlockKind::conv_volume:
        norms_.emplace_back(store, name + ".bn", spec.in_channels);
        volume_conv_ = Conv3d(store, name + ".conv", spec.in_channels, spec.out_channels);
        break;
    }
  }

  const BlockSpec& spec() const { return spec_; }

  BlockOutput forward(const Tensor& x, bool training, const Tensor* skip = nullptr) {
    const auto& act = spec_.activation;
    switch (spec_.kind) {
      case BlockKind::downscale: {
        Tensor h = conv_norm_act(0, x, training);
        h = conv_norm_act(1, h, training);
        return {max_pool2x2(h), h};
      }
      case BlockKind::bottleneck: {
        Tensor h = activation(convs_[0](x), act);
        return {activation(convs_[1](h), act), {}};
      }
      case BlockKind::upscale: {
        Tensor h = upsample_bilinear2x(x);
        if (spec_.has_skip_concat) {
          if (!skip) throw ShapeError("upscale block expects a skip tensor");
          h = concat({h, *skip}, 1);
        }
        h = conv_norm_act(0, h, training);
        return {conv_norm_act(1, h, training), {}};
      }
      case BlockKind::plain_conv:
        return {conv_norm_act(0, x, training), {}};
      case BlockKind::conv_volume:
        return {volume_conv_(activation(norms_[0](x, training), act)), {}};
    }
    throw ConfigError("unknown block kind");
  }

 private:
  Tensor conv_norm_act(std::size_t i, const Tensor& x, bool training) {
    Tensor h = convs_[i](x);
    if (spec_.has_batchnorm) h = norms_[i](h, training);
    return activation(h, spec_.activation);
  }

  BlockSpec spec_;
  std::vector<Conv2d> convs_;
  std::vector<BatchNorm> norms_;
  Conv3d volume_conv_;
};

inline Block build_block(ParamStore& store, const std::string& name, const BlockSpec& spec) {
  return Block(store, name, spec);
}

/// Runs `forward` without recording a graph and returns the conv MACs it issued.
inline MacProfile count_flops(const std::function<void()>& forward) {
  MacProfile profile;
  NoGradGuard no_grad;
  MacProfileScope scope(profile);
  forward();
  return profile;
}

}  // namespace depthbench::nn
