#pragma once

#include <string>
#include <vector>

#include "depthbench/core/ops.hpp"
#include "depthbench/nn/blocks.hpp"
#include "depthbench/nn/params.hpp"

namespace depthbench::mono {

struct MonoModelConfig {
  // Encoder widths, one downscale block each; the decoder mirrors them.
  std::vector<std::size_t> encoder_filters{16, 32, 64, 128};
  std::size_t bottleneck_filters = 256;
  Activation activation = Activation::leaky_relu(0.2);
  bool use_skip_connections = true;
  std::size_t head_kernel = 1;  // 1 or 3
  std::size_t input_size = 256;

  std::size_t levels() const { return encoder_filters.size(); }

  /// "4-1-4", "3-1-3", ...
  std::string structure() const {
    const auto n = std::to_string(levels());
    return n + "-1-" + n;
  }

  static MonoModelConfig variant_414(Activation act = Activation::leaky_relu(0.2)) {
    MonoModelConfig c;
    c.activation = act;
    return c;
  }

  static MonoModelConfig variant_313(Activation act = Activation::leaky_relu(0.2)) {
    MonoModelConfig c;
    c.encoder_filters = {16, 32, 64};
    c.bottleneck_filters = 128;
    c.activation = act;
    return c;
  }

  void validate() const {
    if (encoder_filters.empty()) throw ConfigError("mono model needs at least one downscale block");
    std::size_t prev = 0;
    for (auto f : encoder_filters) {
      if (f <= prev) throw ConfigError("mono filter ladder must be strictly increasing");
      prev = f;
    }
    if (bottleneck_filters <= prev) throw ConfigError("bottleneck must be wider than the last encoder block");
    if (head_kernel != 1 && head_kernel != 3) throw ConfigError("mono head kernel must be 1 or 3");
    const std::size_t factor = std::size_t{1} << levels();
    if (input_size == 0 || input_size % factor != 0)
      throw ConfigError("input size " + std::to_string(input_size) + " is not divisible by " + std::to_string(factor));
  }
};

/// Encoder-decoder depth network: downscale blocks, a bottleneck, mirrored
/// upscale blocks (optionally concatenating the encoder's pre-pool taps), and
/// a 1-channel conv + sigmoid head.
class MonoDepthModel {
 public:
  explicit MonoDepthModel(MonoModelConfig config) : config_(std::move(config)) {
    config_.validate();
    const auto& f = config_.encoder_filters;
    std::size_t in = 3;
    for (std::size_t i = 0; i < f.size(); ++i) {
      down_.push_back(nn::build_block(store_, "down" + std::to_string(i),
                                      {.kind = nn::BlockKind::downscale,
                                       .in_channels = in,
                                       .out_channels = f[i],
                                       .activation = config_.activation}));
      in = f[i];
    }
    bottleneck_.push_back(nn::build_block(store_, "bottleneck",
                                          {.kind = nn::BlockKind::bottleneck,
                                           .in_channels = in,
                                           .out_channels = config_.bottleneck_filters,
                                           .activation = config_.activation,
                                           .has_batchnorm = false}));
    in = config_.bottleneck_filters;
    for (std::size_t i = f.size(); i-- > 0;) {
      up_.push_back(nn::build_block(store_, "up" + std::to_string(i),
                                    {.kind = nn::BlockKind::upscale,
                                     .in_channels = in,
                                     .out_channels = f[i],
                                     .activation = config_.activation,
                                     .has_skip_concat = config_.use_skip_connections,
                                     .skip_channels = config_.use_skip_connections ? f[i] : 0}));
      in = f[i];
    }
    head_ = nn::Conv2d(store_, "head", in, 1, {.kernel = config_.head_kernel});
  }

  MonoDepthModel(const MonoDepthModel&) = delete;
  MonoDepthModel& operator=(const MonoDepthModel&) = delete;
  MonoDepthModel(MonoDepthModel&&) = default;
  MonoDepthModel& operator=(MonoDepthModel&&) = default;

  const MonoModelConfig& config() const { return config_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  /// N x 3 x H x W RGB in [0,1] -> N x 1 x H x W depth in [0,1].
  Tensor forward(const Tensor& rgb, bool training) {
    if (rgb.rank() != 4 || rgb.dim(1) != 3) throw ShapeError("mono model expects N x 3 x H x W input");
    const std::size_t factor = std::size_t{1} << config_.levels();
    if (rgb.dim(2) % factor || rgb.dim(3) % factor)
      throw ShapeError("mono input " + shape_str(rgb.shape()) + " not divisible by " + std::to_string(factor));
    std::vector<Tensor> taps;
    Tensor h = rgb;
    for (auto& block : down_) {
      auto out = block.forward(h, training);
      taps.push_back(out.skip_tap);
      h = out.out;
    }
    h = bottleneck_[0].forward(h, training).out;
    for (std::size_t i = 0; i < up_.size(); ++i) {
      const Tensor& skip = taps[taps.size() - 1 - i];
      h = up_[i].forward(h, training, &skip).out;
    }
    return activation(head_(h), Activation::sigmoid());
  }

  /// Bottleneck activation shape for an input, for inspection.
  Shape bottleneck_shape(std::size_t n, std::size_t h, std::size_t w) const {
    const std::size_t factor = std::size_t{1} << config_.levels();
    return {n, config_.bottleneck_filters, h / factor, w / factor};
  }

 private:
  MonoModelConfig config_;
  nn::ParamStore store_;
  std::vector<nn::Block> down_, bottleneck_, up_;
  nn::Conv2d head_;
};

/// Eval-mode, graph-free prediction for a single 3 x H x W or 1 x 3 x H x W image.
inline Tensor predict_depth(MonoDepthModel& model, const Tensor& image) {
  Tensor x = image.rank() == 3 ? reshape(image, {1, image.dim(0), image.dim(1), image.dim(2)}) : image;
  const auto size = model.config().input_size;
  if (x.rank() != 4 || x.dim(1) != 3 || x.dim(2) != size || x.dim(3) != size)
    throw ShapeError("predict_depth: expected 3x" + std::to_string(size) + "x" + std::to_string(size) + " image, got " +
                     shape_str(image.shape()));
  NoGradGuard no_grad;
  return model.forward(x, false);
}

inline MacProfile count_flops(MonoDepthModel& model, std::size_t batch, std::size_t h, std::size_t w) {
  return nn::count_flops([&] { model.forward(Tensor::zeros({batch, 3, h, w}), false); });
}

}  // namespace depthbench::mono
