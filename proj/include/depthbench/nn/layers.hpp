#pragma once

#include <string>

#include "depthbench/core/batchnorm.hpp"
#include "depthbench/core/conv.hpp"
#include "depthbench/core/profile.hpp"
#include "depthbench/nn/params.hpp"

namespace depthbench::nn {

struct ConvOptions {
  std::size_t kernel = 3;
  std::size_t stride = 1;
  // Defaults to kernel / 2 ("same" for odd kernels at stride 1).
  std::size_t padding = static_cast<std::size_t>(-1);
  bool bias = true;
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, ConvOptions opt = {})
      : name_(name), stride_(opt.stride), padding_(opt.padding == static_cast<std::size_t>(-1) ? opt.kernel / 2 : opt.padding) {
    if (in == 0 || out == 0) throw ConfigError(name + ": channel counts must be positive");
    weight_ = store.add(name + ".weight", {out, in, opt.kernel, opt.kernel}, ParamRole::weight);
    if (opt.bias) bias_ = store.add(name + ".bias", {out}, ParamRole::bias);
  }

  Tensor operator()(const Tensor& x) const {
    LayerLabel label(name_);
    return conv2d(x, weight_, bias_, stride_, padding_);
  }

  const Tensor& weight() const { return weight_; }

 private:
  std::string name_;
  Tensor weight_, bias_;
  std::size_t stride_ = 1, padding_ = 1;
};

class Conv3d {
 public:
  Conv3d() = default;
  Conv3d(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, bool bias = false)
      : name_(name) {
    if (in == 0 || out == 0) throw ConfigError(name + ": channel counts must be positive");
    weight_ = store.add(name + ".weight", {out, in, 3, 3, 3}, ParamRole::weight);
    if (bias) bias_ = store.add(name + ".bias", {out}, ParamRole::bias);
  }

  Tensor operator()(const Tensor& x) const {
    LayerLabel label(name_);
    return conv3d(x, weight_, bias_, 1, 1);
  }

 private:
  std::string name_;
  Tensor weight_, bias_;
};

/// Learnable scale/shift plus running statistics (eps 1e-5, momentum 0.1).
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(ParamStore& store, const std::string& name, std::size_t channels) {
    if (channels == 0) throw ConfigError(name + ": channel count must be positive");
    gamma_ = store.add(name + ".gamma", {channels}, ParamRole::bn_gamma);
    beta_ = store.add(name + ".beta", {channels}, ParamRole::bn_beta);
    mean_ = store.add(name + ".running_mean", {channels}, ParamRole::bn_running_mean);
    var_ = store.add(name + ".running_var", {channels}, ParamRole::bn_running_var);
  }

  Tensor operator()(const Tensor& x, bool training) {
    return batchnorm(x, gamma_, beta_, mean_, var_, {.training = training});
  }

 private:
  Tensor gamma_, beta_, mean_, var_;
};

}  // namespace depthbench::nn
