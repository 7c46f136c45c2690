#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "depthbench/core/random.hpp"
#include "depthbench/core/tensor.hpp"

namespace depthbench::nn {

enum class ParamRole { weight, bias, bn_gamma, bn_beta, bn_running_mean, bn_running_var };

struct ParamEntry {
  std::string name;
  Tensor tensor;
  ParamRole role = ParamRole::weight;
  bool trainable = true;
};

/// Ordered, uniquely named parameter tensors of one model. Running BN
/// statistics live here too, flagged non-trainable.
class ParamStore {
 public:
  Tensor add(std::string name, Shape shape, ParamRole role) {
    if (!names_.insert(name).second) throw ConfigError("duplicate parameter name: " + name);
    const bool trainable = role != ParamRole::bn_running_mean && role != ParamRole::bn_running_var;
    auto t = Tensor::zeros(std::move(shape), trainable);
    entries_.push_back({std::move(name), t, role, trainable});
    return t;
  }

  const std::vector<ParamEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::vector<Tensor> trainable() const {
    std::vector<Tensor> out;
    for (const auto& e : entries_)
      if (e.trainable) out.push_back(e.tensor);
    return out;
  }

  Tensor find(const std::string& name) const {
    for (const auto& e : entries_)
      if (e.name == name) return e.tensor;
    throw ConfigError("no parameter named " + name);
  }

  void zero_grad() {
    for (auto& e : entries_) e.tensor.zero_grad();
  }

 private:
  std::vector<ParamEntry> entries_;
  std::unordered_set<std::string> names_;
};

struct ParamCounts {
  std::uint64_t trainable = 0;
  std::uint64_t non_trainable = 0;
  std::uint64_t total = 0;
};

inline ParamCounts count_parameters(const ParamStore& store) {
  ParamCounts c;
  for (const auto& e : store.entries()) (e.trainable ? c.trainable : c.non_trainable) += e.tensor.numel();
  c.total = c.trainable + c.non_trainable;
  return c;
}

/// Conv weights ~ U(-b, b) with b = sqrt(6 / fan_in), fan_in = in_channels * kernel
/// volume; biases and BN shifts 0, BN scales 1, running mean 0 / var 1.
inline void init_parameters(ParamStore& store, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (const auto& e : store.entries()) {
    Tensor t = e.tensor;
    auto data = t.mutable_data();
    switch (e.role) {
      case ParamRole::weight: {
        const auto& s = t.shape();
        double fan_in = 1;
        for (std::size_t d = 1; d < s.size(); ++d) fan_in *= static_cast<double>(s[d]);
        const double bound = std::sqrt(6.0 / fan_in);
        for (auto& v : data) v = (2.0 * unit_uniform(rng) - 1.0) * bound;
        break;
      }
      case ParamRole::bias:
      case ParamRole::bn_beta:
      case ParamRole::bn_running_mean:
        std::fill(data.begin(), data.end(), 0.0);
        break;
      case ParamRole::bn_gamma:
      case ParamRole::bn_running_var:
        std::fill(data.begin(), data.end(), 1.0);
        break;
    }
    t.zero_grad();
  }
}

}  // namespace depthbench::nn
