#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "depthbench/core/tensor.hpp"

namespace depthbench::train {

enum class OptimizerKind { sgd, adam };

inline std::string to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

inline OptimizerKind parse_optimizer_kind(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd or adam)");
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 4;
  std::size_t max_steps = 500;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(lr >= 0) || !std::isfinite(lr)) throw ConfigError("learning rate must be a finite non-negative number");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("adam betas must lie in [0, 1)");
    if (!(epsilon > 0)) throw ConfigError("adam epsilon must be positive");
  }
};

/// Per-parameter first/second moments and the number of updates applied.
struct OptimizerState {
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m, v;
};

/// One update of `params` from `grads` (same order and sizes).
/// sgd: w -= lr g. adam: bias-corrected moments, w -= lr m_hat / (sqrt(v_hat) + eps).
inline void optimizer_step(std::vector<Tensor>& params, const std::vector<std::vector<double>>& grads,
                           OptimizerState& state, const OptimizerConfig& cfg) {
  if (grads.size() != params.size()) throw ShapeError("optimizer_step: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (grads[i].size() != params[i].numel())
      throw ShapeError("optimizer_step: gradient " + std::to_string(i) + " has " + std::to_string(grads[i].size()) +
                       " values for a parameter of shape " + shape_str(params[i].shape()));
  state.step += 1;
  if (cfg.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto w = params[i].mutable_data();
      for (std::size_t j = 0; j < w.size(); ++j) w[j] -= cfg.lr * grads[i][j];
    }
    return;
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), {});
    state.v.assign(params.size(), {});
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].numel(), 0.0);
      state.v[i].assign(params[i].numel(), 0.0);
    }
  }
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t), c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].numel()) throw ShapeError("optimizer_step: moment shape mismatch");
    auto w = params[i].mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double g = grads[i][j];
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      w[j] -= cfg.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.epsilon);
    }
  }
}

/// Applies one step using the gradients accumulated on the parameters.
inline void optimizer_step(std::vector<Tensor>& params, OptimizerState& state, const OptimizerConfig& cfg) {
  std::vector<std::vector<double>> grads;
  grads.reserve(params.size());
  for (const auto& p : params) grads.push_back(p.grad());
  optimizer_step(params, grads, state, cfg);
}

}  // namespace depthbench::train
