#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "depthbench/core/tensor.hpp"

namespace depthbench {

struct GradCheckOptions {
  double eps = 1e-5;
  // 0 checks every element of every input; otherwise a seeded random subset.
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  std::string worst;  // "input#index analytic=.. numeric=.."
};

/// Compares reverse-mode gradients of the scalar program `fn` against central
/// finite differences, perturbing one input element at a time.
///
/// Relative error per element is |a - n| / max(1e-12, |a| + |n|). An element
/// whose one-sided slopes disagree, or whose central difference changes when
/// the step shrinks tenfold, sits within eps of a kink; it is skipped (full
/// mode) or replaced by another random element (sampled mode).
inline GradCheckResult grad_check(const std::function<Tensor()>& fn, std::vector<Tensor> inputs,
                                  const GradCheckOptions& opt = {}) {
  for (auto& t : inputs) t.zero_grad();
  Tensor loss = fn();
  if (loss.numel() != 1) throw ShapeError("grad_check: program must return a scalar");
  loss.backward();
  std::vector<std::vector<double>> analytic;
  for (auto& t : inputs) analytic.push_back(t.grad());

  auto eval_at = [&](Tensor& t, std::size_t i, double value) {
    const double saved = t[i];
    t.mutable_data()[i] = value;
    double f;
    {
      NoGradGuard guard;
      f = fn().item();
    }
    t.mutable_data()[i] = saved;
    return f;
  };

  GradCheckResult result;
  const double f0 = loss.item();
  // Returns false if the element straddles a kink.
  auto check_element = [&](std::size_t k, std::size_t i) {
    Tensor& t = inputs[k];
    const double x = t[i], h = opt.eps;
    const double fp = eval_at(t, i, x + h), fm = eval_at(t, i, x - h);
    const double fp2 = eval_at(t, i, x + h / 10), fm2 = eval_at(t, i, x - h / 10);
    const double central = (fp - fm) / (2 * h), fine = (fp2 - fm2) / (2 * h / 10);
    const double fwd = (fp - f0) / h, bwd = (f0 - fm) / h;
    const bool asymmetric = std::abs(fwd - bwd) > 1e-2 * (std::abs(fwd) + std::abs(bwd)) + 1e-9;
    const bool unstable = std::abs(central - fine) > 1e-6 * (std::abs(central) + std::abs(fine)) + 1e-10;
    if (asymmetric || unstable) return false;
    const double a = analytic[k][i];
    const double rel = std::abs(a - central) / std::max(1e-12, std::abs(a) + std::abs(central));
    ++result.checked;
    if (rel > result.max_relative_error || result.checked == 1) {
      result.max_relative_error = std::max(result.max_relative_error, rel);
      result.worst = "input" + std::to_string(k) + "#" + std::to_string(i) + " analytic=" + std::to_string(a) +
                     " numeric=" + std::to_string(central);
    }
    return true;
  };

  if (opt.sample_count == 0) {
    for (std::size_t k = 0; k < inputs.size(); ++k)
      for (std::size_t i = 0; i < inputs[k].numel(); ++i)
        if (!check_element(k, i)) ++result.skipped_kinks;
    return result;
  }

  std::size_t total = 0;
  for (const auto& t : inputs) total += t.numel();
  std::mt19937_64 rng(opt.seed);
  std::size_t attempts = 0;
  while (result.checked < opt.sample_count && attempts < 20 * opt.sample_count) {
    ++attempts;
    std::size_t flat = rng() % total, k = 0;
    while (flat >= inputs[k].numel()) flat -= inputs[k++].numel();
    if (!check_element(k, flat)) ++result.skipped_kinks;
  }
  return result;
}

}  // namespace depthbench
