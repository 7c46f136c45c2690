#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "depthbench/core/tensor.hpp"

namespace depthbench {

struct BatchNormOptions {
  bool training = true;
  double epsilon = 1e-5;
  double momentum = 0.1;
};

/// Per-channel normalization over every axis except 1 (works for NCHW and
/// NCDHW). Training mode normalizes by biased batch statistics and folds the
/// unbiased batch variance into the running estimates; eval mode uses the
/// running estimates. `running_mean`/`running_var` are leaves updated in place.
inline Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                        Tensor& running_var, const BatchNormOptions& opt = {}) {
  if (x.rank() < 2) throw ShapeError("batchnorm: expected at least 2 axes, got " + shape_str(x.shape()));
  const std::size_t N = x.dim(0), C = x.dim(1), S = x.numel() / (N * C);
  for (const Tensor* t : std::initializer_list<const Tensor*>{&gamma, &beta, &running_mean, &running_var})
    if (t->numel() != C)
      throw ShapeError("batchnorm: per-channel tensor has " + std::to_string(t->numel()) + " elements, input has " +
                       std::to_string(C) + " channels");
  const double M = static_cast<double>(N * S);
  auto at = [C, S](std::size_t n, std::size_t c, std::size_t s) { return (n * C + c) * S + s; };

  std::vector<double> xhat(x.numel()), inv_std(C), out(x.numel());
  for (std::size_t c = 0; c < C; ++c) {
    double m, v;
    if (opt.training) {
      double s = 0;
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t k = 0; k < S; ++k) s += x[at(n, c, k)];
      m = s / M;
      double ss = 0;
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t k = 0; k < S; ++k) ss += (x[at(n, c, k)] - m) * (x[at(n, c, k)] - m);
      v = ss / M;
      const double unbiased = M > 1 ? ss / (M - 1) : v;
      running_mean.mutable_data()[c] = (1 - opt.momentum) * running_mean[c] + opt.momentum * m;
      running_var.mutable_data()[c] = (1 - opt.momentum) * running_var[c] + opt.momentum * unbiased;
    } else {
      m = running_mean[c];
      v = running_var[c];
    }
    inv_std[c] = 1.0 / std::sqrt(v + opt.epsilon);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t k = 0; k < S; ++k) {
        const auto i = at(n, c, k);
        xhat[i] = (x[i] - m) * inv_std[c];
        out[i] = gamma[c] * xhat[i] + beta[c];
      }
  }

  auto xn = x.node(), gn = gamma.node(), bn = beta.node();
  const bool training = opt.training;
  return detail::make_result(
      "batchnorm", x.shape(), std::move(out), {x, gamma, beta},
      [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](detail::Node& self) {
        auto* gx = detail::grad_sink(xn);
        auto* gg = detail::grad_sink(gn);
        auto* gb = detail::grad_sink(bn);
        const auto& dy = self.grad;
        for (std::size_t c = 0; c < C; ++c) {
          double sum_dy = 0, sum_dy_xhat = 0;
          for (std::size_t n = 0; n < N; ++n)
            for (std::size_t k = 0; k < S; ++k) {
              const auto i = at(n, c, k);
              sum_dy += dy[i];
              sum_dy_xhat += dy[i] * xhat[i];
            }
          if (gg) (*gg)[c] += sum_dy_xhat;
          if (gb) (*gb)[c] += sum_dy;
          if (!gx) continue;
          const double gamma_c = gn->value[c];
          for (std::size_t n = 0; n < N; ++n)
            for (std::size_t k = 0; k < S; ++k) {
              const auto i = at(n, c, k);
              if (training)
                (*gx)[i] += gamma_c * inv_std[c] / M * (M * dy[i] - sum_dy - xhat[i] * sum_dy_xhat);
              else
                (*gx)[i] += gamma_c * inv_std[c] * dy[i];
            }
        }
      });
}

}  // namespace depthbench
