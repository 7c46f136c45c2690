#pragma once

// Differentiable tensor algebra: elementwise arithmetic, reductions, shape
// manipulation, softmax and activations.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "depthbench/core/tensor.hpp"

namespace depthbench {

namespace detail {

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// Splits a shape around `axis` into (outer, extent, inner) for strided loops.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

inline AxisSplit split_at(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(shape));
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

template <class Fwd, class Deriv>
Tensor unary(const char* op, const Tensor& x, Fwd fwd, Deriv deriv) {
  std::vector<double> out(x.numel());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
  auto xn = x.node();
  return make_result(op, x.shape(), std::move(out), {x}, [xn, deriv](Node& self) {
    auto* gx = grad_sink(xn);
    if (!gx) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) (*gx)[i] += self.grad[i] * deriv(xn->value[i], self.value[i]);
  });
}

}  // namespace detail

// ---------------------------------------------------------------- elementwise

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  auto an = a.node(), bn = b.node();
  return detail::make_result("add", a.shape(), std::move(out), {a, b}, [an, bn](detail::Node& self) {
    if (auto* g = detail::grad_sink(an))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    if (auto* g = detail::grad_sink(bn))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  auto an = a.node(), bn = b.node();
  return detail::make_result("sub", a.shape(), std::move(out), {a, b}, [an, bn](detail::Node& self) {
    if (auto* g = detail::grad_sink(an))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    if (auto* g = detail::grad_sink(bn))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= self.grad[i];
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  auto an = a.node(), bn = b.node();
  return detail::make_result("mul", a.shape(), std::move(out), {a, b}, [an, bn](detail::Node& self) {
    if (auto* g = detail::grad_sink(an))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * bn->value[i];
    if (auto* g = detail::grad_sink(bn))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * an->value[i];
  });
}

inline Tensor div(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "div");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] / b[i];
  auto an = a.node(), bn = b.node();
  return detail::make_result("div", a.shape(), std::move(out), {a, b}, [an, bn](detail::Node& self) {
    if (auto* g = detail::grad_sink(an))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] / bn->value[i];
    if (auto* g = detail::grad_sink(bn))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= self.grad[i] * self.value[i] / bn->value[i];
  });
}

inline Tensor scale(const Tensor& x, double s) {
  return detail::unary("scale", x, [s](double v) { return s * v; }, [s](double, double) { return s; });
}

inline Tensor add_scalar(const Tensor& x, double s) {
  return detail::unary("add_scalar", x, [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

inline Tensor neg(const Tensor& x) { return scale(x, -1.0); }

/// |x| with subgradient 0 at exactly 0.
inline Tensor abs(const Tensor& x) {
  return detail::unary(
      "abs", x, [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

inline Tensor square(const Tensor& x) {
  return detail::unary("square", x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

inline Tensor exp(const Tensor& x) {
  return detail::unary("exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

// ---------------------------------------------------------------- activations

enum class ActivationKind { relu, leaky_relu, swish, sigmoid };

struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double alpha = 0.2;  // leaky_relu negative slope

  static Activation relu() { return {ActivationKind::relu, 0.0}; }
  static Activation leaky_relu(double alpha = 0.2) { return {ActivationKind::leaky_relu, alpha}; }
  static Activation swish() { return {ActivationKind::swish, 0.0}; }
  static Activation sigmoid() { return {ActivationKind::sigmoid, 0.0}; }

  std::string name() const {
    switch (kind) {
      case ActivationKind::relu: return "relu";
      case ActivationKind::leaky_relu: return "leaky_relu";
      case ActivationKind::swish: return "swish";
      case ActivationKind::sigmoid: return "sigmoid";
    }
    return "?";
  }
};

inline double sigmoid_value(double x) {
  // Branches keep exp() from overflowing for large |x|.
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

/// Kinks at exactly 0 take the positive-branch derivative.
inline Tensor activation(const Tensor& x, Activation act) {
  switch (act.kind) {
    case ActivationKind::relu:
      return detail::unary(
          "relu", x, [](double v) { return v >= 0 ? v : 0.0; }, [](double v, double) { return v >= 0 ? 1.0 : 0.0; });
    case ActivationKind::leaky_relu: {
      double a = act.alpha;
      return detail::unary(
          "leaky_relu", x, [a](double v) { return v >= 0 ? v : a * v; },
          [a](double v, double) { return v >= 0 ? 1.0 : a; });
    }
    case ActivationKind::swish:
      return detail::unary(
          "swish", x, [](double v) { return v * sigmoid_value(v); },
          [](double v, double) {
            double s = sigmoid_value(v);
            return s + v * s * (1.0 - s);
          });
    case ActivationKind::sigmoid:
      return detail::unary(
          "sigmoid", x, [](double v) { return sigmoid_value(v); }, [](double, double y) { return y * (1.0 - y); });
  }
  throw ConfigError("unknown activation");
}

// ---------------------------------------------------------------- reductions

inline Tensor sum(const Tensor& x) {
  double s = 0;
  for (double v : x.data()) s += v;
  auto xn = x.node();
  return detail::make_result("sum", {1}, {s}, {x}, [xn](detail::Node& self) {
    if (auto* g = detail::grad_sink(xn))
      for (auto& v : *g) v += self.grad[0];
  });
}

inline Tensor mean(const Tensor& x) {
  double s = 0;
  for (double v : x.data()) s += v;
  const double n = static_cast<double>(x.numel());
  auto xn = x.node();
  return detail::make_result("mean", {1}, {s / n}, {x}, [xn, n](detail::Node& self) {
    if (auto* g = detail::grad_sink(xn))
      for (auto& v : *g) v += self.grad[0] / n;
  });
}

/// Mean over elements where mask != 0. The mask is not differentiated.
inline Tensor masked_mean(const Tensor& x, const Tensor& mask) {
  detail::require_same_shape(x, mask, "masked_mean");
  double s = 0, count = 0;
  for (std::size_t i = 0; i < x.numel(); ++i)
    if (mask[i] != 0) {
      s += x[i];
      count += 1;
    }
  if (count == 0) throw ShapeError("masked_mean: mask selects no elements");
  auto xn = x.node(), mn = mask.node();
  return detail::make_result("masked_mean", {1}, {s / count}, {x}, [xn, mn, count](detail::Node& self) {
    if (auto* g = detail::grad_sink(xn))
      for (std::size_t i = 0; i < g->size(); ++i)
        if (mn->value[i] != 0) (*g)[i] += self.grad[0] / count;
  });
}

/// Sum over one axis, keeping it with extent 1.
inline Tensor sum_axis(const Tensor& x, std::size_t axis) {
  auto sp = detail::split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = 1;
  std::vector<double> out(sp.outer * sp.inner, 0.0);
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t a = 0; a < sp.extent; ++a)
      for (std::size_t i = 0; i < sp.inner; ++i) out[o * sp.inner + i] += x[(o * sp.extent + a) * sp.inner + i];
  auto xn = x.node();
  return detail::make_result("sum_axis", out_shape, std::move(out), {x}, [xn, sp](detail::Node& self) {
    auto* g = detail::grad_sink(xn);
    if (!g) return;
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t a = 0; a < sp.extent; ++a)
        for (std::size_t i = 0; i < sp.inner; ++i) (*g)[(o * sp.extent + a) * sp.inner + i] += self.grad[o * sp.inner + i];
  });
}

inline Tensor mean_axis(const Tensor& x, std::size_t axis) {
  return scale(sum_axis(x, axis), 1.0 / static_cast<double>(x.dim(axis)));
}

// ---------------------------------------------------------------- shape

inline Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  auto xn = x.node();
  return detail::make_result("reshape", std::move(shape), x.values(), {x}, [xn](detail::Node& self) {
    if (auto* g = detail::grad_sink(xn))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

inline Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Shape out_shape = parts[0].shape();
  out_shape.at(axis) = 0;
  for (const auto& p : parts) {
    if (p.rank() != out_shape.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < out_shape.size(); ++d)
      if (d != axis && p.dim(d) != parts[0].dim(d))
        throw ShapeError("concat: non-axis extent mismatch " + shape_str(p.shape()) + " vs " +
                         shape_str(parts[0].shape()));
    out_shape[axis] += p.dim(axis);
  }
  auto sp = detail::split_at(out_shape, axis);
  std::vector<double> out(shape_numel(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t ext = p.dim(axis);
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t a = 0; a < ext; ++a)
        for (std::size_t i = 0; i < sp.inner; ++i)
          out[(o * sp.extent + offset + a) * sp.inner + i] = p[(o * ext + a) * sp.inner + i];
    offset += ext;
  }
  std::vector<detail::NodePtr> nodes;
  for (const auto& p : parts) nodes.push_back(p.node());
  return detail::make_result("concat", out_shape, std::move(out), parts,
                             [nodes, offsets, sp, axis](detail::Node& self) {
                               for (std::size_t k = 0; k < nodes.size(); ++k) {
                                 auto* g = detail::grad_sink(nodes[k]);
                                 if (!g) continue;
                                 const std::size_t ext = nodes[k]->shape[axis];
                                 for (std::size_t o = 0; o < sp.outer; ++o)
                                   for (std::size_t a = 0; a < ext; ++a)
                                     for (std::size_t i = 0; i < sp.inner; ++i)
                                       (*g)[(o * ext + a) * sp.inner + i] +=
                                           self.grad[(o * sp.extent + offsets[k] + a) * sp.inner + i];
                               }
                             });
}

/// Contiguous sub-range [start, start+length) along one axis.
inline Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  auto sp = detail::split_at(x.shape(), axis);
  if (length == 0 || start + length > sp.extent)
    throw ShapeError("slice: range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                     ") exceeds extent " + std::to_string(sp.extent));
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  std::vector<double> out(sp.outer * length * sp.inner);
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t a = 0; a < length; ++a)
      for (std::size_t i = 0; i < sp.inner; ++i)
        out[(o * length + a) * sp.inner + i] = x[(o * sp.extent + start + a) * sp.inner + i];
  auto xn = x.node();
  return detail::make_result("slice", out_shape, std::move(out), {x}, [xn, sp, start, length](detail::Node& self) {
    auto* g = detail::grad_sink(xn);
    if (!g) return;
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t a = 0; a < length; ++a)
        for (std::size_t i = 0; i < sp.inner; ++i)
          (*g)[(o * sp.extent + start + a) * sp.inner + i] += self.grad[(o * length + a) * sp.inner + i];
  });
}

/// Numerically stabilized softmax along `axis`.
inline Tensor softmax(const Tensor& x, std::size_t axis) {
  auto sp = detail::split_at(x.shape(), axis);
  std::vector<double> out(x.numel());
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t i = 0; i < sp.inner; ++i) {
      auto at = [&](std::size_t a) { return (o * sp.extent + a) * sp.inner + i; };
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < sp.extent; ++a) mx = std::max(mx, x[at(a)]);
      double z = 0;
      for (std::size_t a = 0; a < sp.extent; ++a) {
        out[at(a)] = std::exp(x[at(a)] - mx);
        z += out[at(a)];
      }
      for (std::size_t a = 0; a < sp.extent; ++a) out[at(a)] /= z;
    }
  auto xn = x.node();
  return detail::make_result("softmax", x.shape(), std::move(out), {x}, [xn, sp](detail::Node& self) {
    auto* g = detail::grad_sink(xn);
    if (!g) return;
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t i = 0; i < sp.inner; ++i) {
        auto at = [&](std::size_t a) { return (o * sp.extent + a) * sp.inner + i; };
        double dot = 0;
        for (std::size_t a = 0; a < sp.extent; ++a) dot += self.grad[at(a)] * self.value[at(a)];
        for (std::size_t a = 0; a < sp.extent; ++a) (*g)[at(a)] += self.value[at(a)] * (self.grad[at(a)] - dot);
      }
  });
}

/// Edge-replicating spatial pad of the last two axes by `pad` on every side.
inline Tensor pad_replicate(const Tensor& x, std::size_t pad) {
  if (x.rank() < 2) throw ShapeError("pad_replicate: need at least 2 axes");
  const std::size_t h = x.dim(x.rank() - 2), w = x.dim(x.rank() - 1);
  const std::size_t planes = x.numel() / (h * w);
  const std::size_t ph = h + 2 * pad, pw = w + 2 * pad;
  Shape out_shape = x.shape();
  out_shape[x.rank() - 2] = ph;
  out_shape[x.rank() - 1] = pw;
  auto src = [=](std::size_t p, std::size_t y, std::size_t xx) {
    std::size_t sy = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(pad), 0,
                                                static_cast<std::ptrdiff_t>(h) - 1);
    std::size_t sx = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(xx) - static_cast<std::ptrdiff_t>(pad), 0,
                                                static_cast<std::ptrdiff_t>(w) - 1);
    return (p * h + sy) * w + sx;
  };
  std::vector<double> out(planes * ph * pw);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < ph; ++y)
      for (std::size_t xx = 0; xx < pw; ++xx) out[(p * ph + y) * pw + xx] = x[src(p, y, xx)];
  auto xn = x.node();
  return detail::make_result("pad_replicate", out_shape, std::move(out), {x},
                             [xn, src, planes, ph, pw](detail::Node& self) {
                               auto* g = detail::grad_sink(xn);
                               if (!g) return;
                               for (std::size_t p = 0; p < planes; ++p)
                                 for (std::size_t y = 0; y < ph; ++y)
                                   for (std::size_t xx = 0; xx < pw; ++xx)
                                     (*g)[src(p, y, xx)] += self.grad[(p * ph + y) * pw + xx];
                             });
}

}  // namespace depthbench
