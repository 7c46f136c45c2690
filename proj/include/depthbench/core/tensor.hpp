#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "depthbench/core/error.hpp"

namespace depthbench {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a backward pass reaches the node
  bool requires_grad = false;
  std::uint64_t seq = 0;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads `self.grad` and accumulates into the parents' grads.
  std::function<void(Node& self)> backward;

  bool is_leaf() const { return !backward; }

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

using NodePtr = std::shared_ptr<Node>;

inline std::uint64_t next_seq() {
  thread_local std::uint64_t counter = 0;
  return ++counter;
}

inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

}  // namespace detail

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode()) { detail::grad_mode() = false; }
  ~NoGradGuard() { detail::grad_mode() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Dense row-major array of doubles that records the operations applied to it
/// so gradients can be propagated back to leaves with `backward()`.
///
/// Tensors are handles: copying a Tensor shares the underlying storage and
/// graph node. 4-D image data is laid out batch, channel, height, width.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(detail::NodePtr node) : node_(std::move(node)) {}

  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false) {
    if (shape.empty()) throw ShapeError("tensor shape must have at least one axis");
    for (auto extent : shape)
      if (extent == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
    if (shape_numel(shape) != values.size())
      throw ShapeError("element count " + std::to_string(values.size()) + " does not match shape " +
                       shape_str(shape));
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    node->seq = detail::next_seq();
    return Tensor(std::move(node));
  }

  static Tensor full(Shape shape, double fill, bool requires_grad = false) {
    auto n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, fill), requires_grad);
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return full(std::move(shape), 0.0, requires_grad);
  }

  static Tensor scalar(double v, bool requires_grad = false) { return from({1}, {v}, requires_grad); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const double> data() const { return node_->value; }
  const std::vector<double>& values() const { return node_->value; }

  /// In-place access, only for leaves (parameters, inputs, running stats).
  std::span<double> mutable_data() {
    if (!node_->is_leaf()) throw Error("mutable_data() on a non-leaf tensor");
    return node_->value;
  }

  double operator[](std::size_t i) const { return node_->value[i]; }

  double item() const {
    if (numel() != 1) throw ShapeError("item() requires a single-element tensor, got " + shape_str(shape()));
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) {
    if (!node_->is_leaf()) throw Error("requires_grad can only be set on leaves");
    node_->requires_grad = on;
  }

  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient accumulator; all zeros if no backward pass has reached this leaf.
  std::vector<double> grad() const {
    return has_grad() ? node_->grad : std::vector<double>(numel(), 0.0);
  }
  std::span<double> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() { node_->grad.clear(); }

  Tensor detach() const { return from(shape(), node_->value, false); }

  /// Reverse-mode sweep from this scalar. Leaf gradients accumulate across
  /// calls; interior gradients are transient.
  void backward() const;

  const char* op_name() const { return node_->op; }
  const detail::NodePtr& node() const { return node_; }

 private:
  detail::NodePtr node_;
};

namespace detail {

inline bool any_requires_grad(std::span<const Tensor> inputs) {
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
}

/// Wraps a freshly computed value as a graph node. The graph edge is recorded
/// only when grad mode is on and at least one input requires grad.
inline Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                          std::initializer_list<Tensor> inputs, std::function<void(Node&)> backward) {
  for (double v : value)
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + op);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->seq = next_seq();
  node->op = op;
  std::vector<Tensor> in(inputs);
  if (grad_mode() && any_requires_grad(in)) {
    node->requires_grad = true;
    for (const auto& t : in) node->parents.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

inline Tensor make_result(const char* op, Shape shape, std::vector<double> value, const std::vector<Tensor>& inputs,
                          std::function<void(Node&)> backward) {
  for (double v : value)
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + op);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->seq = next_seq();
  node->op = op;
  if (grad_mode() && any_requires_grad(inputs)) {
    node->requires_grad = true;
    for (const auto& t : inputs) node->parents.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

/// Gradient buffer of an input if it participates in differentiation, else null.
inline std::vector<double>* grad_sink(const NodePtr& node) {
  return node->requires_grad ? &node->ensure_grad() : nullptr;
}

}  // namespace detail

inline void Tensor::backward() const {
  if (numel() != 1) throw ShapeError("backward() requires a scalar loss, got " + shape_str(shape()));
  if (!node_->requires_grad) return;

  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<detail::Node*> stack{node_.get()};
  while (!stack.empty()) {
    auto* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    order.push_back(n);
    for (const auto& p : n->parents)
      if (p->requires_grad) stack.push_back(p.get());
  }
  // Reverse execution order: sequence numbers grow monotonically as ops run.
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->seq > b->seq; });

  for (auto* n : order)
    if (!n->is_leaf()) n->grad.assign(n->value.size(), 0.0);
  node_->ensure_grad()[0] += 1.0;
  for (auto* n : order)
    if (!n->is_leaf()) n->backward(*n);
  for (auto* n : order)
    if (!n->is_leaf()) std::vector<double>().swap(n->grad);
}

}  // namespace depthbench
