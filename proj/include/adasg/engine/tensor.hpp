// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace adasg::engine {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// One record of the dynamic graph. Op nodes hold their parents and a closure
/// that pushes `grad` into the parents' grads; leaves have no closure.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily, same length as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  bool is_leaf() const { return !backward_fn; }
  std::vector<double>& ensure_grad();
};

/// Dense row-major f64 array with an optional gradient slot.
///
/// Tensor is a handle: copies share the same storage, like a framework tensor.
/// Use clone() for an independent copy and detach() to cut the graph.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor from_node(std::shared_ptr<Node> node);

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }
  /// Extent of dim 0 (1 for scalars).
  std::size_t rows() const;
  /// Product of all extents past dim 0 (1 for rank <= 1).
  std::size_t cols() const;

  std::span<double> values() { return node_->value; }
  std::span<const double> values() const { return node_->value; }
  double item() const;
  double at(std::size_t i) const { return node_->value[i]; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient view; zeros if no gradient has been accumulated yet.
  std::span<const double> grad() const;
  std::vector<double> grad_or_zeros() const;
  void zero_grad();

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag);

  /// Leaf copy of the values, no graph, no grad.
  Tensor detach() const;
  Tensor clone() const;
  /// Overwrites values in place; shape must agree.
  void assign(std::span<const double> values);

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Whether newly created op results record graph edges on this thread.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Builds an op result. Graph edges are kept only when grad mode is on and a
/// parent requires grad.
Tensor make_result(Shape shape, std::vector<double> values,
                   std::vector<Tensor> parents,
                   std::function<void(Node&)> backward_fn);

/// Accumulates d(loss)/d(leaf) into every requires_grad leaf reachable from
/// `loss`. Calling twice on the same graph accumulates twice.
void backward(const Tensor& loss);

/// Returns a graph-free constant carrying the value of `x`.
///
/// Inside an active ConstantReplayScope the value is recorded (first pass) or
/// substituted by the recorded one (replay pass). That turns every
/// stop-gradient site into a frozen constant, so finite differences of a
/// replayed forward see exactly the function whose gradient backward() computes.
Tensor stop_gradient(const Tensor& x);

/// True while a ConstantReplayScope on this thread is substituting constants.
bool constant_replay_active();

class ConstantReplayScope {
 public:
  enum class Mode { kRecord, kReplay };

  ConstantReplayScope();
  ~ConstantReplayScope();
  ConstantReplayScope(const ConstantReplayScope&) = delete;
  ConstantReplayScope& operator=(const ConstantReplayScope&) = delete;

  /// Switch from recording to replaying; rewinds the cursor.
  void replay();
  /// Rewinds the cursor for another replay pass.
  void rewind() { cursor_ = 0; }
  std::size_t recorded() const { return saved_.size(); }

  Tensor intercept(const Tensor& x);
  Mode mode() const { return mode_; }

 private:
  Mode mode_ = Mode::kRecord;
  std::vector<Tensor> saved_;
  std::size_t cursor_ = 0;
  ConstantReplayScope* previous_;
};

}  // namespace adasg::engine
