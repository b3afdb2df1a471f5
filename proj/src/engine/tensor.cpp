// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include "adasg/engine/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "adasg/error.hpp"

namespace adasg::engine {

namespace {

thread_local bool g_grad_enabled = true;
thread_local ConstantReplayScope* g_replay_scope = nullptr;

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::vector<double>& Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor::Tensor() : Tensor(Shape{}, {0.0}) {}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : node_(std::make_shared<Node>()) {
  for (std::size_t extent : shape) {
    if (extent == 0) throw ShapeError("tensor extents must be positive, got " + to_string(shape));
  }
  if (values.size() != engine::numel(shape)) {
    throw ShapeError("value count " + std::to_string(values.size()) +
                     " does not match shape " + to_string(shape));
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = engine::numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor(Shape{}, {value}, requires_grad); }

Tensor Tensor::from_node(std::shared_ptr<Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

std::size_t Tensor::rows() const { return node_->shape.empty() ? 1 : node_->shape[0]; }

std::size_t Tensor::cols() const { return numel() / rows(); }

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() needs a single-element tensor, got " + to_string(shape()));
  return node_->value[0];
}

std::span<const double> Tensor::grad() const {
  if (node_->grad.empty()) node_->ensure_grad();
  return node_->grad;
}

std::vector<double> Tensor::grad_or_zeros() const {
  if (node_->grad.empty()) return std::vector<double>(numel(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.clear(); }

void Tensor::set_requires_grad(bool flag) { node_->requires_grad = flag; }

Tensor Tensor::detach() const { return Tensor(node_->shape, node_->value, false); }

Tensor Tensor::clone() const { return Tensor(node_->shape, node_->value, node_->requires_grad); }

void Tensor::assign(std::span<const double> values) {
  if (values.size() != numel()) {
    throw ShapeError("assign: " + std::to_string(values.size()) + " values into " + to_string(shape()));
  }
  std::copy(values.begin(), values.end(), node_->value.begin());
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward_fn) {
  Tensor out(std::move(shape), std::move(values));
  if (!g_grad_enabled) return out;
  const bool track = std::any_of(parents.begin(), parents.end(),
                                 [](const Tensor& p) { return p.requires_grad(); });
  if (!track) return out;
  auto& node = *out.node();
  node.requires_grad = true;
  node.parents.reserve(parents.size());
  for (auto& p : parents) node.parents.push_back(p.node());
  node.backward_fn = std::move(backward_fn);
  return out;
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + to_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; reversed it is a valid reverse-topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* node : order) {
    if (!node->is_leaf()) node->grad.assign(node->value.size(), 0.0);
  }
  loss.node()->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (!node->is_leaf()) node->backward_fn(*node);
  }
}

Tensor stop_gradient(const Tensor& x) {
  if (g_replay_scope != nullptr) return g_replay_scope->intercept(x);
  return x.detach();
}

bool constant_replay_active() {
  return g_replay_scope != nullptr && g_replay_scope->mode() == ConstantReplayScope::Mode::kReplay;
}

ConstantReplayScope::ConstantReplayScope() : previous_(g_replay_scope) { g_replay_scope = this; }

ConstantReplayScope::~ConstantReplayScope() { g_replay_scope = previous_; }

void ConstantReplayScope::replay() {
  mode_ = Mode::kReplay;
  cursor_ = 0;
}

Tensor ConstantReplayScope::intercept(const Tensor& x) {
  if (mode_ == Mode::kRecord) {
    saved_.push_back(x.detach());
    return saved_.back().detach();
  }
  if (cursor_ >= saved_.size()) {
    throw Error("constant replay: forward requested more stop-gradient constants than were recorded");
  }
  const Tensor& saved = saved_[cursor_++];
  if (saved.shape() != x.shape()) {
    throw ShapeError("constant replay: recorded " + to_string(saved.shape()) + " but got " +
                     to_string(x.shape()));
  }
  return saved.detach();
}

}  // namespace adasg::engine
