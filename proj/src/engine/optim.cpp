// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include "adasg/engine/optim.hpp"

#include <cmath>

#include "adasg/error.hpp"

namespace adasg::engine {

namespace {

void ensure_buffers(std::vector<std::vector<double>>& buffers, std::span<Tensor> params,
                    const char* what) {
  if (buffers.empty()) {
    buffers.reserve(params.size());
    for (const auto& p : params) buffers.emplace_back(p.numel(), 0.0);
    return;
  }
  if (buffers.size() != params.size()) {
    throw ShapeError(std::string(what) + ": optimizer tracks " + std::to_string(buffers.size()) +
                     " tensors but got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (buffers[i].size() != params[i].numel()) {
      throw ShapeError(std::string(what) + ": buffer " + std::to_string(i) + " has " +
                       std::to_string(buffers[i].size()) + " entries, parameter has shape " +
                       to_string(params[i].shape()));
    }
  }
}

}  // namespace

void adam_step(AdamState& state, std::span<Tensor> params) {
  ensure_buffers(state.first_moment, params, "adam");
  ensure_buffers(state.second_moment, params, "adam");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const std::vector<double> grad = params[k].grad_or_zeros();
    auto value = params[k].values();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i] + state.weight_decay * value[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

void sgd_nesterov_step(SgdNesterovState& state, std::span<Tensor> params) {
  ensure_buffers(state.velocity, params, "sgd");
  ++state.step;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const std::vector<double> grad = params[k].grad_or_zeros();
    auto value = params[k].values();
    auto& v = state.velocity[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i] + state.weight_decay * value[i];
      v[i] = state.momentum * v[i] + g;
      const double update = state.nesterov ? g + state.momentum * v[i] : v[i];
      value[i] -= state.lr * update;
    }
  }
}

void plain_gradient_step(double lr, std::span<Tensor> params) {
  for (auto& p : params) {
    if (!p.has_grad()) continue;
    const auto grad = p.grad();
    auto value = p.values();
    for (std::size_t i = 0; i < value.size(); ++i) value[i] -= lr * grad[i];
  }
}

void zero_grads(std::span<Tensor> params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace adasg::engine
