// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "adasg/engine/tensor.hpp"

namespace adasg::engine {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  std::int64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

struct SgdNesterovState {
  double lr = 1e-4;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  bool nesterov = true;
  std::int64_t step = 0;
  std::vector<std::vector<double>> velocity;
};

/// Standard bias-corrected Adam; L2 weight decay is folded into the gradient.
/// Buffers are created on the first call and must keep mirroring `params`.
void adam_step(AdamState& state, std::span<Tensor> params);

/// SGD with (Nesterov) momentum, PyTorch semantics without dampening:
///   g += wd * p;  v = mu * v + g;  p -= lr * (nesterov ? g + mu * v : v)
void sgd_nesterov_step(SgdNesterovState& state, std::span<Tensor> params);

/// p -= lr * grad, no state.
void plain_gradient_step(double lr, std::span<Tensor> params);

void zero_grads(std::span<Tensor> params);

}  // namespace adasg::engine
