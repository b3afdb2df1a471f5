// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include "adasg/engine/batch_norm.hpp"

#include <cmath>

#include "adasg/engine/ops.hpp"
#include "adasg/error.hpp"

namespace adasg::engine {

namespace {

void check_input(const Tensor& x, std::size_t width) {
  if (x.rank() != 2 || x.cols() != width) {
    throw ShapeError("batch_norm: expected [batch, " + std::to_string(width) + "], got " +
                     to_string(x.shape()));
  }
}

struct Moments {
  Tensor mean;
  Tensor var;
};

Moments batch_moments(const Tensor& x) {
  Tensor mu = col_mean(x);
  Tensor var = col_mean(square(sub(x, mu)));
  return {mu, var};
}

}  // namespace

BatchNormState::BatchNormState(std::size_t width)
    : gamma(Tensor::full({width}, 1.0, true)),
      beta(Tensor::zeros({width}, true)),
      running_mean(width, 0.0),
      running_var(width, 1.0) {}

BatchNormState BatchNormState::clone() const {
  BatchNormState copy(width());
  copy.gamma = gamma.clone();
  copy.beta = beta.clone();
  copy.running_mean = running_mean;
  copy.running_var = running_var;
  copy.momentum = momentum;
  copy.eps = eps;
  return copy;
}

BatchNormOutput batch_norm(const Tensor& x, const BatchNormState& state, BnMode mode,
                           bool want_batch_stats) {
  check_input(x, state.width());
  if (mode == BnMode::kTrain) {
    if (x.rows() < 2) {
      throw DomainError("batch_norm: train mode needs a batch of at least 2 (variance is degenerate)");
    }
    Moments m = batch_moments(x);
    Tensor denom = sqrt(add_scalar(m.var, state.eps));
    Tensor y = add(mul(div(sub(x, m.mean), denom), state.gamma), state.beta);
    return {y, m.mean, m.var};
  }

  std::vector<double> shift(state.width());
  std::vector<double> inv_std(state.width());
  for (std::size_t j = 0; j < state.width(); ++j) {
    shift[j] = state.running_mean[j];
    inv_std[j] = 1.0 / std::sqrt(state.running_var[j] + state.eps);
  }
  const Tensor mu({state.width()}, std::move(shift));
  const Tensor inv({state.width()}, std::move(inv_std));
  Tensor y = add(mul(mul(sub(x, mu), inv), state.gamma), state.beta);
  BatchNormOutput out{y, Tensor(), Tensor()};
  if (want_batch_stats) {
    if (x.rows() < 2) throw DomainError("batch_norm: batch statistics need a batch of at least 2");
    Moments m = batch_moments(x);
    out.batch_mean = m.mean;
    out.batch_var = m.var;
  }
  return out;
}

BatchNormOutput batch_norm_train(const Tensor& x, BatchNormState& state) {
  BatchNormOutput out = batch_norm(x, state, BnMode::kTrain);
  const double k = state.momentum;
  for (std::size_t j = 0; j < state.width(); ++j) {
    state.running_mean[j] = (1.0 - k) * state.running_mean[j] + k * out.batch_mean.at(j);
    state.running_var[j] = (1.0 - k) * state.running_var[j] + k * out.batch_var.at(j);
  }
  return out;
}

}  // namespace adasg::engine
