// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "adasg/engine/tensor.hpp"

namespace adasg::engine {

enum class BnMode { kTrain, kEval };

/// Affine parameters and running statistics of one batch-norm layer over
/// `width` features. Variances are biased (divide by batch size) everywhere.
struct BatchNormState {
  explicit BatchNormState(std::size_t width);

  std::size_t width() const { return running_mean.size(); }
  BatchNormState clone() const;

  Tensor gamma;
  Tensor beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

struct BatchNormOutput {
  Tensor y;
  /// Batch statistics of the layer input; differentiable w.r.t. the input.
  /// Always filled in train mode; in eval mode only when requested.
  Tensor batch_mean;
  Tensor batch_var;
};

/// Normalises a [batch, width] input without touching the state.
///
/// kTrain normalises by batch statistics (batch >= 2); kEval by the stored
/// running statistics.
BatchNormOutput batch_norm(const Tensor& x, const BatchNormState& state, BnMode mode,
                           bool want_batch_stats = false);

/// kTrain forward that also moves the running statistics by `momentum`.
BatchNormOutput batch_norm_train(const Tensor& x, BatchNormState& state);

}  // namespace adasg::engine
