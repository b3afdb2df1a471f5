// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "adasg/engine/rng.hpp"
#include "adasg/engine/tensor.hpp"
#include "adasg/nets/mlp.hpp"
#include "adasg/quant/quantizer.hpp"

namespace adasg::nets {

/// Labelled samples; inputs are [n, input_dim], labels in [0, classes).
struct Dataset {
  engine::Tensor inputs;
  std::vector<int> labels;
  std::size_t classes = 0;

  std::size_t size() const { return labels.size(); }
};

/// Per-BN-layer statistics of P: generated-batch moments (differentiable)
/// paired with the stored running moments.
struct BNStatsRecord {
  std::vector<engine::Tensor> generated_mean;
  std::vector<engine::Tensor> generated_var;
  std::vector<std::vector<double>> stored_mean;
  std::vector<std::vector<double>> stored_var;

  std::size_t layers() const { return stored_mean.size(); }
};

struct TeacherOutput {
  engine::Tensor logits;
  BNStatsRecord bns;
};

/// Eval-mode forward of P that also captures the batch moments of each BN
/// layer's input. Needs a batch of at least 2.
TeacherOutput teacher_forward(const Mlp& p, const engine::Tensor& x);
BNStatsRecord collect_generated_bns(const Mlp& p, const engine::Tensor& x);

struct PretrainOptions {
  std::size_t epochs = 40;
  double lr = 1e-3;
  std::size_t batch_size = 64;
};

Mlp build_p(const NetworkSpec& spec, std::size_t classes, engine::Rng& rng);

/// Cross-entropy training with Adam and BN in train mode; returns held-out
/// accuracy. Throws NumericalError on a non-finite loss.
double pretrain_p(Mlp& p, const Dataset& train, const Dataset& test,
                  const PretrainOptions& options, engine::Rng& rng);

/// Quantized copy of P: same architecture and weights, weights and hidden
/// activations fake-quantized, BN running statistics copied and frozen.
Mlp init_q_from_p(const Mlp& p, const quant::QuantConfig& config);

/// Argmax accuracy with BN in eval mode, the whole set forwarded as one batch.
double accuracy(const Mlp& net, const Dataset& data);

/// Mean cross-entropy of softmax(logits) against integer labels.
engine::Tensor cross_entropy(const engine::Tensor& logits, const std::vector<int>& labels);

}  // namespace adasg::nets
