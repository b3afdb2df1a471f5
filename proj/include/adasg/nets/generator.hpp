// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "adasg/engine/rng.hpp"
#include "adasg/engine/tensor.hpp"
#include "adasg/nets/mlp.hpp"

namespace adasg::nets {

struct GeneratorSpec {
  std::size_t noise_dim = 16;
  std::size_t classes = 10;
  std::vector<std::size_t> hidden{64, 64};
  std::size_t output_dim = 20;

  void validate() const;
  NetworkSpec body() const { return NetworkSpec::mlp(noise_dim, hidden, output_dim); }
  bool operator==(const GeneratorSpec&) const = default;
};

enum class GeneratorMode {
  /// Batch statistics in its own BN layers, running stats updated.
  kTrain,
  /// Batch statistics, state untouched (probe evaluation).
  kBatchStats,
  /// Running statistics (reproducibility checks).
  kEval,
};

/// Label-conditioned generator x = G(z | y): a learned C x noise_dim label
/// embedding is added to the noise, then an MLP body with batch norm maps it
/// to the classifier's input space.
class Generator {
 public:
  Generator(GeneratorSpec spec, engine::Rng& rng);
  Generator(GeneratorSpec spec, engine::Tensor embedding, Mlp body);

  Generator clone() const;

  /// z: [batch, noise_dim], labels: one-hot [batch, classes].
  engine::Tensor forward(const engine::Tensor& z, const engine::Tensor& labels, GeneratorMode mode);

  std::vector<engine::Tensor> parameters() const;
  void set_requires_grad(bool flag);

  const GeneratorSpec& spec() const { return spec_; }
  const engine::Tensor& embedding() const { return embedding_; }
  const Mlp& body() const { return body_; }

 private:
  GeneratorSpec spec_;
  engine::Tensor embedding_;  // [classes, noise_dim]
  Mlp body_;
};

/// [labels.size(), classes] one-hot matrix; throws for labels outside [0, classes).
engine::Tensor one_hot(const std::vector<int>& labels, std::size_t classes);

/// Throws ShapeError unless every row of `labels` is a one-hot vector over `classes`.
void validate_one_hot(const engine::Tensor& labels, std::size_t classes);

}  // namespace adasg::nets
