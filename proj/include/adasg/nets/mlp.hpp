// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "adasg/engine/batch_norm.hpp"
#include "adasg/engine/rng.hpp"
#include "adasg/engine/tensor.hpp"
#include "adasg/quant/quantizer.hpp"

namespace adasg::nets {

enum class Activation { kNone, kRelu };

/// One affine layer, optionally followed by batch norm and an activation.
struct LayerSpec {
  std::size_t width = 0;
  bool batch_norm = false;
  Activation activation = Activation::kNone;

  bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
  std::size_t input_dim = 0;
  std::vector<LayerSpec> layers;

  /// Hidden layers are affine -> BN -> ReLU; the output layer is affine only.
  static NetworkSpec mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                         std::size_t output_dim);

  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().width; }
  std::size_t batch_norm_count() const;
  void validate() const;
  /// validate() plus: output width equals `classes`, at least one BN layer.
  void validate_classifier(std::size_t classes) const;

  bool operator==(const NetworkSpec&) const = default;
};

struct DenseLayer {
  engine::Tensor weight;  // [in, out]
  engine::Tensor bias;    // [out]
};

/// Batch statistics of every BN layer's input seen during one forward pass.
struct BnCapture {
  std::vector<engine::Tensor> batch_mean;
  std::vector<engine::Tensor> batch_var;
};

/// Multilayer perceptron with optional batch norm and optional fake
/// quantization of weights and activations.
class Mlp {
 public:
  Mlp(NetworkSpec spec, engine::Rng& rng);
  Mlp(const Mlp&) = delete;
  Mlp& operator=(const Mlp&) = delete;
  Mlp(Mlp&&) = default;
  Mlp& operator=(Mlp&&) = default;

  /// Deep copy; the copy owns fresh parameter tensors.
  Mlp clone() const;

  /// Forward pass that never mutates running statistics. kTrain normalises by
  /// batch statistics. A network with frozen BN always uses running stats.
  engine::Tensor forward(const engine::Tensor& x, engine::BnMode mode = engine::BnMode::kEval,
                         BnCapture* capture = nullptr) const;

  /// Training forward: batch statistics and running-stat update.
  engine::Tensor forward_train(const engine::Tensor& x);

  /// Trainable tensors: per layer weight, bias, then BN gamma, beta.
  std::vector<engine::Tensor> parameters() const;
  void set_requires_grad(bool flag);

  const NetworkSpec& spec() const { return spec_; }
  const std::vector<DenseLayer>& dense() const { return dense_; }
  const std::vector<std::optional<engine::BatchNormState>>& norms() const { return norms_; }
  std::vector<std::optional<engine::BatchNormState>>& norms() { return norms_; }

  const std::optional<quant::QuantConfig>& quantization() const { return quant_; }
  void enable_quantization(const quant::QuantConfig& config);
  bool bn_frozen() const { return bn_frozen_; }
  void freeze_bn_statistics() { bn_frozen_ = true; }

 private:
  struct RestoreTag {};
  Mlp(NetworkSpec spec, RestoreTag);
  friend class MlpBuilder;

  /// `running` non-null means train mode with running-stat updates into it.
  engine::Tensor run(const engine::Tensor& x, engine::BnMode mode,
                     std::vector<std::optional<engine::BatchNormState>>* running,
                     BnCapture* capture) const;

  NetworkSpec spec_;
  std::vector<DenseLayer> dense_;
  std::vector<std::optional<engine::BatchNormState>> norms_;
  std::optional<quant::QuantConfig> quant_;
  bool bn_frozen_ = false;
};

/// Rebuilds an Mlp from raw parts (used by checkpoint loading).
class MlpBuilder {
 public:
  static Mlp assemble(NetworkSpec spec, std::vector<DenseLayer> dense,
                      std::vector<std::optional<engine::BatchNormState>> norms,
                      std::optional<quant::QuantConfig> quant, bool bn_frozen);
};

}  // namespace adasg::nets
