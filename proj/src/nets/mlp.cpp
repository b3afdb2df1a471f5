// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include "adasg/nets/mlp.hpp"

#include <cmath>

#include "adasg/engine/ops.hpp"
#include "adasg/error.hpp"

namespace adasg::nets {

using engine::BnMode;
using engine::Tensor;

NetworkSpec NetworkSpec::mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                             std::size_t output_dim) {
  NetworkSpec spec;
  spec.input_dim = input_dim;
  for (std::size_t width : hidden) spec.layers.push_back({width, true, Activation::kRelu});
  spec.layers.push_back({output_dim, false, Activation::kNone});
  return spec;
}

std::size_t NetworkSpec::batch_norm_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.batch_norm ? 1 : 0;
  return n;
}

void NetworkSpec::validate() const {
  if (input_dim == 0) throw ConfigError("network input_dim must be positive");
  if (layers.empty()) throw ConfigError("network needs at least one layer");
  for (const auto& layer : layers) {
    if (layer.width == 0) throw ConfigError("network layer widths must be positive");
  }
}

void NetworkSpec::validate_classifier(std::size_t classes) const {
  validate();
  if (output_dim() != classes) {
    throw ConfigError("classifier output width " + std::to_string(output_dim()) +
                      " does not match class count " + std::to_string(classes));
  }
  if (batch_norm_count() == 0) throw ConfigError("classifier needs at least one batch-norm layer");
}

Mlp::Mlp(NetworkSpec spec, RestoreTag) : spec_(std::move(spec)) {}

Mlp::Mlp(NetworkSpec spec, engine::Rng& rng) : spec_(std::move(spec)) {
  spec_.validate();
  std::size_t fan_in = spec_.input_dim;
  for (const auto& layer : spec_.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> w(fan_in * layer.width);
    for (double& v : w) v = rng.uniform(-bound, bound);
    std::vector<double> b(layer.width);
    for (double& v : b) v = rng.uniform(-bound, bound);
    dense_.push_back({Tensor({fan_in, layer.width}, std::move(w), true),
                      Tensor({layer.width}, std::move(b), true)});
    if (layer.batch_norm) {
      norms_.emplace_back(engine::BatchNormState(layer.width));
    } else {
      norms_.emplace_back(std::nullopt);
    }
    fan_in = layer.width;
  }
}

Mlp Mlp::clone() const {
  Mlp copy(spec_, RestoreTag{});
  for (const auto& d : dense_) copy.dense_.push_back({d.weight.clone(), d.bias.clone()});
  for (const auto& n : norms_) {
    if (n) {
      copy.norms_.emplace_back(n->clone());
    } else {
      copy.norms_.emplace_back(std::nullopt);
    }
  }
  copy.quant_ = quant_;
  copy.bn_frozen_ = bn_frozen_;
  return copy;
}

Tensor Mlp::forward(const Tensor& x, BnMode mode, BnCapture* capture) const {
  return run(x, mode, nullptr, capture);
}

Tensor Mlp::forward_train(const Tensor& x) {
  return run(x, BnMode::kTrain, bn_frozen_ ? nullptr : &norms_, nullptr);
}

Tensor Mlp::run(const Tensor& x, BnMode mode,
                std::vector<std::optional<engine::BatchNormState>>* running,
                BnCapture* capture) const {
  if (x.rank() != 2 || x.cols() != spec_.input_dim) {
    throw ShapeError("network expects [batch, " + std::to_string(spec_.input_dim) + "] input, got " +
                     engine::to_string(x.shape()));
  }
  if (bn_frozen_) mode = BnMode::kEval;
  Tensor h = x;
  for (std::size_t i = 0; i < dense_.size(); ++i) {
    Tensor input = h;
    Tensor weight = dense_[i].weight;
    if (quant_) {
      if (i > 0 || quant_->quantize_input) input = quant::fake_quantize(input, quant_->bits);
      weight = quant::fake_quantize(weight, quant_->bits);
    }
    h = engine::add(engine::matmul(input, weight), dense_[i].bias);
    if (norms_[i]) {
      auto out = running ? engine::batch_norm_train(h, *(*running)[i])
                         : engine::batch_norm(h, *norms_[i], mode, capture != nullptr);
      if (capture) {
        capture->batch_mean.push_back(out.batch_mean);
        capture->batch_var.push_back(out.batch_var);
      }
      h = out.y;
    }
    if (spec_.layers[i].activation == Activation::kRelu) h = engine::relu(h);
  }
  return h;
}

std::vector<Tensor> Mlp::parameters() const {
  std::vector<Tensor> params;
  for (std::size_t i = 0; i < dense_.size(); ++i) {
    params.push_back(dense_[i].weight);
    params.push_back(dense_[i].bias);
    if (norms_[i]) {
      params.push_back(norms_[i]->gamma);
      params.push_back(norms_[i]->beta);
    }
  }
  return params;
}

void Mlp::set_requires_grad(bool flag) {
  for (auto& p : parameters()) p.set_requires_grad(flag);
}

void Mlp::enable_quantization(const quant::QuantConfig& config) {
  config.validate();
  quant_ = config;
}

Mlp MlpBuilder::assemble(NetworkSpec spec, std::vector<DenseLayer> dense,
                         std::vector<std::optional<engine::BatchNormState>> norms,
                         std::optional<quant::QuantConfig> quant, bool bn_frozen) {
  spec.validate();
  if (dense.size() != spec.layers.size() || norms.size() != spec.layers.size()) {
    throw ShapeError("network parts do not match the layer list");
  }
  Mlp net(std::move(spec), Mlp::RestoreTag{});
  net.dense_ = std::move(dense);
  net.norms_ = std::move(norms);
  net.quant_ = quant;
  net.bn_frozen_ = bn_frozen;
  return net;
}

}  // namespace adasg::nets
