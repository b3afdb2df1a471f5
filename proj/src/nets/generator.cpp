// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include "adasg/nets/generator.hpp"

#include "adasg/engine/ops.hpp"
#include "adasg/error.hpp"

namespace adasg::nets {

using engine::Tensor;

void GeneratorSpec::validate() const {
  if (noise_dim == 0 || output_dim == 0) throw ConfigError("generator dims must be positive");
  if (classes < 2) throw ConfigError("generator needs at least 2 classes");
  body().validate();
}

Generator::Generator(GeneratorSpec spec, engine::Rng& rng)
    : spec_(std::move(spec)),
      embedding_(engine::gaussian(rng, {spec_.classes, spec_.noise_dim}, true)),
      body_(spec_.body(), rng) {
  spec_.validate();
}

Generator::Generator(GeneratorSpec spec, Tensor embedding, Mlp body)
    : spec_(std::move(spec)), embedding_(std::move(embedding)), body_(std::move(body)) {
  spec_.validate();
  if (embedding_.shape() != engine::Shape{spec_.classes, spec_.noise_dim}) {
    throw ShapeError("generator embedding has shape " + engine::to_string(embedding_.shape()));
  }
  if (!(body_.spec() == spec_.body())) throw ShapeError("generator body does not match its spec");
}

Generator Generator::clone() const { return Generator(spec_, embedding_.clone(), body_.clone()); }

Tensor Generator::forward(const Tensor& z, const Tensor& labels, GeneratorMode mode) {
  if (z.rank() != 2 || z.cols() != spec_.noise_dim) {
    throw ShapeError("generator noise must be [batch, " + std::to_string(spec_.noise_dim) + "], got " +
                     engine::to_string(z.shape()));
  }
  validate_one_hot(labels, spec_.classes);
  if (labels.rows() != z.rows()) throw ShapeError("generator: noise and label batch sizes differ");
  const Tensor conditioned = engine::add(z, engine::matmul(labels, embedding_));
  switch (mode) {
    case GeneratorMode::kTrain: return body_.forward_train(conditioned);
    case GeneratorMode::kBatchStats: return body_.forward(conditioned, engine::BnMode::kTrain);
    case GeneratorMode::kEval: break;
  }
  return body_.forward(conditioned, engine::BnMode::kEval);
}

std::vector<Tensor> Generator::parameters() const {
  std::vector<Tensor> params{embedding_};
  for (auto& p : body_.parameters()) params.push_back(p);
  return params;
}

void Generator::set_requires_grad(bool flag) {
  for (auto& p : parameters()) p.set_requires_grad(flag);
}

Tensor one_hot(const std::vector<int>& labels, std::size_t classes) {
  if (labels.empty()) throw ShapeError("one_hot: empty label list");
  std::vector<double> values(labels.size() * classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw DomainError("one_hot: label " + std::to_string(labels[i]) + " outside [0, " +
                        std::to_string(classes) + ")");
    }
    values[i * classes + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  return Tensor({labels.size(), classes}, std::move(values));
}

void validate_one_hot(const Tensor& labels, std::size_t classes) {
  if (labels.rank() != 2 || labels.cols() != classes) {
    throw ShapeError("labels must be one-hot [batch, " + std::to_string(classes) + "], got " +
                     engine::to_string(labels.shape()));
  }
  for (std::size_t i = 0; i < labels.rows(); ++i) {
    int ones = 0;
    for (std::size_t j = 0; j < classes; ++j) {
      const double v = labels.at(i, j);
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        ones = -1;
        break;
      }
    }
    if (ones != 1) throw ShapeError("labels row " + std::to_string(i) + " is not one-hot");
  }
}

}  // namespace adasg::nets
