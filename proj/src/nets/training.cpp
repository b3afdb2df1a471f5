// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include "adasg/nets/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adasg/engine/ops.hpp"
#include "adasg/engine/optim.hpp"
#include "adasg/error.hpp"
#include "adasg/nets/generator.hpp"

namespace adasg::nets {

using engine::Tensor;

TeacherOutput teacher_forward(const Mlp& p, const Tensor& x) {
  if (x.rank() != 2 || x.rows() < 2) {
    throw DomainError("BN statistics need a batch of at least 2 samples");
  }
  BnCapture capture;
  Tensor logits = p.forward(x, engine::BnMode::kEval, &capture);
  TeacherOutput out{logits, {}};
  out.bns.generated_mean = std::move(capture.batch_mean);
  out.bns.generated_var = std::move(capture.batch_var);
  for (const auto& norm : p.norms()) {
    if (!norm) continue;
    out.bns.stored_mean.push_back(norm->running_mean);
    out.bns.stored_var.push_back(norm->running_var);
  }
  return out;
}

BNStatsRecord collect_generated_bns(const Mlp& p, const Tensor& x) { return teacher_forward(p, x).bns; }

Mlp build_p(const NetworkSpec& spec, std::size_t classes, engine::Rng& rng) {
  spec.validate_classifier(classes);
  return Mlp(spec, rng);
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  const Tensor target = one_hot(labels, logits.cols());
  const Tensor log_p = engine::log(engine::softmax(logits, 1), 1e-300);
  return engine::neg(engine::mean(engine::row_sum(engine::mul(target, log_p))));
}

namespace {

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  const std::size_t d = x.cols();
  std::vector<double> values;
  values.reserve(rows.size() * d);
  for (std::size_t r : rows) {
    const auto begin = x.values().begin() + static_cast<std::ptrdiff_t>(r * d);
    values.insert(values.end(), begin, begin + static_cast<std::ptrdiff_t>(d));
  }
  return Tensor({rows.size(), d}, std::move(values));
}

}  // namespace

double pretrain_p(Mlp& p, const Dataset& train, const Dataset& test, const PretrainOptions& options,
                  engine::Rng& rng) {
  for (int label : train.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= train.classes) {
      throw DomainError("pretrain: label " + std::to_string(label) + " outside [0, " +
                        std::to_string(train.classes) + ")");
    }
  }
  auto params = p.parameters();
  engine::AdamState adam;
  adam.lr = options.lr;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      if (stop - start < 2) break;
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      std::vector<int> labels;
      labels.reserve(idx.size());
      for (std::size_t i : idx) labels.push_back(train.labels[i]);
      engine::zero_grads(params);
      Tensor loss = cross_entropy(p.forward_train(gather_rows(train.inputs, idx)), labels);
      if (!std::isfinite(loss.item())) {
        throw NumericalError("pretrain: non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch starting at " + std::to_string(start));
      }
      engine::backward(loss);
      engine::adam_step(adam, params);
    }
  }
  engine::zero_grads(params);
  return accuracy(p, test);
}

Mlp init_q_from_p(const Mlp& p, const quant::QuantConfig& config) {
  Mlp q = p.clone();
  q.enable_quantization(config);
  q.freeze_bn_statistics();
  q.set_requires_grad(true);
  return q;
}

double accuracy(const Mlp& net, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  engine::NoGradGuard no_grad;
  const Tensor logits = net.forward(data.inputs, engine::BnMode::kEval);
  const std::size_t c = logits.cols();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = logits.values().subspan(i * c, c);
    const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    correct += best == data.labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace adasg::nets
