// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include "adasg/game/losses.hpp"

#include <cmath>

#include "adasg/engine/ops.hpp"
#include "adasg/error.hpp"

namespace adasg::game {

using engine::Tensor;

Tensor cross_entropy_loss(const Tensor& probs, const Tensor& labels) {
  if (probs.shape() != labels.shape()) {
    throw ShapeError("cross-entropy: probabilities " + engine::to_string(probs.shape()) + " vs labels " +
                     engine::to_string(labels.shape()));
  }
  const Tensor log_p = engine::log(probs, kProbabilityFloor);
  return engine::neg(engine::mean(engine::row_sum(engine::mul(labels, log_p))));
}

Tensor loss_ds(const Tensor& p_ds, const Tensor& labels) { return cross_entropy_loss(p_ds, labels); }

Tensor loss_as(const Tensor& p_as, const Tensor& labels) { return cross_entropy_loss(p_as, labels); }

Tensor loss_bound(const Tensor& h_norm, double lambda_l, double lambda_u) {
  const Tensor below = engine::relu(engine::add_scalar(engine::neg(h_norm), lambda_l));
  const Tensor above = engine::relu(engine::add_scalar(h_norm, -lambda_u));
  return engine::mean(engine::add(below, above));
}

Tensor loss_bns(const nets::BNStatsRecord& record, SigmaMode sigma) {
  if (record.generated_mean.size() != record.layers() || record.generated_var.size() != record.layers()) {
    throw ShapeError("BNS record: generated and stored layer counts differ");
  }
  Tensor total = Tensor::scalar(0.0);
  for (std::size_t m = 0; m < record.layers(); ++m) {
    const std::size_t width = record.stored_mean[m].size();
    const Tensor mu(engine::Shape{width}, record.stored_mean[m]);
    Tensor gen_sigma = record.generated_var[m];
    std::vector<double> stored_sigma = record.stored_var[m];
    if (sigma == SigmaMode::kStd) {
      gen_sigma = engine::sqrt(gen_sigma);
      for (double& v : stored_sigma) v = std::sqrt(v);
    }
    const Tensor sig(engine::Shape{width}, std::move(stored_sigma));
    const Tensor mean_term = engine::sum(engine::square(engine::sub(record.generated_mean[m], mu)));
    const Tensor sigma_term = engine::sum(engine::square(engine::sub(gen_sigma, sig)));
    total = engine::add(total, engine::add(mean_term, sigma_term));
  }
  return total;
}

Tensor calibration_loss(const adapt::LogitsPair& lp, double tau) { return adapt::game_value(lp, tau); }

}  // namespace adasg::game
