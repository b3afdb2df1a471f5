// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "adasg/adapt/adaptability.hpp"
#include "adasg/engine/tensor.hpp"
#include "adasg/nets/training.hpp"

namespace adasg::game {

/// Probabilities are floored here before the log in the cross-entropy losses.
inline constexpr double kProbabilityFloor = 1e-12;

/// How the sigma term of the BNS loss compares statistics.
enum class SigmaMode { kVariance, kStd };

/// Mean over the batch of -sum_c y(c) ln p(c); `labels` one-hot.
engine::Tensor cross_entropy_loss(const engine::Tensor& probs, const engine::Tensor& labels);

/// Disagreement loss: cross-entropy between p_ds and the generation label.
engine::Tensor loss_ds(const engine::Tensor& p_ds, const engine::Tensor& labels);

/// Agreement loss: cross-entropy between p_as and the generation label.
engine::Tensor loss_as(const engine::Tensor& p_as, const engine::Tensor& labels);

/// Batch mean of max(lambda_l - H', 0) + max(H' - lambda_u, 0).
engine::Tensor loss_bound(const engine::Tensor& h_norm, double lambda_l, double lambda_u);

/// sum over BN layers of ||mu_g - mu||^2 + ||sigma_g - sigma||^2.
engine::Tensor loss_bns(const nets::BNStatsRecord& record, SigmaMode sigma = SigmaMode::kVariance);

/// Batch mean of 1 - H'(softmax((zp - zq) / tau)).
engine::Tensor calibration_loss(const adapt::LogitsPair& lp, double tau);

}  // namespace adasg::game
