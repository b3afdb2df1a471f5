// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "adasg/engine/tensor.hpp"

namespace adasg::adapt {

/// Guards the entropy normaliser when the batch minimum equals ln C.
inline constexpr double kNormalizerEps = 1e-8;

/// Logits of the full-precision (zp) and quantized (zq) networks on the same
/// [batch, C] samples.
struct LogitsPair {
  engine::Tensor zp;
  engine::Tensor zq;

  /// Throws ShapeError for unequal or non-matrix shapes, DomainError for
  /// non-finite entries.
  void validate() const;
  std::size_t classes() const { return zp.cols(); }
  std::size_t batch() const { return zp.rows(); }
};

/// softmax((zp - zq) / temperature) per row.
engine::Tensor disagreement_distribution(const LogitsPair& lp, double temperature = 1.0);

/// softmax(zp + zq) per row.
engine::Tensor agreement_distribution(const LogitsPair& lp);

/// Natural-log entropy per row; rejects rows more than 1e-9 off the simplex.
engine::Tensor info_entropy(const engine::Tensor& p);

struct NormalizedEntropy {
  engine::Tensor h_norm;  // H' per row, differentiable
  double batch_min = 0.0;
  double max_const = 0.0;  // ln C
};

/// H' = (h - min_batch) / (ln C - min_batch + eps). min_batch and ln C are
/// stop-gradient constants.
NormalizedEntropy normalize_entropy(const engine::Tensor& h_info, std::size_t classes);

/// H_C = p_ds / ||p_ds||_2 * H per row, with H = 1 - H' given per row.
engine::Tensor adaptability_vector(const engine::Tensor& p_ds, const engine::Tensor& h);

/// Batch mean of 1 - H'(p_ds^tau): the estimate of the game value R. With
/// temperature != 1 this is the calibration objective.
engine::Tensor game_value(const LogitsPair& lp, double temperature = 1.0);

struct AdaptabilityReport {
  std::vector<double> p_ds;   // batch x C, row-major
  std::vector<double> p_as;   // batch x C
  std::vector<double> h_info; // batch
  std::vector<double> h_norm; // batch, H'
  std::vector<double> h;      // batch, H = 1 - H'
  std::vector<double> h_c;    // batch x C
  double batch_min = 0.0;
  double max_const = 0.0;
  std::size_t batch = 0;
  std::size_t classes = 0;
};

/// Evaluates the full measurement stack (no graph is recorded).
AdaptabilityReport measure_adaptability(const LogitsPair& lp);

/// R at three points of one iteration, evaluated on a fixed probe batch.
struct BalanceGapRecord {
  double r_before = 0.0;  // R(g1, q1)
  double r_mid = 0.0;     // R(g2, q1)
  double r_after = 0.0;   // R(g2, q2)
  double bg = 0.0;        // r_after - r_before
  double delta_g = 0.0;   // r_mid - r_before
  double delta_q = 0.0;   // r_mid - r_after
};

BalanceGapRecord make_balance_gap(double r_before, double r_mid, double r_after);

/// Flattened parameter values of one player.
using ParamSnapshot = std::vector<std::vector<double>>;

/// Game value as a function of (generator, quantized-network) parameters on a
/// fixed probe batch.
using ProbeValueFn = std::function<double(const ParamSnapshot&, const ParamSnapshot&)>;

/// Evaluates R at (g1, q1), (g2, q1), (g2, q2). Throws ShapeError when the
/// snapshots of one player disagree in layout.
BalanceGapRecord balance_gap(const ProbeValueFn& value, const ParamSnapshot& g1,
                             const ParamSnapshot& q1, const ParamSnapshot& g2,
                             const ParamSnapshot& q2);

struct LipschitzDiagnostic {
  double grad_norm = 0.0;        // ||[grad_g R; grad_q R]||
  double param_step_norm = 0.0;  // ||theta2 - theta1||
  double bound_product = 0.0;    // grad_norm * param_step_norm
  double observed_bg = 0.0;      // |BG|
  /// |BG| exceeded bound_product + second_order_coeff * step^2.
  bool violation = false;
};

/// `grads` holds the gradient of R at theta1 for every parameter of both
/// players and `steps` the matching theta2 - theta1, in the same order.
LipschitzDiagnostic lipschitz_diagnostic(const BalanceGapRecord& record,
                                         std::span<const std::vector<double>> grads,
                                         std::span<const std::vector<double>> steps,
                                         double second_order_coeff);

/// Pairwise l1 distances between the rows of a [batch, C] distribution,
/// returned row-major [batch x batch]. Needs batch >= 2.
std::vector<double> similarity_matrix(const engine::Tensor& p_ds);

}  // namespace adasg::adapt
