// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include "adasg/adapt/adaptability.hpp"

#include <algorithm>
#include <cmath>

#include "adasg/engine/ops.hpp"
#include "adasg/error.hpp"

namespace adasg::adapt {

using engine::Tensor;

void LogitsPair::validate() const {
  if (zp.rank() != 2 || zp.shape() != zq.shape()) {
    throw ShapeError("logits pair needs equal [batch, C] shapes, got " + engine::to_string(zp.shape()) +
                     " and " + engine::to_string(zq.shape()));
  }
  const auto finite = [](const Tensor& t) {
    return std::all_of(t.values().begin(), t.values().end(), [](double v) { return std::isfinite(v); });
  };
  if (!finite(zp) || !finite(zq)) throw DomainError("logits pair contains non-finite entries");
}

Tensor disagreement_distribution(const LogitsPair& lp, double temperature) {
  lp.validate();
  return engine::softmax(engine::sub(lp.zp, lp.zq), 1, temperature);
}

Tensor agreement_distribution(const LogitsPair& lp) {
  lp.validate();
  return engine::softmax(engine::add(lp.zp, lp.zq), 1);
}

Tensor info_entropy(const Tensor& p) {
  if (p.rank() != 2) throw ShapeError("info_entropy expects [batch, C], got " + engine::to_string(p.shape()));
  constexpr double kTol = 1e-9;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) {
      const double v = p.at(i, j);
      if (v < -kTol || !std::isfinite(v)) throw DomainError("info_entropy: row " + std::to_string(i) + " has an invalid entry");
      total += v;
    }
    if (std::abs(total - 1.0) > kTol) {
      throw DomainError("info_entropy: row " + std::to_string(i) + " is off the simplex");
    }
  }
  return engine::entropy_rows(p);
}

NormalizedEntropy normalize_entropy(const Tensor& h_info, std::size_t classes) {
  if (h_info.numel() == 0) throw ShapeError("normalize_entropy: empty batch");
  const auto hv = h_info.values();
  const double observed_min = *std::min_element(hv.begin(), hv.end());
  // Replayed under a ConstantReplayScope, so read the value back from the constant.
  const Tensor min_const = engine::stop_gradient(Tensor::scalar(observed_min));
  const double batch_min = min_const.item();
  const double max_const = std::log(static_cast<double>(classes));
  const double denom = max_const - batch_min + kNormalizerEps;
  Tensor h_norm = engine::scale(engine::add_scalar(h_info, -batch_min), 1.0 / denom);
  return {h_norm, batch_min, max_const};
}

Tensor adaptability_vector(const Tensor& p_ds, const Tensor& h) {
  if (p_ds.rank() != 2 || h.numel() != p_ds.rows()) {
    throw ShapeError("adaptability_vector: p_ds " + engine::to_string(p_ds.shape()) + " vs H " +
                     engine::to_string(h.shape()));
  }
  const std::size_t n = p_ds.rows();
  const std::size_t c = p_ds.cols();
  std::vector<double> out(n * c);
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < c; ++j) norm += p_ds.at(i, j) * p_ds.at(i, j);
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = p_ds.at(i, j) / norm * h.at(i);
  }
  return Tensor({n, c}, std::move(out));
}

Tensor game_value(const LogitsPair& lp, double temperature) {
  const Tensor p_ds = disagreement_distribution(lp, temperature);
  const NormalizedEntropy ne = normalize_entropy(engine::entropy_rows(p_ds), lp.classes());
  return engine::add_scalar(engine::neg(engine::mean(ne.h_norm)), 1.0);
}

AdaptabilityReport measure_adaptability(const LogitsPair& lp) {
  engine::NoGradGuard no_grad;
  const Tensor p_ds = disagreement_distribution(lp);
  const Tensor p_as = agreement_distribution(lp);
  const Tensor h_info = info_entropy(p_ds);
  const NormalizedEntropy ne = normalize_entropy(h_info, lp.classes());
  const Tensor h = engine::add_scalar(engine::neg(ne.h_norm), 1.0);
  const Tensor h_c = adaptability_vector(p_ds, h);

  AdaptabilityReport r;
  r.batch = lp.batch();
  r.classes = lp.classes();
  r.p_ds.assign(p_ds.values().begin(), p_ds.values().end());
  r.p_as.assign(p_as.values().begin(), p_as.values().end());
  r.h_info.assign(h_info.values().begin(), h_info.values().end());
  r.h_norm.assign(ne.h_norm.values().begin(), ne.h_norm.values().end());
  r.h.assign(h.values().begin(), h.values().end());
  r.h_c.assign(h_c.values().begin(), h_c.values().end());
  r.batch_min = ne.batch_min;
  r.max_const = ne.max_const;
  return r;
}

BalanceGapRecord make_balance_gap(double r_before, double r_mid, double r_after) {
  BalanceGapRecord rec;
  rec.r_before = r_before;
  rec.r_mid = r_mid;
  rec.r_after = r_after;
  rec.bg = r_after - r_before;
  rec.delta_g = r_mid - r_before;
  rec.delta_q = r_mid - r_after;
  return rec;
}

namespace {

void check_layout(const ParamSnapshot& a, const ParamSnapshot& b, const char* player) {
  bool ok = a.size() == b.size();
  for (std::size_t i = 0; ok && i < a.size(); ++i) ok = a[i].size() == b[i].size();
  if (!ok) throw ShapeError(std::string("balance_gap: ") + player + " snapshots differ in layout");
}

}  // namespace

BalanceGapRecord balance_gap(const ProbeValueFn& value, const ParamSnapshot& g1, const ParamSnapshot& q1,
                             const ParamSnapshot& g2, const ParamSnapshot& q2) {
  check_layout(g1, g2, "generator");
  check_layout(q1, q2, "quantized-network");
  return make_balance_gap(value(g1, q1), value(g2, q1), value(g2, q2));
}

LipschitzDiagnostic lipschitz_diagnostic(const BalanceGapRecord& record,
                                         std::span<const std::vector<double>> grads,
                                         std::span<const std::vector<double>> steps,
                                         double second_order_coeff) {
  if (grads.size() != steps.size()) throw ShapeError("lipschitz_diagnostic: grads/steps count mismatch");
  double g2 = 0.0;
  double s2 = 0.0;
  for (std::size_t k = 0; k < grads.size(); ++k) {
    if (grads[k].size() != steps[k].size()) throw ShapeError("lipschitz_diagnostic: tensor size mismatch");
    for (double v : grads[k]) g2 += v * v;
    for (double v : steps[k]) s2 += v * v;
  }
  LipschitzDiagnostic d;
  d.grad_norm = std::sqrt(g2);
  d.param_step_norm = std::sqrt(s2);
  d.bound_product = d.grad_norm * d.param_step_norm;
  d.observed_bg = std::abs(record.bg);
  d.violation = d.observed_bg > d.bound_product + second_order_coeff * s2;
  return d;
}

std::vector<double> similarity_matrix(const Tensor& p_ds) {
  if (p_ds.rank() != 2 || p_ds.rows() < 2) {
    throw ShapeError("similarity_matrix needs a [batch >= 2, C] input, got " + engine::to_string(p_ds.shape()));
  }
  const std::size_t n = p_ds.rows();
  const std::size_t c = p_ds.cols();
  std::vector<double> s(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < c; ++k) d += std::abs(p_ds.at(i, k) - p_ds.at(j, k));
      s[i * n + j] = d;
      s[j * n + i] = d;
    }
  }
  return s;
}

}  // namespace adasg::adapt
