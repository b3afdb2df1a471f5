// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include "adasg/game/game.hpp"

#include <cmath>

#include "adasg/engine/ops.hpp"
#include "adasg/error.hpp"

namespace adasg::game {

using engine::Tensor;

namespace {

constexpr std::uint64_t kBatchStream = 101;
constexpr std::uint64_t kProbeStream = 102;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string("non-finite ") + what);
}

// Logits that went non-finite mid-game are a numerical abort, not bad input.
adapt::LogitsPair checked_pair(Tensor zp, Tensor zq) {
  for (const Tensor* t : {&zp, &zq}) {
    for (double v : t->values()) require_finite(v, t == &zp ? "full-precision logits" : "quantized logits");
  }
  return {std::move(zp), std::move(zq)};
}

}  // namespace

void HyperParams::validate() const {
  if (!(0.0 <= lambda_l && lambda_l < lambda_u && lambda_u <= 1.0)) {
    throw ConfigError("need 0 <= lambda_l < lambda_u <= 1");
  }
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (alpha_ds < 0.0 || alpha_as < 0.0 || beta < 0.0 || gamma < 0.0) {
    throw ConfigError("loss weights must be non-negative");
  }
  if (lr_g < 0.0 || lr_q < 0.0) throw ConfigError("learning rates must be non-negative");
  if (batch_size < 2 || probe_size < 2) throw ConfigError("batch and probe sizes must be at least 2");
  if (lr_decay_period == 0) throw ConfigError("lr_decay_period must be positive");
}

double HyperParams::lr_q_at_epoch(std::size_t epoch) const {
  return lr_q * std::pow(lr_decay_factor, static_cast<double>(epoch / lr_decay_period));
}

HyperParams ablation_config(const HyperParams& base, const std::set<LossTerm>& disable) {
  HyperParams hp = base;
  for (LossTerm t : disable) {
    switch (t) {
      case LossTerm::kDs: hp.alpha_ds = 0.0; break;
      case LossTerm::kAs: hp.alpha_as = 0.0; break;
      case LossTerm::kBound: hp.beta = 0.0; break;
      case LossTerm::kBns: hp.gamma = 0.0; break;
    }
  }
  return hp;
}

GeneratorBatch draw_batch(engine::Rng& rng, std::size_t batch, const nets::GeneratorSpec& spec) {
  Tensor z = engine::gaussian(rng, {batch, spec.noise_dim});
  std::vector<int> labels(batch);
  for (int& y : labels) y = static_cast<int>(rng.index(spec.classes));
  return {z, nets::one_hot(labels, spec.classes)};
}

double recompose_generator_loss(const HyperParams& hp, double l_ds, double l_as, double l_b, double l_bns) {
  return hp.alpha_ds * l_ds + hp.alpha_as * l_as + hp.beta * l_b + hp.gamma * l_bns;
}

GeneratorLoss generator_loss(const GeneratorBatch& batch, nets::Generator& g, const nets::Mlp& p,
                             const nets::Mlp& q, const HyperParams& hp, nets::GeneratorMode mode) {
  const Tensor x = g.forward(batch.z, batch.labels, mode);
  nets::TeacherOutput teacher = nets::teacher_forward(p, x);
  const adapt::LogitsPair lp = checked_pair(teacher.logits, q.forward(x, engine::BnMode::kEval));

  const Tensor p_ds = adapt::disagreement_distribution(lp);
  const Tensor p_as = adapt::agreement_distribution(lp);
  const adapt::NormalizedEntropy ne = adapt::normalize_entropy(engine::entropy_rows(p_ds), lp.classes());

  const Tensor l_ds = loss_ds(p_ds, batch.labels);
  const Tensor l_as = loss_as(p_as, batch.labels);
  const Tensor l_b = loss_bound(ne.h_norm, hp.lambda_l, hp.lambda_u);
  const Tensor l_bns = loss_bns(teacher.bns, hp.sigma);

  Tensor total = engine::add(engine::scale(l_ds, hp.alpha_ds), engine::scale(l_as, hp.alpha_as));
  total = engine::add(total, engine::scale(l_b, hp.beta));
  total = engine::add(total, engine::scale(l_bns, hp.gamma));

  GeneratorLoss out;
  out.l_g = total;
  out.l_ds = l_ds.item();
  out.l_as = l_as.item();
  out.l_b = l_b.item();
  out.l_bns = l_bns.item();
  out.mean_h_norm = engine::mean(ne.h_norm).item();
  return out;
}

GameState make_game_state(const nets::Mlp& p, nets::Generator g, nets::Mlp q, const HyperParams& hp,
                          std::uint64_t seed) {
  hp.validate();
  if (g.spec().output_dim != p.spec().input_dim) {
    throw ConfigError("generator output dim does not match the classifier input dim");
  }
  if (g.spec().classes != p.spec().output_dim()) throw ConfigError("generator and classifier class counts differ");
  if (!(q.spec() == p.spec())) throw ConfigError("quantized network architecture differs from P");

  nets::Mlp teacher = p.clone();
  teacher.set_requires_grad(false);
  engine::Rng probe_rng(seed, kProbeStream);
  GeneratorBatch probe = draw_batch(probe_rng, hp.probe_size, g.spec());

  GameState state{std::move(teacher), std::move(g), std::move(q), {}, {}, engine::Rng(seed, kBatchStream),
                  std::move(probe), 0, {}};
  state.g_opt.lr = hp.lr_g;
  state.g_opt.beta1 = hp.g_beta1;
  state.q_opt.lr = hp.lr_q;
  state.q_opt.momentum = hp.q_momentum;
  state.q_opt.weight_decay = hp.q_weight_decay;
  return state;
}

GameState clone_state(const GameState& state) {
  return GameState{state.teacher.clone(), state.generator.clone(), state.quantized.clone(), state.g_opt,
                   state.q_opt,           state.rng,               state.probe,             state.iteration,
                   state.log};
}

GeneratorLoss maximization_step(GameState& state, const HyperParams& hp) {
  state.quantized.set_requires_grad(false);
  state.generator.set_requires_grad(true);
  auto params = state.generator.parameters();
  engine::zero_grads(params);

  const GeneratorBatch batch = draw_batch(state.rng, hp.batch_size, state.generator.spec());
  GeneratorLoss loss;
  try {
    loss = generator_loss(batch, state.generator, state.teacher, state.quantized, hp, nets::GeneratorMode::kTrain);
    require_finite(loss.l_g.item(), "generator loss");
  } catch (...) {
    state.quantized.set_requires_grad(true);
    throw;
  }
  engine::backward(loss.l_g);
  if (hp.optimizer == OptimizerMode::kPlainGradient) {
    engine::plain_gradient_step(hp.lr_g, params);
  } else {
    state.g_opt.lr = hp.lr_g;
    engine::adam_step(state.g_opt, params);
  }
  engine::zero_grads(params);
  state.quantized.set_requires_grad(true);
  return loss;
}

double minimization_step(GameState& state, const HyperParams& hp) {
  const GeneratorBatch batch = draw_batch(state.rng, hp.batch_size, state.generator.spec());
  Tensor x;
  Tensor zp;
  {
    engine::NoGradGuard no_grad;
    x = state.generator.forward(batch.z, batch.labels, nets::GeneratorMode::kBatchStats);
    zp = state.teacher.forward(x, engine::BnMode::kEval);
  }
  auto params = state.quantized.parameters();
  engine::zero_grads(params);
  const Tensor loss = calibration_loss(checked_pair(zp, state.quantized.forward(x, engine::BnMode::kEval)), hp.tau);
  require_finite(loss.item(), "calibration loss");
  engine::backward(loss);
  if (hp.optimizer == OptimizerMode::kPlainGradient) {
    engine::plain_gradient_step(state.q_opt.lr, params);
  } else {
    engine::sgd_nesterov_step(state.q_opt, params);
  }
  engine::zero_grads(params);
  return loss.item();
}

double probe_value(GameState& state) {
  engine::NoGradGuard no_grad;
  const Tensor x = state.generator.forward(state.probe.z, state.probe.labels, nets::GeneratorMode::kBatchStats);
  const adapt::LogitsPair lp = checked_pair(state.teacher.forward(x), state.quantized.forward(x));
  return adapt::game_value(lp).item();
}

std::vector<std::vector<double>> probe_gradient(GameState& state) {
  state.generator.set_requires_grad(true);
  state.quantized.set_requires_grad(true);
  auto params = state.generator.parameters();
  for (auto& p : state.quantized.parameters()) params.push_back(p);
  engine::zero_grads(params);
  const Tensor x = state.generator.forward(state.probe.z, state.probe.labels, nets::GeneratorMode::kBatchStats);
  const Tensor r = adapt::game_value(checked_pair(state.teacher.forward(x), state.quantized.forward(x)));
  engine::backward(r);
  std::vector<std::vector<double>> grads;
  grads.reserve(params.size());
  for (const auto& p : params) grads.push_back(p.grad_or_zeros());
  engine::zero_grads(params);
  return grads;
}

adapt::ParamSnapshot snapshot(const std::vector<Tensor>& params) {
  adapt::ParamSnapshot out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.values().begin(), p.values().end());
  return out;
}

void restore(const std::vector<Tensor>& params, const adapt::ParamSnapshot& values) {
  if (params.size() != values.size()) throw ShapeError("restore: snapshot has a different tensor count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor handle = params[i];
    handle.assign(values[i]);
  }
}

IterationLog game_iteration(GameState& state, const HyperParams& hp, std::size_t epoch, std::size_t iter,
                            bool lipschitz, double lipschitz_second_order) {
  IterationLog log;
  log.epoch = epoch;
  log.iter = iter;
  state.q_opt.lr = hp.lr_q_at_epoch(epoch);

  std::vector<std::vector<double>> grads;
  adapt::ParamSnapshot before;
  auto all_params = [&state] {
    auto params = state.generator.parameters();
    for (auto& p : state.quantized.parameters()) params.push_back(p);
    return params;
  };
  if (lipschitz) {
    grads = probe_gradient(state);
    before = snapshot(all_params());
  }

  const double r_before = probe_value(state);
  const GeneratorLoss g = maximization_step(state, hp);
  const double r_mid = probe_value(state);
  log.l_q = minimization_step(state, hp);
  const double r_after = probe_value(state);

  log.l_ds = g.l_ds;
  log.l_as = g.l_as;
  log.l_b = g.l_b;
  log.l_bns = g.l_bns;
  log.l_g = g.l_g.item();
  log.mean_h_norm = g.mean_h_norm;
  log.balance = adapt::make_balance_gap(r_before, r_mid, r_after);

  if (lipschitz) {
    const adapt::ParamSnapshot after = snapshot(all_params());
    std::vector<std::vector<double>> steps(after.size());
    for (std::size_t k = 0; k < after.size(); ++k) {
      steps[k].resize(after[k].size());
      for (std::size_t i = 0; i < after[k].size(); ++i) steps[k][i] = after[k][i] - before[k][i];
    }
    log.lipschitz = adapt::lipschitz_diagnostic(log.balance, grads, steps, lipschitz_second_order);
  }
  ++state.iteration;
  return log;
}

void run_game(GameState& state, const HyperParams& hp, const RunOptions& options) {
  hp.validate();
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    for (std::size_t iter = 0; iter < hp.iters_per_epoch; ++iter) {
      const adapt::ParamSnapshot g_good = snapshot(state.generator.parameters());
      const adapt::ParamSnapshot q_good = snapshot(state.quantized.parameters());
      IterationLog log;
      try {
        log = game_iteration(state, hp, epoch, iter, options.lipschitz, options.lipschitz_second_order);
        require_finite(log.balance.bg, "balance gap");
      } catch (const NumericalError& e) {
        restore(state.generator.parameters(), g_good);
        restore(state.quantized.parameters(), q_good);
        throw NumericalError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", iteration " +
                             std::to_string(iter) + "; players restored to the last good iteration");
      }
      const bool last_of_epoch = iter + 1 == hp.iters_per_epoch;
      if (options.eval_set && last_of_epoch && options.eval_period > 0 &&
          ((epoch + 1) % options.eval_period == 0 || epoch + 1 == hp.epochs)) {
        log.q_acc = nets::accuracy(state.quantized, *options.eval_set);
      }
      state.log.push_back(log);
      if (options.on_iteration) options.on_iteration(state.log.back());
    }
  }
}

}  // namespace adasg::game
