// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "adasg/engine/ops.hpp"
#include "adasg/engine/optim.hpp"
#include "adasg/error.hpp"
#include "adasg/game/game.hpp"
#include "adasg/xp/dataset.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

namespace adasg {
namespace {

using engine::Tensor;
using game::GameState;
using game::HyperParams;
using game::LossTerm;

// A four-class toy task small enough to pretrain in a few milliseconds.
struct Toy {
  xp::DatasetSplit data;
  nets::Mlp p;
  nets::GeneratorSpec g_spec;
};

const Toy& toy() {
  static const Toy t = [] {
    xp::DatasetSpec ds;
    ds.classes = 4;
    ds.input_dim = 6;
    ds.samples_per_class = 60;
    xp::DatasetSplit data = xp::synth_dataset(ds, 3);
    engine::Rng rng(3, 1);
    nets::Mlp p = nets::build_p(nets::NetworkSpec::mlp(6, {12, 12}, 4), 4, rng);
    nets::pretrain_p(p, data.train, data.test, {15, 1e-2, 32}, rng);
    p.set_requires_grad(false);
    nets::GeneratorSpec g;
    g.noise_dim = 5;
    g.classes = 4;
    g.hidden = {10, 10};
    g.output_dim = 6;
    return Toy{std::move(data), std::move(p), g};
  }();
  return t;
}

HyperParams small_hp() {
  HyperParams hp;
  hp.batch_size = 8;
  hp.probe_size = 16;
  hp.epochs = 2;
  hp.iters_per_epoch = 5;
  hp.lr_decay_period = 1;
  return hp;
}

GameState fresh_state(const HyperParams& hp, std::uint64_t seed = 1, int bits = 3) {
  engine::Rng rng(seed, 9);
  return game::make_game_state(toy().p, nets::Generator(toy().g_spec, rng), nets::init_q_from_p(toy().p, {bits, false}),
                               hp, seed);
}

game::RunOptions evaluating(std::size_t period) {
  game::RunOptions opts;
  opts.eval_set = &toy().data.test;
  opts.eval_period = period;
  return opts;
}

std::vector<double> flat(const std::vector<Tensor>& params) {
  std::vector<double> out;
  for (const auto& t : params) out.insert(out.end(), t.values().begin(), t.values().end());
  return out;
}

TEST(Losses, CrossEntropyExamples) {
  const Tensor y = nets::one_hot({0, 2}, 3);
  EXPECT_NEAR(game::loss_ds(y, y).item(), 0.0, 1e-15);
  const Tensor uniform = Tensor::full({2, 3}, 1.0 / 3.0);
  EXPECT_NEAR(game::loss_ds(uniform, y).item(), std::log(3.0), 1e-14);
  EXPECT_NEAR(game::loss_as(uniform, y).item(), std::log(3.0), 1e-14);
  EXPECT_THROW(game::loss_ds(uniform, nets::one_hot({0, 1}, 2)), ShapeError);
}

TEST(Losses, CrossEntropyMatchesScalarOracle) {
  engine::Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor p = engine::softmax(engine::gaussian(rng, {5, 4}), 1);
    std::vector<int> labels(5);
    for (int& l : labels) l = static_cast<int>(rng.index(4));
    const Tensor y = nets::one_hot(labels, 4);
    testing::Matrix pm(5, std::vector<double>(4)), ym(5, std::vector<double>(4));
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t k = 0; k < 4; ++k) {
        pm[i][k] = p.at(i, k);
        ym[i][k] = y.at(i, k);
      }
    }
    ASSERT_LE(testing::rel_err(game::loss_ds(p, y).item(), testing::cross_entropy(pm, ym)), 1e-12);
  }
}

TEST(Losses, BoundHingeExamples) {
  EXPECT_EQ(game::loss_bound(Tensor({3}, {0.3, 0.5, 0.8}), 0.3, 0.8).item(), 0.0);
  EXPECT_NEAR(game::loss_bound(Tensor({1}, {0.1}), 0.3, 0.8).item(), 0.2, 1e-15);
  EXPECT_NEAR(game::loss_bound(Tensor({1}, {0.9}), 0.3, 0.8).item(), 0.1, 1e-15);
  EXPECT_NEAR(game::loss_bound(Tensor({2}, {0.1, 0.9}), 0.3, 0.8).item(), 0.15, 1e-15);
}

nets::BNStatsRecord one_layer_record(std::vector<double> gen_mean, std::vector<double> gen_var,
                                     std::vector<double> mean, std::vector<double> var) {
  nets::BNStatsRecord r;
  const std::size_t d = mean.size();
  r.generated_mean.push_back(Tensor({d}, std::move(gen_mean)));
  r.generated_var.push_back(Tensor({d}, std::move(gen_var)));
  r.stored_mean.push_back(std::move(mean));
  r.stored_var.push_back(std::move(var));
  return r;
}

TEST(Losses, StatisticsExamples) {
  EXPECT_EQ(game::loss_bns(one_layer_record({1, 2}, {3, 4}, {1, 2}, {3, 4})).item(), 0.0);
  const std::size_t d = 7;
  const auto shifted = one_layer_record(std::vector<double>(d, 1.5), std::vector<double>(d, 2.0),
                                        std::vector<double>(d, 0.5), std::vector<double>(d, 2.0));
  EXPECT_DOUBLE_EQ(game::loss_bns(shifted).item(), static_cast<double>(d));
  const auto negative = one_layer_record(std::vector<double>(d, -0.5), std::vector<double>(d, 2.0),
                                         std::vector<double>(d, 0.5), std::vector<double>(d, 2.0));
  EXPECT_DOUBLE_EQ(game::loss_bns(negative).item(), static_cast<double>(d));
  // Standard-deviation comparison: (sqrt 4 - sqrt 1)^2 = 1.
  EXPECT_DOUBLE_EQ(game::loss_bns(one_layer_record({0}, {4}, {0}, {1}), game::SigmaMode::kStd).item(), 1.0);
  EXPECT_DOUBLE_EQ(game::loss_bns(one_layer_record({0}, {4}, {0}, {1})).item(), 9.0);
}

TEST(Losses, CalibrationAtUnitTemperatureIsGameValue) {
  engine::Rng rng(4);
  const adapt::LogitsPair lp{engine::gaussian(rng, {6, 4}), engine::gaussian(rng, {6, 4})};
  EXPECT_EQ(game::calibration_loss(lp, 1.0).item(), adapt::game_value(lp).item());
  // Aligned rows contribute zero when one row disagrees.
  const adapt::LogitsPair mixed{Tensor({2, 2}, {1, 2, 5, 0}), Tensor({2, 2}, {1, 2, 0, 0})};
  EXPECT_NEAR(game::calibration_loss(mixed, 2.0).item(), 0.5, 1e-7);
}

TEST(HyperParams, ValidationAndSchedule) {
  HyperParams hp;
  EXPECT_NO_THROW(hp.validate());
  hp.lambda_l = 0.8;
  EXPECT_THROW(hp.validate(), ConfigError);
  hp = {};
  hp.tau = 0;
  EXPECT_THROW(hp.validate(), ConfigError);
  hp = {};
  hp.gamma = -1;
  EXPECT_THROW(hp.validate(), ConfigError);
  hp = {};
  EXPECT_DOUBLE_EQ(hp.lr_q_at_epoch(49), 1e-4);
  EXPECT_DOUBLE_EQ(hp.lr_q_at_epoch(50), 1e-4 * 0.1);
}

TEST(Ablation, ZeroesOnlyTheNamedWeights) {
  const HyperParams base;
  const HyperParams same = game::ablation_config(base, {});
  EXPECT_EQ(same.alpha_ds, base.alpha_ds);
  EXPECT_EQ(same.gamma, base.gamma);
  const HyperParams stats_only = game::ablation_config(base, {LossTerm::kDs, LossTerm::kAs, LossTerm::kBound});
  EXPECT_EQ(stats_only.alpha_ds, 0.0);
  EXPECT_EQ(stats_only.alpha_as, 0.0);
  EXPECT_EQ(stats_only.beta, 0.0);
  EXPECT_EQ(stats_only.gamma, base.gamma);
  const HyperParams no_as = game::ablation_config(base, {LossTerm::kAs});
  EXPECT_EQ(no_as.alpha_ds, base.alpha_ds);
  EXPECT_EQ(no_as.alpha_as, 0.0);
}

TEST(Ablation, AllDisabledLeavesGeneratorUntouched) {
  HyperParams hp = game::ablation_config(small_hp(), {LossTerm::kDs, LossTerm::kAs, LossTerm::kBound, LossTerm::kBns});
  GameState s = fresh_state(hp);
  const auto before = flat(s.generator.parameters());
  const game::GeneratorLoss loss = game::maximization_step(s, hp);
  EXPECT_EQ(loss.l_g.item(), 0.0);
  EXPECT_EQ(flat(s.generator.parameters()), before);
}

TEST(GeneratorLoss, ZeroWeightsGiveZeroGradient) {
  HyperParams hp = small_hp();
  hp.alpha_ds = hp.alpha_as = hp.beta = hp.gamma = 0.0;
  GameState s = fresh_state(hp);
  s.generator.set_requires_grad(true);
  const auto batch = game::draw_batch(s.rng, 8, s.generator.spec());
  const auto loss = game::generator_loss(batch, s.generator, s.teacher, s.quantized, hp, nets::GeneratorMode::kBatchStats);
  EXPECT_EQ(loss.l_g.item(), 0.0);
  engine::backward(loss.l_g);
  for (const auto& t : s.generator.parameters()) {
    for (double g : t.grad_or_zeros()) EXPECT_EQ(g, 0.0);
  }
}

TEST(GeneratorLoss, RecomposesFromComponents) {
  HyperParams hp = small_hp();
  hp.alpha_ds = 0.3;
  hp.alpha_as = 0.05;
  GameState s = fresh_state(hp);
  game::run_game(s, hp);
  ASSERT_EQ(s.log.size(), 10u);
  for (const auto& log : s.log) {
    EXPECT_NEAR(log.l_g, game::recompose_generator_loss(hp, log.l_ds, log.l_as, log.l_b, log.l_bns),
                1e-12 * (1 + std::abs(log.l_g)));
    EXPECT_LE(std::abs(log.balance.bg - (log.balance.delta_g - log.balance.delta_q)), 1e-9);
  }
}

TEST(Steps, PlayersAreIsolated) {
  HyperParams hp = small_hp();
  GameState s = fresh_state(hp);
  for (int i = 0; i < 3; ++i) {
    const auto q_before = flat(s.quantized.parameters());
    game::maximization_step(s, hp);
    EXPECT_EQ(flat(s.quantized.parameters()), q_before);
    const auto g_before = flat(s.generator.parameters());
    const auto g_stats = s.generator.body().norms()[0]->running_mean;
    game::minimization_step(s, hp);
    EXPECT_EQ(flat(s.generator.parameters()), g_before);
    EXPECT_EQ(s.generator.body().norms()[0]->running_mean, g_stats);
  }
  EXPECT_FALSE(s.teacher.parameters()[0].requires_grad());
}

TEST(Steps, ZeroLearningRatesChangeNothing) {
  HyperParams hp = small_hp();
  hp.lr_g = 0.0;
  hp.lr_q = 0.0;
  hp.q_weight_decay = 0.0;
  GameState s = fresh_state(hp);
  const auto g0 = flat(s.generator.parameters());
  const auto q0 = flat(s.quantized.parameters());
  const game::IterationLog log = game::game_iteration(s, hp, 0, 0);
  EXPECT_EQ(flat(s.generator.parameters()), g0);
  EXPECT_EQ(flat(s.quantized.parameters()), q0);
  EXPECT_EQ(log.balance.bg, 0.0);
  EXPECT_EQ(log.balance.delta_g, 0.0);
  EXPECT_EQ(log.balance.delta_q, 0.0);
}

TEST(Steps, LoggedCalibrationLossIsGameValueOnItsBatch) {
  HyperParams hp = small_hp();
  GameState s = fresh_state(hp);
  game::maximization_step(s, hp);
  engine::Rng peek = s.rng;
  const auto batch = game::draw_batch(peek, hp.batch_size, s.generator.spec());
  double expected = 0.0;
  {
    engine::NoGradGuard no_grad;
    const Tensor x = s.generator.forward(batch.z, batch.labels, nets::GeneratorMode::kBatchStats);
    expected = adapt::game_value({s.teacher.forward(x), s.quantized.forward(x)}).item();
  }
  EXPECT_NEAR(game::minimization_step(s, hp), expected, 1e-12);
}

TEST(Steps, PlainGeneratorStepDescends) {
  HyperParams hp = small_hp();
  hp.optimizer = game::OptimizerMode::kPlainGradient;
  hp.lr_g = 1e-4;
  GameState s = fresh_state(hp);
  engine::Rng peek = s.rng;
  const auto batch = game::draw_batch(peek, hp.batch_size, s.generator.spec());
  // Quantizer rounding is held fixed so the objective is smooth in G.
  engine::ConstantReplayScope scope;
  const double before =
      game::generator_loss(batch, s.generator, s.teacher, s.quantized, hp, nets::GeneratorMode::kBatchStats).l_g.item();
  scope.replay();
  game::maximization_step(s, hp);
  scope.rewind();
  const double after =
      game::generator_loss(batch, s.generator, s.teacher, s.quantized, hp, nets::GeneratorMode::kBatchStats).l_g.item();
  EXPECT_LT(after, before);
}

TEST(Steps, PlainQuantizedStepDescends) {
  HyperParams hp = small_hp();
  hp.optimizer = game::OptimizerMode::kPlainGradient;
  hp.lr_q = 1e-3;
  GameState s = fresh_state(hp);
  engine::Rng peek = s.rng;
  const auto batch = game::draw_batch(peek, hp.batch_size, s.generator.spec());
  Tensor x, zp;
  {
    engine::NoGradGuard no_grad;
    x = s.generator.forward(batch.z, batch.labels, nets::GeneratorMode::kBatchStats);
    zp = s.teacher.forward(x);
  }
  engine::ConstantReplayScope scope;
  const double before = game::calibration_loss({zp, s.quantized.forward(x)}, hp.tau).item();
  scope.replay();
  game::minimization_step(s, hp);
  scope.rewind();
  const double after = game::calibration_loss({zp, s.quantized.forward(x)}, hp.tau).item();
  EXPECT_LT(after, before);
}

TEST(Steps, TinyAscentStepRaisesTheProbeValue) {
  // A plain step of 1e-6 along the probe gradient of R in G's parameters:
  // the change in R must match the first-order prediction lr * |grad|^2.
  // Rounding and the batch minimum are held at their recorded values, since
  // a code flip is a jump that no step size makes first-order.
  const double lr = 1e-6;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    GameState s = fresh_state(small_hp(), seed);
    engine::ConstantReplayScope scope;
    const auto grads = game::probe_gradient(s);
    scope.replay();
    const auto g_params = s.generator.parameters();
    double predicted = 0.0;
    for (std::size_t k = 0; k < g_params.size(); ++k) {
      for (double v : grads[k]) predicted += lr * v * v;
    }
    const double r_before = game::probe_value(s);
    scope.rewind();
    for (std::size_t k = 0; k < g_params.size(); ++k) {
      Tensor handle = g_params[k];
      auto values = handle.values();
      for (std::size_t i = 0; i < values.size(); ++i) values[i] += lr * grads[k][i];
    }
    const double delta_g = game::probe_value(s) - r_before;
    EXPECT_GE(delta_g, -1e-8) << seed;
    EXPECT_NEAR(delta_g, predicted, 0.05 * predicted + 1e-10) << seed;
  }
}

TEST(Steps, WeightDecayAloneShrinksQuantizedWeights) {
  GameState s = fresh_state(small_hp());
  auto params = s.quantized.parameters();
  engine::zero_grads(params);
  double norm_before = 0.0;
  for (double v : flat(params)) norm_before += v * v;
  s.q_opt.lr = 0.1;
  s.q_opt.weight_decay = 1e-2;
  engine::sgd_nesterov_step(s.q_opt, params);
  double norm_after = 0.0;
  for (double v : flat(params)) norm_after += v * v;
  EXPECT_LT(norm_after, norm_before);
}

class LossGradient : public ::testing::TestWithParam<int> {};

TEST_P(LossGradient, MatchesFiniteDifferences) {
  const int seed = GetParam();
  HyperParams hp = small_hp();
  // Tight bounds keep the hinge active.
  hp.lambda_l = 0.6;
  hp.lambda_u = 0.65;
  GameState s = fresh_state(hp, static_cast<std::uint64_t>(seed));
  s.generator.set_requires_grad(true);
  engine::Rng rng(static_cast<std::uint64_t>(seed), 77);
  const auto batch = game::draw_batch(rng, 8, s.generator.spec());
  const auto g_params = s.generator.parameters();

  auto forward = [&] {
    const Tensor x = s.generator.forward(batch.z, batch.labels, nets::GeneratorMode::kBatchStats);
    nets::TeacherOutput t = nets::teacher_forward(s.teacher, x);
    return std::pair{t, adapt::LogitsPair{t.logits, s.quantized.forward(x)}};
  };
  const std::vector<std::pair<const char*, std::function<Tensor()>>> losses{
      {"ds", [&] { return game::loss_ds(adapt::disagreement_distribution(forward().second), batch.labels); }},
      {"as", [&] { return game::loss_as(adapt::agreement_distribution(forward().second), batch.labels); }},
      {"b",
       [&] {
         const Tensor p_ds = adapt::disagreement_distribution(forward().second);
         return game::loss_bound(adapt::normalize_entropy(engine::entropy_rows(p_ds), 4).h_norm, hp.lambda_l,
                                 hp.lambda_u);
       }},
      {"bns", [&] { return game::loss_bns(forward().first.bns); }},
      {"g",
       [&] {
         return game::generator_loss(batch, s.generator, s.teacher, s.quantized, hp, nets::GeneratorMode::kBatchStats)
             .l_g;
       }},
  };
  s.quantized.set_requires_grad(false);
  for (const auto& [name, fn] : losses) {
    const auto check = testing::check_gradient(fn, g_params, rng);
    EXPECT_EQ(check.checked, 5u) << name;
    EXPECT_LT(check.max_rel_err, 1e-4) << name;
  }

  s.quantized.set_requires_grad(true);
  s.generator.set_requires_grad(false);
  Tensor x, zp;
  {
    engine::NoGradGuard no_grad;
    x = s.generator.forward(batch.z, batch.labels, nets::GeneratorMode::kBatchStats);
    zp = s.teacher.forward(x);
  }
  const auto q_check = testing::check_gradient(
      [&] { return game::calibration_loss({zp, s.quantized.forward(x)}, 1.5); }, s.quantized.parameters(), rng);
  EXPECT_EQ(q_check.checked, 5u);
  EXPECT_LT(q_check.max_rel_err, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Seeds, LossGradient, ::testing::Values(1, 2, 3));

TEST(RunGame, ZeroEpochsKeepsInitialAccuracy) {
  HyperParams hp = small_hp();
  hp.epochs = 0;
  GameState s = fresh_state(hp);
  game::run_game(s, hp, evaluating(10));
  EXPECT_TRUE(s.log.empty());
  const nets::Mlp q0 = nets::init_q_from_p(toy().p, {3, false});
  EXPECT_EQ(nets::accuracy(s.quantized, toy().data.test), nets::accuracy(q0, toy().data.test));
}

TEST(RunGame, SameSeedSameLog) {
  const HyperParams hp = small_hp();
  auto run = [&] {
    GameState s = fresh_state(hp, 5);
    game::run_game(s, hp, evaluating(1));
    std::vector<double> out;
    for (const auto& l : s.log) {
      out.insert(out.end(), {l.l_g, l.l_q, l.balance.bg, l.mean_h_norm, l.q_acc.value_or(-1.0)});
    }
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(RunGame, EvaluatesOnSchedule) {
  HyperParams hp = small_hp();
  hp.epochs = 3;
  GameState s = fresh_state(hp);
  game::run_game(s, hp, evaluating(2));
  ASSERT_EQ(s.log.size(), 15u);
  for (std::size_t i = 0; i < s.log.size(); ++i) {
    const bool expect = i == 9 || i == 14;
    EXPECT_EQ(s.log[i].q_acc.has_value(), expect) << i;
  }
}

TEST(RunGame, LipschitzDiagnosticIsNonNegative) {
  HyperParams hp = small_hp();
  GameState s = fresh_state(hp);
  game::RunOptions opts;
  opts.lipschitz = true;
  game::run_game(s, hp, opts);
  for (const auto& l : s.log) {
    ASSERT_TRUE(l.lipschitz.has_value());
    EXPECT_GE(l.lipschitz->grad_norm, 0.0);
    EXPECT_GE(l.lipschitz->param_step_norm, 0.0);
    EXPECT_DOUBLE_EQ(l.lipschitz->observed_bg, std::abs(l.balance.bg));
  }
}

TEST(RunGame, NumericalAbortRestoresPlayers) {
  HyperParams hp = small_hp();
  hp.optimizer = game::OptimizerMode::kPlainGradient;
  hp.lr_g = std::numeric_limits<double>::infinity();
  GameState s = fresh_state(hp);
  const auto g0 = flat(s.generator.parameters());
  const auto q0 = flat(s.quantized.parameters());
  EXPECT_THROW(game::run_game(s, hp), NumericalError);
  EXPECT_TRUE(s.log.empty());
  EXPECT_EQ(flat(s.generator.parameters()), g0);
  EXPECT_EQ(flat(s.quantized.parameters()), q0);
}

TEST(GameState, RejectsMismatchedPlayers) {
  engine::Rng rng(1);
  nets::GeneratorSpec wrong = toy().g_spec;
  wrong.output_dim = 5;
  EXPECT_THROW(game::make_game_state(toy().p, nets::Generator(wrong, rng), nets::init_q_from_p(toy().p, {3, false}),
                                     small_hp(), 1),
               ConfigError);
}

TEST(GameState, CloneIsIndependent) {
  const HyperParams hp = small_hp();
  GameState a = fresh_state(hp);
  GameState b = game::clone_state(a);
  const auto g0 = flat(b.generator.parameters());
  game::game_iteration(a, hp, 0, 0);
  EXPECT_EQ(flat(b.generator.parameters()), g0);
  const auto la = game::game_iteration(b, hp, 0, 0);
  GameState c = fresh_state(hp);
  const auto lc = game::game_iteration(c, hp, 0, 0);
  EXPECT_EQ(la.balance.bg, lc.balance.bg);
}

}  // namespace
}  // namespace adasg
