// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <vector>

#include "adasg/adapt/adaptability.hpp"
#include "adasg/engine/optim.hpp"
#include "adasg/engine/rng.hpp"
#include "adasg/game/losses.hpp"
#include "adasg/nets/generator.hpp"
#include "adasg/nets/mlp.hpp"
#include "adasg/nets/training.hpp"

namespace adasg::game {

enum class OptimizerMode {
  /// Adam for G, SGD + Nesterov for Q.
  kAdamNesterov,
  /// p -= lr * grad for both players (first-order checks).
  kPlainGradient,
};

struct HyperParams {
  double alpha_ds = 0.1;
  double alpha_as = 0.1;
  double beta = 1.0;
  double gamma = 1.0;
  double lambda_l = 0.3;
  double lambda_u = 0.8;
  double tau = 1.0;

  double lr_g = 1e-3;
  double g_beta1 = 0.9;
  double lr_q = 1e-4;
  double q_momentum = 0.9;
  double q_weight_decay = 1e-4;
  /// lr_q is multiplied by lr_decay_factor every lr_decay_period epochs.
  double lr_decay_factor = 0.1;
  std::size_t lr_decay_period = 50;

  std::size_t batch_size = 16;
  std::size_t epochs = 100;
  std::size_t iters_per_epoch = 50;
  std::size_t probe_size = 64;

  OptimizerMode optimizer = OptimizerMode::kAdamNesterov;
  SigmaMode sigma = SigmaMode::kVariance;

  void validate() const;
  double lr_q_at_epoch(std::size_t epoch) const;
};

/// The four maximization losses that can be switched off for ablations.
enum class LossTerm { kDs, kAs, kBound, kBns };

/// Zeroes the weight of every term in `disable` (L_ds and L_as independently).
HyperParams ablation_config(const HyperParams& base, const std::set<LossTerm>& disable);

/// Noise and one-hot labels for one generator batch.
struct GeneratorBatch {
  engine::Tensor z;
  engine::Tensor labels;
};

GeneratorBatch draw_batch(engine::Rng& rng, std::size_t batch, const nets::GeneratorSpec& spec);

struct GeneratorLoss {
  engine::Tensor l_g;
  double l_ds = 0.0;
  double l_as = 0.0;
  double l_b = 0.0;
  double l_bns = 0.0;
  double mean_h_norm = 0.0;
};

/// The maximization objective on one batch.
/// l_g = alpha_ds * l_ds + alpha_as * l_as + beta * l_b + gamma * l_bns.
/// The gradient reaches whichever networks have requires_grad set.
GeneratorLoss generator_loss(const GeneratorBatch& batch, nets::Generator& g, const nets::Mlp& p,
                             const nets::Mlp& q, const HyperParams& hp, nets::GeneratorMode mode);

/// Recombines logged components in the same order as generator_loss().
double recompose_generator_loss(const HyperParams& hp, double l_ds, double l_as, double l_b, double l_bns);

struct IterationLog {
  std::size_t epoch = 0;
  std::size_t iter = 0;
  double l_ds = 0.0;
  double l_as = 0.0;
  double l_b = 0.0;
  double l_bns = 0.0;
  double l_g = 0.0;
  double l_q = 0.0;
  adapt::BalanceGapRecord balance;
  double mean_h_norm = 0.0;
  std::optional<double> q_acc;
  std::optional<adapt::LipschitzDiagnostic> lipschitz;
};

/// Everything the two players own. P is held as a frozen copy.
struct GameState {
  nets::Mlp teacher;
  nets::Generator generator;
  nets::Mlp quantized;
  engine::AdamState g_opt;
  engine::SgdNesterovState q_opt;
  engine::Rng rng;
  GeneratorBatch probe;
  std::int64_t iteration = 0;
  std::vector<IterationLog> log;
};

/// Builds the state; the probe batch and the batch stream derive from `seed`.
GameState make_game_state(const nets::Mlp& p, nets::Generator g, nets::Mlp q, const HyperParams& hp,
                          std::uint64_t seed);

/// Deep copy: networks, optimizer buffers and the batch stream are all
/// independent of the source afterwards.
GameState clone_state(const GameState& state);

/// One optimizer step of G against generator_loss on a fresh batch; Q is
/// untouched.
GeneratorLoss maximization_step(GameState& state, const HyperParams& hp);

/// One optimizer step of Q against calibration_loss on a fresh batch from
/// the current G; G is untouched. Returns the loss value.
double minimization_step(GameState& state, const HyperParams& hp);

/// R on the fixed probe batch at the current parameters (G uses batch stats).
double probe_value(GameState& state);

/// Gradient of the probe R with respect to every G then Q parameter.
std::vector<std::vector<double>> probe_gradient(GameState& state);

adapt::ParamSnapshot snapshot(const std::vector<engine::Tensor>& params);
void restore(const std::vector<engine::Tensor>& params, const adapt::ParamSnapshot& values);

struct RunOptions {
  const nets::Dataset* eval_set = nullptr;
  std::size_t eval_period = 10;
  bool lipschitz = false;
  double lipschitz_second_order = 10.0;
  std::function<void(const IterationLog&)> on_iteration;
};

/// One maximization step then one minimization step, with the balance gap
/// measured on the probe batch.
IterationLog game_iteration(GameState& state, const HyperParams& hp, std::size_t epoch, std::size_t iter,
                            bool lipschitz = false, double lipschitz_second_order = 10.0);

/// The full alternating game. On a non-finite loss the players are restored
/// to the last completed iteration and NumericalError is rethrown.
void run_game(GameState& state, const HyperParams& hp, const RunOptions& options = {});

}  // namespace adasg::game
