// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "adasg/game/game.hpp"
#include "adasg/xp/config.hpp"
#include "adasg/xp/dataset.hpp"

namespace adasg::xp {

inline constexpr const char* kMetricsHeader =
    "epoch,iter,l_ds,l_as,l_b,l_bns,l_g,l_q,bg,delta_g,delta_q,mean_h_norm,q_acc";

struct RunSummary {
  double p_acc = 0.0;
  double q_init_acc = 0.0;
  double q_final_acc = 0.0;
  /// Mean |BG| over the first and last quarter of the logged iterations.
  double bg_first_quartile = 0.0;
  double bg_last_quartile = 0.0;
  /// Median L_b over the same quarters.
  double l_b_first_quartile = 0.0;
  double l_b_last_quartile = 0.0;
  std::size_t iterations = 0;
  /// "ok" or "numerical_abort".
  std::string status = "ok";
  std::string error;
};

struct ExperimentResult {
  RunSummary summary;
  std::vector<game::IterationLog> log;
};

/// Dataset plus pretrained P for a config; deterministic in the config.
struct PreparedTask {
  DatasetSplit data;
  nets::Mlp p;
  double p_acc = 0.0;
};

PreparedTask prepare_task(const ExperimentConfig& cfg);

/// Game state for a prepared task: Q initialised from P, a fresh generator.
game::GameState initial_game_state(const ExperimentConfig& cfg, const PreparedTask& task);

/// pretrain -> quantize -> game. With a non-empty out_dir, writes config.ini,
/// metrics.csv, similarity.csv, p.ckpt, q_init.ckpt, q.ckpt, g.ckpt and
/// summary.json there. A numerical abort is reported in the summary with
/// outputs for the completed iterations; it is not rethrown.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
/// Same, reusing an already prepared task (sweeps share the pretrained P).
ExperimentResult run_experiment(const ExperimentConfig& cfg, const PreparedTask& task);

RunSummary summarize(const std::vector<game::IterationLog>& log, double p_acc, double q_init_acc,
                     double q_final_acc);

std::string metrics_csv(const std::vector<game::IterationLog>& log);
void emit_metrics(const game::GameState& state, const std::filesystem::path& path);
void emit_metrics(const std::vector<game::IterationLog>& log, const std::filesystem::path& path);
/// Row-major n x n grid of l1 distances between the rows of p_ds.
void emit_similarity(const engine::Tensor& p_ds, const std::filesystem::path& path);
std::string summary_json(const RunSummary& s);

struct AblationRow {
  std::string name;
  /// Loss terms kept on; everything else is zeroed.
  std::set<game::LossTerm> enabled;
};

/// The loss-toggle rows of the component ablation, plus the statistics-only
/// baseline and the full objective.
std::vector<AblationRow> standard_ablation_rows();

struct AblationOutcome {
  AblationRow row;
  std::optional<RunSummary> summary;
  std::string error;
};

/// One run per row, each in out_dir/<row name>; a failing row is recorded
/// and the sweep continues. Writes out_dir/ablation.csv.
std::vector<AblationOutcome> ablation_sweep(const ExperimentConfig& cfg, const std::vector<AblationRow>& rows);

std::string ablation_table(const std::vector<AblationOutcome>& outcomes);

}  // namespace adasg::xp
