// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include "adasg/xp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

#include "adasg/adapt/adaptability.hpp"
#include "adasg/error.hpp"
#include "adasg/nets/checkpoint.hpp"

namespace adasg::xp {

namespace {

constexpr std::uint64_t kPInitStream = 21;
constexpr std::uint64_t kPretrainStream = 22;
constexpr std::uint64_t kGeneratorStream = 23;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

engine::Tensor probe_disagreement(game::GameState& state) {
  engine::NoGradGuard no_grad;
  const engine::Tensor x =
      state.generator.forward(state.probe.z, state.probe.labels, nets::GeneratorMode::kBatchStats);
  return adapt::disagreement_distribution({state.teacher.forward(x), state.quantized.forward(x)});
}

}  // namespace

PreparedTask prepare_task(const ExperimentConfig& cfg) {
  cfg.validate();
  DatasetSplit data = synth_dataset(cfg.dataset, cfg.seed);
  engine::Rng init_rng(cfg.seed, kPInitStream);
  nets::Mlp p = nets::build_p(cfg.p_spec(), cfg.dataset.classes, init_rng);
  engine::Rng train_rng(cfg.seed, kPretrainStream);
  const double p_acc = nets::pretrain_p(p, data.train, data.test, cfg.pretrain, train_rng);
  p.set_requires_grad(false);
  return {std::move(data), std::move(p), p_acc};
}

game::GameState initial_game_state(const ExperimentConfig& cfg, const PreparedTask& task) {
  engine::Rng g_rng(cfg.seed, kGeneratorStream);
  nets::Generator g(cfg.g_spec(), g_rng);
  return game::make_game_state(task.p, std::move(g), nets::init_q_from_p(task.p, cfg.quant), cfg.effective_hp(),
                               cfg.seed);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) { return run_experiment(cfg, prepare_task(cfg)); }

ExperimentResult run_experiment(const ExperimentConfig& cfg, const PreparedTask& task) {
  cfg.validate();
  const bool write = !cfg.out_dir.empty();
  if (write) {
    std::filesystem::create_directories(cfg.out_dir);
    write_file(cfg.out_dir / "config.ini", render_config(cfg));
    nets::save_checkpoint(task.p, cfg.out_dir / "p.ckpt");
  }
  game::GameState state = initial_game_state(cfg, task);
  const double q_init_acc = nets::accuracy(state.quantized, task.data.test);
  if (write) nets::save_checkpoint(state.quantized, cfg.out_dir / "q_init.ckpt");

  game::RunOptions options;
  options.eval_set = &task.data.test;
  options.eval_period = cfg.eval_period;
  std::string status = "ok";
  std::string error;
  try {
    game::run_game(state, cfg.effective_hp(), options);
  } catch (const NumericalError& e) {
    status = "numerical_abort";
    error = e.what();
  }

  ExperimentResult result;
  result.summary = summarize(state.log, task.p_acc, q_init_acc, nets::accuracy(state.quantized, task.data.test));
  result.summary.status = status;
  result.summary.error = error;
  if (write) {
    emit_metrics(state, cfg.out_dir / "metrics.csv");
    emit_similarity(probe_disagreement(state), cfg.out_dir / "similarity.csv");
    nets::save_checkpoint(state.quantized, cfg.out_dir / "q.ckpt");
    nets::save_checkpoint(state.generator, cfg.out_dir / "g.ckpt");
    write_file(cfg.out_dir / "summary.json", summary_json(result.summary));
  }
  result.log = std::move(state.log);
  return result;
}

RunSummary summarize(const std::vector<game::IterationLog>& log, double p_acc, double q_init_acc,
                     double q_final_acc) {
  RunSummary s;
  s.p_acc = p_acc;
  s.q_init_acc = q_init_acc;
  s.q_final_acc = q_final_acc;
  s.iterations = log.size();
  const std::size_t quarter = log.size() / 4;
  if (quarter > 0) {
    std::vector<double> bg_first, bg_last, lb_first, lb_last;
    for (std::size_t i = 0; i < quarter; ++i) {
      bg_first.push_back(std::abs(log[i].balance.bg));
      lb_first.push_back(log[i].l_b);
      const auto& tail = log[log.size() - quarter + i];
      bg_last.push_back(std::abs(tail.balance.bg));
      lb_last.push_back(tail.l_b);
    }
    const auto mean = [](const std::vector<double>& v) {
      double total = 0.0;
      for (double x : v) total += x;
      return total / static_cast<double>(v.size());
    };
    s.bg_first_quartile = mean(bg_first);
    s.bg_last_quartile = mean(bg_last);
    s.l_b_first_quartile = median(lb_first);
    s.l_b_last_quartile = median(lb_last);
  }
  return s;
}

std::string metrics_csv(const std::vector<game::IterationLog>& log) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& r : log) {
    out += std::to_string(r.epoch) + "," + std::to_string(r.iter);
    for (double v : {r.l_ds, r.l_as, r.l_b, r.l_bns, r.l_g, r.l_q, r.balance.bg, r.balance.delta_g,
                     r.balance.delta_q, r.mean_h_norm}) {
      out += "," + fmt(v);
    }
    out += "," + (r.q_acc ? fmt(*r.q_acc) : std::string()) + "\n";
  }
  return out;
}

void emit_metrics(const game::GameState& state, const std::filesystem::path& path) {
  emit_metrics(state.log, path);
}

void emit_metrics(const std::vector<game::IterationLog>& log, const std::filesystem::path& path) {
  write_file(path, metrics_csv(log));
}

void emit_similarity(const engine::Tensor& p_ds, const std::filesystem::path& path) {
  const std::vector<double> s = adapt::similarity_matrix(p_ds);
  const std::size_t n = p_ds.rows();
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out += (j ? "," : "") + fmt(s[i * n + j]);
    out += "\n";
  }
  write_file(path, out);
}

std::string summary_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["status"] = s.status;
  if (!s.error.empty()) j["error"] = s.error;
  j["p_acc"] = s.p_acc;
  j["q_init_acc"] = s.q_init_acc;
  j["q_final_acc"] = s.q_final_acc;
  j["iterations"] = s.iterations;
  j["mean_abs_bg_first_quartile"] = s.bg_first_quartile;
  j["mean_abs_bg_last_quartile"] = s.bg_last_quartile;
  j["median_l_b_first_quartile"] = s.l_b_first_quartile;
  j["median_l_b_last_quartile"] = s.l_b_last_quartile;
  return j.dump(2) + "\n";
}

std::vector<AblationRow> standard_ablation_rows() {
  using game::LossTerm;
  return {
      {"as_b_bns", {LossTerm::kAs, LossTerm::kBound, LossTerm::kBns}},
      {"ds_b_bns", {LossTerm::kDs, LossTerm::kBound, LossTerm::kBns}},
      {"ds_as_bns", {LossTerm::kDs, LossTerm::kAs, LossTerm::kBns}},
      {"b_bns", {LossTerm::kBound, LossTerm::kBns}},
      {"ds_as_b", {LossTerm::kDs, LossTerm::kAs, LossTerm::kBound}},
      {"bns_only", {LossTerm::kBns}},
      {"full", {LossTerm::kDs, LossTerm::kAs, LossTerm::kBound, LossTerm::kBns}},
  };
}

std::vector<AblationOutcome> ablation_sweep(const ExperimentConfig& cfg, const std::vector<AblationRow>& rows) {
  const std::set<game::LossTerm> all = {game::LossTerm::kDs, game::LossTerm::kAs, game::LossTerm::kBound,
                                        game::LossTerm::kBns};
  std::optional<PreparedTask> task;
  std::vector<AblationOutcome> outcomes;
  for (const AblationRow& row : rows) {
    AblationOutcome outcome{row, std::nullopt, {}};
    try {
      if (!task) task = prepare_task(cfg);
      ExperimentConfig row_cfg = cfg;
      row_cfg.disable.clear();
      std::set_difference(all.begin(), all.end(), row.enabled.begin(), row.enabled.end(),
                          std::inserter(row_cfg.disable, row_cfg.disable.end()));
      row_cfg.disable.insert(cfg.disable.begin(), cfg.disable.end());
      if (!cfg.out_dir.empty()) row_cfg.out_dir = cfg.out_dir / row.name;
      outcome.summary = run_experiment(row_cfg, *task).summary;
    } catch (const Error& e) {
      outcome.error = e.what();
    }
    outcomes.push_back(std::move(outcome));
  }
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    write_file(cfg.out_dir / "ablation.csv", ablation_table(outcomes));
  }
  return outcomes;
}

std::string ablation_table(const std::vector<AblationOutcome>& outcomes) {
  std::string out = "row,l_ds,l_as,l_b,l_bns,p_acc,q_init_acc,q_final_acc,status\n";
  for (const auto& o : outcomes) {
    const auto mark = [&o](game::LossTerm t) { return o.row.enabled.count(t) ? "1" : "0"; };
    out += o.row.name + "," + mark(game::LossTerm::kDs) + "," + mark(game::LossTerm::kAs) + "," +
           mark(game::LossTerm::kBound) + "," + mark(game::LossTerm::kBns);
    if (o.summary) {
      out += "," + fmt(o.summary->p_acc) + "," + fmt(o.summary->q_init_acc) + "," + fmt(o.summary->q_final_acc) +
             "," + o.summary->status + "\n";
    } else {
      std::string err = o.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      out += ",,,,error: " + err + "\n";
    }
  }
  return out;
}

}  // namespace adasg::xp
