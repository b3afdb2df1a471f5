// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: pretrain, quantize-eval, train, ablate, print-config.
// Exit codes: 0 ok, 2 config error, 3 numerical abort, 1 anything else.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include "adasg/error.hpp"
#include "adasg/nets/checkpoint.hpp"
#include "adasg/xp/config.hpp"
#include "adasg/xp/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> bits;
  std::optional<std::string> out;
  std::optional<std::size_t> epochs;
  std::optional<double> tau;
  std::optional<double> lambda_l;
  std::optional<double> lambda_u;
  std::optional<std::string> disable;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "INI config file (defaults when omitted)");
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--bits", o.bits, "quantization bit width (2..8)");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--epochs", o.epochs, "game epochs");
  sub->add_option("--tau", o.tau, "calibration temperature");
  sub->add_option("--lambda-l", o.lambda_l, "lower entropy bound");
  sub->add_option("--lambda-u", o.lambda_u, "upper entropy bound");
  sub->add_option("--disable", o.disable, "loss terms to switch off, e.g. ds,as");
}

adasg::xp::ExperimentConfig resolve(const Overrides& o) {
  adasg::xp::ExperimentConfig cfg = o.config.empty() ? adasg::xp::ExperimentConfig{} : adasg::xp::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.bits) cfg.quant.bits = *o.bits;
  if (o.out) cfg.out_dir = *o.out;
  if (o.epochs) cfg.hp.epochs = *o.epochs;
  if (o.tau) cfg.hp.tau = *o.tau;
  if (o.lambda_l) cfg.hp.lambda_l = *o.lambda_l;
  if (o.lambda_u) cfg.hp.lambda_u = *o.lambda_u;
  if (o.disable) cfg.disable = adasg::xp::parse_loss_list(*o.disable);
  cfg.validate();
  return cfg;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

int run(const std::string& command, const Overrides& o) {
  namespace xp = adasg::xp;
  const xp::ExperimentConfig cfg = resolve(o);
  if (command == "print-config") {
    std::cout << xp::render_config(cfg);
    return 0;
  }
  if (command == "pretrain" || command == "quantize-eval") {
    const xp::PreparedTask task = xp::prepare_task(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    adasg::nets::save_checkpoint(task.p, cfg.out_dir / "p.ckpt");
    std::cout << "p_acc " << pct(task.p_acc) << "\n";
    if (command == "quantize-eval") {
      const adasg::nets::Mlp q = adasg::nets::init_q_from_p(task.p, cfg.quant);
      adasg::nets::save_checkpoint(q, cfg.out_dir / "q_init.ckpt");
      std::cout << "q_init_acc " << pct(adasg::nets::accuracy(q, task.data.test)) << " (" << cfg.quant.bits
                << "-bit)\n";
    }
    return 0;
  }
  if (command == "train") {
    const xp::ExperimentResult r = xp::run_experiment(cfg);
    std::cout << xp::summary_json(r.summary);
    if (r.summary.status != "ok") {
      std::cerr << "numerical abort: " << r.summary.error << "\n";
      return kExitNumerical;
    }
    return 0;
  }
  // ablate
  const auto outcomes = xp::ablation_sweep(cfg, xp::standard_ablation_rows());
  std::cout << xp::ablation_table(outcomes);
  for (const auto& row : outcomes) {
    if (!row.summary || row.summary->status != "ok") return kExitNumerical;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive sample generation for data-free quantization"};
  app.require_subcommand(1);
  Overrides o;
  const std::pair<const char*, const char*> commands[] = {
      {"pretrain", "train the full-precision classifier and save p.ckpt"},
      {"quantize-eval", "pretrain, quantize and report accuracy before calibration"},
      {"train", "run the full generator/quantized-network game"},
      {"ablate", "run the standard loss-term ablation rows"},
      {"print-config", "print the resolved configuration as INI"},
  };
  for (const auto& [name, help] : commands) {
    add_common(app.add_subcommand(name, help), o);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  try {
    return run(app.get_subcommands().front()->get_name(), o);
  } catch (const adasg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const adasg::NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
