// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "adasg/game/game.hpp"
#include "adasg/nets/generator.hpp"
#include "adasg/nets/training.hpp"
#include "adasg/quant/quantizer.hpp"
#include "adasg/xp/dataset.hpp"

namespace adasg::xp {

/// Everything a run depends on. Loaded from an INI file whose keys mirror
/// the `print-config` output; missing keys keep their defaults and unknown
/// keys are rejected.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "run";
  std::size_t eval_period = 10;

  DatasetSpec dataset;
  std::vector<std::size_t> p_hidden{64, 64};
  std::size_t noise_dim = 16;
  std::vector<std::size_t> g_hidden{64, 64};
  quant::QuantConfig quant;
  nets::PretrainOptions pretrain;
  game::HyperParams hp;
  /// Loss terms switched off for this run (ablations).
  std::set<game::LossTerm> disable;

  void validate() const;
  nets::NetworkSpec p_spec() const;
  nets::GeneratorSpec g_spec() const;
  /// hp with the `disable` terms zeroed.
  game::HyperParams effective_hp() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every field, in a form parse_config() reads back to an equal config.
std::string render_config(const ExperimentConfig& cfg);

/// "ds,as,b,bns" style list; "none" or empty means no terms.
std::set<game::LossTerm> parse_loss_list(const std::string& text);
std::string format_loss_list(const std::set<game::LossTerm>& terms);

}  // namespace adasg::xp
