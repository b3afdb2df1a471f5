// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include "adasg/xp/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "adasg/error.hpp"

namespace adasg::xp {

namespace pt = boost::property_tree;

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw ConfigError(key + ": expected a number, got '" + s + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  errno = 0;
  char* end = nullptr;
  if (s.empty() || s.front() == '-') throw ConfigError(key + ": expected a non-negative integer, got '" + s + "'");
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

std::vector<std::size_t> to_widths(const std::string& key, const std::string& s) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(","));
  std::vector<std::size_t> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (p.empty()) continue;
    out.push_back(static_cast<std::size_t>(to_u64(key, p)));
  }
  return out;
}

std::string fmt_widths(const std::vector<std::size_t>& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) out += (i ? "," : "") + std::to_string(w[i]);
  return out;
}

struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

// Section order and key order here define the print-config layout.
using FieldTable = std::vector<std::pair<std::string, std::vector<std::pair<std::string, Field>>>>;

#define ADASG_DOUBLE(path, key)                                                       \
  Field {                                                                             \
    [](const ExperimentConfig& c) { return fmt_double(c.path); },                     \
        [](ExperimentConfig& c, const std::string& s) { c.path = to_double(key, s); } \
  }
#define ADASG_SIZE(path, key)                                                                            \
  Field {                                                                                                \
    [](const ExperimentConfig& c) { return std::to_string(c.path); },                                    \
        [](ExperimentConfig& c, const std::string& s) { c.path = static_cast<std::size_t>(to_u64(key, s)); } \
  }

const FieldTable& fields() {
  static const FieldTable table = {
      {"experiment",
       {{"seed", {[](const ExperimentConfig& c) { return std::to_string(c.seed); },
                  [](ExperimentConfig& c, const std::string& s) { c.seed = to_u64("seed", s); }}},
        {"out_dir", {[](const ExperimentConfig& c) { return c.out_dir.string(); },
                     [](ExperimentConfig& c, const std::string& s) { c.out_dir = s; }}},
        {"eval_period", ADASG_SIZE(eval_period, "eval_period")}}},
      {"dataset",
       {{"classes", ADASG_SIZE(dataset.classes, "classes")},
        {"input_dim", ADASG_SIZE(dataset.input_dim, "input_dim")},
        {"samples_per_class", ADASG_SIZE(dataset.samples_per_class, "samples_per_class")},
        {"spread", ADASG_DOUBLE(dataset.spread, "spread")},
        {"center_scale", ADASG_DOUBLE(dataset.center_scale, "center_scale")},
        {"intrinsic_dim", ADASG_SIZE(dataset.intrinsic_dim, "intrinsic_dim")},
        {"ambient_noise", ADASG_DOUBLE(dataset.ambient_noise, "ambient_noise")}}},
      {"network",
       {{"p_hidden", {[](const ExperimentConfig& c) { return fmt_widths(c.p_hidden); },
                      [](ExperimentConfig& c, const std::string& s) { c.p_hidden = to_widths("p_hidden", s); }}},
        {"noise_dim", ADASG_SIZE(noise_dim, "noise_dim")},
        {"g_hidden", {[](const ExperimentConfig& c) { return fmt_widths(c.g_hidden); },
                      [](ExperimentConfig& c, const std::string& s) { c.g_hidden = to_widths("g_hidden", s); }}}}},
      {"quant",
       {{"bits", {[](const ExperimentConfig& c) { return std::to_string(c.quant.bits); },
                  [](ExperimentConfig& c, const std::string& s) { c.quant.bits = static_cast<int>(to_u64("bits", s)); }}},
        {"quantize_input",
         {[](const ExperimentConfig& c) { return std::string(c.quant.quantize_input ? "true" : "false"); },
          [](ExperimentConfig& c, const std::string& s) { c.quant.quantize_input = to_bool("quantize_input", s); }}}}},
      {"pretrain",
       {{"epochs", ADASG_SIZE(pretrain.epochs, "pretrain.epochs")},
        {"lr", ADASG_DOUBLE(pretrain.lr, "pretrain.lr")},
        {"batch_size", ADASG_SIZE(pretrain.batch_size, "pretrain.batch_size")}}},
      {"game",
       {{"alpha_ds", ADASG_DOUBLE(hp.alpha_ds, "alpha_ds")},
        {"alpha_as", ADASG_DOUBLE(hp.alpha_as, "alpha_as")},
        {"beta", ADASG_DOUBLE(hp.beta, "beta")},
        {"gamma", ADASG_DOUBLE(hp.gamma, "gamma")},
        {"lambda_l", ADASG_DOUBLE(hp.lambda_l, "lambda_l")},
        {"lambda_u", ADASG_DOUBLE(hp.lambda_u, "lambda_u")},
        {"tau", ADASG_DOUBLE(hp.tau, "tau")},
        {"lr_g", ADASG_DOUBLE(hp.lr_g, "lr_g")},
        {"g_beta1", ADASG_DOUBLE(hp.g_beta1, "g_beta1")},
        {"lr_q", ADASG_DOUBLE(hp.lr_q, "lr_q")},
        {"q_momentum", ADASG_DOUBLE(hp.q_momentum, "q_momentum")},
        {"q_weight_decay", ADASG_DOUBLE(hp.q_weight_decay, "q_weight_decay")},
        {"lr_decay_factor", ADASG_DOUBLE(hp.lr_decay_factor, "lr_decay_factor")},
        {"lr_decay_period", ADASG_SIZE(hp.lr_decay_period, "lr_decay_period")},
        {"batch_size", ADASG_SIZE(hp.batch_size, "game.batch_size")},
        {"epochs", ADASG_SIZE(hp.epochs, "game.epochs")},
        {"iters_per_epoch", ADASG_SIZE(hp.iters_per_epoch, "iters_per_epoch")},
        {"probe_size", ADASG_SIZE(hp.probe_size, "probe_size")},
        {"optimizer",
         {[](const ExperimentConfig& c) {
            return std::string(c.hp.optimizer == game::OptimizerMode::kAdamNesterov ? "adam_nesterov" : "plain");
          },
          [](ExperimentConfig& c, const std::string& s) {
            if (s == "adam_nesterov") c.hp.optimizer = game::OptimizerMode::kAdamNesterov;
            else if (s == "plain") c.hp.optimizer = game::OptimizerMode::kPlainGradient;
            else throw ConfigError("optimizer: expected adam_nesterov or plain, got '" + s + "'");
          }}},
        {"sigma",
         {[](const ExperimentConfig& c) {
            return std::string(c.hp.sigma == game::SigmaMode::kVariance ? "variance" : "std");
          },
          [](ExperimentConfig& c, const std::string& s) {
            if (s == "variance") c.hp.sigma = game::SigmaMode::kVariance;
            else if (s == "std") c.hp.sigma = game::SigmaMode::kStd;
            else throw ConfigError("sigma: expected variance or std, got '" + s + "'");
          }}},
        {"disable", {[](const ExperimentConfig& c) { return format_loss_list(c.disable); },
                     [](ExperimentConfig& c, const std::string& s) { c.disable = parse_loss_list(s); }}}}},
  };
  return table;
}

#undef ADASG_DOUBLE
#undef ADASG_SIZE

}  // namespace

void ExperimentConfig::validate() const {
  dataset.validate();
  quant.validate();
  hp.validate();
  p_spec().validate_classifier(dataset.classes);
  g_spec().validate();
  if (pretrain.batch_size < 2) throw ConfigError("pretrain.batch_size must be at least 2");
  if (!(pretrain.lr >= 0.0)) throw ConfigError("pretrain.lr must be non-negative");
  if (p_hidden.empty()) throw ConfigError("p_hidden needs at least one BN layer");
}

nets::NetworkSpec ExperimentConfig::p_spec() const {
  return nets::NetworkSpec::mlp(dataset.input_dim, p_hidden, dataset.classes);
}

nets::GeneratorSpec ExperimentConfig::g_spec() const {
  nets::GeneratorSpec g;
  g.noise_dim = noise_dim;
  g.classes = dataset.classes;
  g.hidden = g_hidden;
  g.output_dim = dataset.input_dim;
  return g;
}

game::HyperParams ExperimentConfig::effective_hp() const { return game::ablation_config(hp, disable); }

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  std::map<std::string, const std::vector<std::pair<std::string, Field>>*> sections;
  for (const auto& [name, keys] : fields()) sections[name] = &keys;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("config: key '" + section + "' outside any section");
    }
    const auto it = sections.find(section);
    if (it == sections.end()) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      const auto& keys = *it->second;
      const auto f = std::find_if(keys.begin(), keys.end(), [&key](const auto& kv) { return kv.first == key; });
      if (f == keys.end()) throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
      f->second.set(cfg, boost::trim_copy(value.data()));
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string render_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [section, keys] : fields()) {
    if (!out.empty()) out += "\n";
    out += "[" + section + "]\n";
    for (const auto& [key, field] : keys) out += key + " = " + field.get(cfg) + "\n";
  }
  return out;
}

std::set<game::LossTerm> parse_loss_list(const std::string& text) {
  static const std::map<std::string, game::LossTerm> names = {
      {"ds", game::LossTerm::kDs},       {"l_ds", game::LossTerm::kDs},   {"as", game::LossTerm::kAs},
      {"l_as", game::LossTerm::kAs},     {"b", game::LossTerm::kBound},   {"l_b", game::LossTerm::kBound},
      {"bns", game::LossTerm::kBns},     {"l_bns", game::LossTerm::kBns},
  };
  std::set<game::LossTerm> out;
  const std::string trimmed = boost::trim_copy(text);
  if (trimmed.empty() || trimmed == "none") return out;
  std::vector<std::string> parts;
  boost::split(parts, trimmed, boost::is_any_of(","));
  for (auto& p : parts) {
    boost::trim(p);
    boost::to_lower(p);
    const auto it = names.find(p);
    if (it == names.end()) throw ConfigError("unknown loss term '" + p + "' (expected ds, as, b, bns)");
    out.insert(it->second);
  }
  return out;
}

std::string format_loss_list(const std::set<game::LossTerm>& terms) {
  if (terms.empty()) return "none";
  std::string out;
  for (game::LossTerm t : terms) {
    if (!out.empty()) out += ",";
    switch (t) {
      case game::LossTerm::kDs: out += "ds"; break;
      case game::LossTerm::kAs: out += "as"; break;
      case game::LossTerm::kBound: out += "b"; break;
      case game::LossTerm::kBns: out += "bns"; break;
    }
  }
  return out;
}

}  // namespace adasg::xp
