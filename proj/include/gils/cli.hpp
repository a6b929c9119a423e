// Copyright (c) 2026 The gils Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gils/attacks.hpp"
#include "gils/bo.hpp"
#include "gils/errors.hpp"
#include "gils/fsio.hpp"
#include "gils/run_config.hpp"
#include "gils/trainer.hpp"

namespace gils {

enum ExitCode : int {
  exit_ok = 0,
  exit_validation = 2,
  exit_io = 3,
  exit_numeric = 4,
};

namespace detail {

template <typename Fn>
int run_command(Fn&& fn, std::ostream& err) {
  try {
    fn();
    return exit_ok;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return exit_io;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return exit_numeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_numeric;
  }
}

inline RunConfig load_run_config(const std::string& config_path,
                                 std::optional<std::uint64_t> seed_override) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(config_path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("config '" + config_path + "': " + e.what());
  }
  RunConfig cfg = parse_run_config(j);
  if (seed_override) {
    cfg.gils.seed = *seed_override;
    cfg.bo.seed = *seed_override;
  }
  return cfg;
}

inline void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
}

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline GilsConfig trial_gils_config(const GilsConfig& base, const GilsPoint& p) {
  GilsConfig cfg = base;
  cfg.perturb.alpha = p.alpha;
  cfg.perturb.steps = p.T;
  cfg.perturb.eta = p.eta;
  cfg.epochs = p.epochs;
  return cfg;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// train: runs the configured mode and writes report.jsonl, checkpoint.json
// and plot.csv (epoch, loss, accuracy, msq-grad).
// ---------------------------------------------------------------------------

inline void run_train(const RunConfig& cfg, const std::string& out_dir) {
  const BuiltData data = build_data(cfg.data);
  const Dataset& eval = data.split(cfg.eval_split);
  ModelParams init = make_mlp(static_cast<std::size_t>(data.train.feature_dim),
                              cfg.model.hidden,
                              static_cast<std::size_t>(data.train.k), cfg.model.seed);

  TrainResult result;
  if (cfg.gils.mode == TrainMode::attacked_gils) {
    const AttackConfig atk = cfg.attack->attack_config(cfg.attack->kinds.front());
    result = attack_then_gils(atk, cfg.gils, data.train, std::move(init), &eval);
  } else {
    result = train(cfg.gils, data.train, std::move(init), &eval);
  }

  detail::ensure_out_dir(out_dir);
  write_file_atomic(detail::join_path(out_dir, "report.jsonl"),
                    report_to_jsonl(result.report));
  save_model(result.params, detail::join_path(out_dir, "checkpoint.json"));
  std::string csv = "epoch,loss,accuracy,msq_grad\n";
  for (const auto& rec : result.report.epochs) {
    csv += std::to_string(rec.epoch);
    csv += ',';
    csv += format_double(rec.train_loss);
    csv += ',';
    csv += format_double(rec.test_accuracy);
    csv += ',';
    csv += format_double(rec.msq_grad);
    csv += '\n';
  }
  write_file_atomic(detail::join_path(out_dir, "plot.csv"), csv);
}

inline int cmd_train(const std::string& config_path, const std::string& out_dir,
                     std::optional<std::uint64_t> seed_override = {},
                     std::ostream& err = std::cerr) {
  return detail::run_command(
      [&] { run_train(detail::load_run_config(config_path, seed_override), out_dir); },
      err);
}

// ---------------------------------------------------------------------------
// bo: 5 + 20 trials over the hyperparameter space; writes trials.jsonl and
// best_config.json. An existing trials.jsonl in out_dir resumes the run.
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json trial_to_json(const Trial& t) {
  nlohmann::ordered_json j;
  j["index"] = t.index;
  j["point"] = t.point;
  j["config"] = {{"alpha", t.config.alpha},
                 {"T", t.config.T},
                 {"eta", t.config.eta},
                 {"epochs", t.config.epochs}};
  if (t.objective)
    j["objective"] = *t.objective;
  else
    j["objective"] = nullptr;
  j["seed"] = t.seed;
  j["timestamp"] = t.timestamp;
  return j;
}

inline Trial trial_from_json(const nlohmann::json& j) {
  Trial t;
  try {
    t.index = j.at("index").get<int>();
    t.point = j.at("point").get<Vec>();
    t.config.alpha = j.at("config").at("alpha").get<double>();
    t.config.T = j.at("config").at("T").get<int>();
    t.config.eta = j.at("config").at("eta").get<double>();
    t.config.epochs = j.at("config").at("epochs").get<int>();
    if (!j.at("objective").is_null()) t.objective = j.at("objective").get<double>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.timestamp = j.at("timestamp").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("trial record: ") + e.what());
  }
  return t;
}

inline std::vector<Trial> load_trials(const std::string& path) {
  std::vector<Trial> trials;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      trials.push_back(trial_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("trials file '" + path + "': " + e.what());
    }
  }
  return trials;
}

}  // namespace detail

inline void run_bo(const RunConfig& cfg, const std::string& out_dir) {
  const BuiltData data = build_data(cfg.data);
  const Dataset& eval = data.split(cfg.eval_split);
  const SearchSpace space;

  const BoObjective objective = [&](const GilsPoint& p, std::uint64_t seed) {
    GilsConfig tc = detail::trial_gils_config(cfg.gils, p);
    ModelParams init = make_mlp(static_cast<std::size_t>(data.train.feature_dim),
                                cfg.model.hidden,
                                static_cast<std::size_t>(data.train.k), seed);
    const TrainResult r = train(tc, data.train, std::move(init), &eval);
    return r.report.epochs.empty() ? 0.0 : r.report.epochs.back().test_accuracy;
  };

  detail::ensure_out_dir(out_dir);
  const std::string trials_path = detail::join_path(out_dir, "trials.jsonl");
  std::vector<Trial> prior;
  if (std::filesystem::exists(trials_path)) prior = detail::load_trials(trials_path);

  const BoResult res =
      bo_search(objective, space, cfg.bo.n_init, cfg.bo.n_iter, cfg.bo.seed, prior);

  std::string jsonl;
  for (const auto& t : res.trials) jsonl += detail::trial_to_json(t).dump() + "\n";
  write_file_atomic(trials_path, jsonl);

  nlohmann::ordered_json bestj;
  bestj["config"] = {{"alpha", res.best.config.alpha},
                     {"T", res.best.config.T},
                     {"eta", res.best.config.eta},
                     {"epochs", res.best.config.epochs},
                     {"gamma", cfg.gils.perturb.gamma}};
  bestj["objective"] = *res.best.objective;
  bestj["trial_index"] = res.best.index;
  write_file_atomic(detail::join_path(out_dir, "best_config.json"), bestj.dump(2) + "\n");
}

inline int cmd_bo(const std::string& config_path, const std::string& out_dir,
                  std::optional<std::uint64_t> seed_override = {},
                  std::ostream& err = std::cerr) {
  return detail::run_command(
      [&] { run_bo(detail::load_run_config(config_path, seed_override), out_dir); }, err);
}

// ---------------------------------------------------------------------------
// attack: evaluates checkpoints under each configured attack and the
// attack-then-train combination; writes attacks.csv.
// ---------------------------------------------------------------------------

inline void run_attack_eval(const RunConfig& cfg, const std::string& out_dir) {
  if (!cfg.attack) throw ValidationError("config: attack section is required");
  if (cfg.attack->checkpoints.empty())
    throw ValidationError("config: attack.checkpoints must name at least one model");
  const BuiltData data = build_data(cfg.data);
  const Dataset& eval = data.split(cfg.eval_split);

  std::string csv = "model,attack,epsilon,clean_accuracy,attacked_accuracy,attack_then_train_accuracy\n";
  for (const auto& ckpt : cfg.attack->checkpoints) {
    const ModelParams params = load_model(ckpt);
    const double clean = evaluate_accuracy(params, eval);
    for (AttackKind kind : cfg.attack->kinds) {
      const AttackConfig atk = cfg.attack->attack_config(kind);
      const double attacked = attacked_accuracy(params, eval, atk);
      ModelParams init = make_mlp(static_cast<std::size_t>(data.train.feature_dim),
                                  cfg.model.hidden,
                                  static_cast<std::size_t>(data.train.k),
                                  cfg.model.seed);
      const TrainResult combo =
          attack_then_gils(atk, cfg.gils, data.train, std::move(init), &eval);
      const double combo_acc = combo.report.epochs.empty()
                                   ? 0.0
                                   : combo.report.epochs.back().test_accuracy;
      csv += std::filesystem::path(ckpt).filename().string();
      csv += ',';
      csv += to_string(kind);
      csv += ',';
      csv += format_double(atk.epsilon);
      csv += ',';
      csv += format_double(clean);
      csv += ',';
      csv += format_double(attacked);
      csv += ',';
      csv += format_double(combo_acc);
      csv += '\n';
    }
  }
  detail::ensure_out_dir(out_dir);
  write_file_atomic(detail::join_path(out_dir, "attacks.csv"), csv);
}

inline int cmd_attack(const std::string& config_path, const std::string& out_dir,
                      std::optional<std::uint64_t> seed_override = {},
                      std::ostream& err = std::cerr) {
  return detail::run_command(
      [&] { run_attack_eval(detail::load_run_config(config_path, seed_override), out_dir); },
      err);
}

// ---------------------------------------------------------------------------
// gamma-sweep: retrains with the penalty's denominator perturbed around 1000
// and tabulates the resulting accuracy stability.
// ---------------------------------------------------------------------------

/// Denominators for the sweep rows: the baseline 1000 plus +-0.1, +-1, +-10,
/// +-100 perturbations.
inline std::vector<double> gamma_sweep_denominators() {
  return {1000.0, 1000.1, 999.9, 1001.0, 999.0, 1010.0, 990.0, 1100.0, 900.0};
}

inline void run_gamma_sweep(const RunConfig& cfg, const std::string& out_dir) {
  const BuiltData data = build_data(cfg.data);
  const Dataset& eval = data.split(cfg.eval_split);

  std::string csv = "gamma_label,gamma,accuracy,final_loss\n";
  for (double denom : gamma_sweep_denominators()) {
    GilsConfig run_cfg = cfg.gils;
    run_cfg.perturb.gamma = 1.0 / denom;
    ModelParams init = make_mlp(static_cast<std::size_t>(data.train.feature_dim),
                                cfg.model.hidden,
                                static_cast<std::size_t>(data.train.k), cfg.model.seed);
    const TrainResult r = train(run_cfg, data.train, std::move(init), &eval);
    const auto& last = r.report.epochs.back();
    csv += "1/" + format_double(denom);
    csv += ',';
    csv += format_double(run_cfg.perturb.gamma);
    csv += ',';
    csv += format_double(last.test_accuracy);
    csv += ',';
    csv += format_double(last.train_loss);
    csv += '\n';
  }
  detail::ensure_out_dir(out_dir);
  write_file_atomic(detail::join_path(out_dir, "gamma_sweep.csv"), csv);
}

inline int cmd_gamma_sweep(const std::string& config_path, const std::string& out_dir,
                           std::optional<std::uint64_t> seed_override = {},
                           std::ostream& err = std::cerr) {
  return detail::run_command(
      [&] { run_gamma_sweep(detail::load_run_config(config_path, seed_override), out_dir); },
      err);
}

// ---------------------------------------------------------------------------
// default-config: prints a ready-to-edit configuration for a named profile.
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& config_profiles() {
  static const std::vector<std::string> profiles = {"desk", "paper-mtdefect-resnet34"};
  return profiles;
}

inline RunConfig default_config(const std::string& profile) {
  RunConfig cfg;  // desk defaults: alpha=0.2, T=5, eta=1.5, epochs=30
  if (profile == "desk") {
    return cfg;
  }
  if (profile == "paper-mtdefect-resnet34") {
    // Provenance defaults from the strongest reported tuning run.
    cfg.gils.perturb.alpha = 0.40432489252683534;
    cfg.gils.perturb.steps = 10;
    cfg.gils.perturb.eta = 2.5677535344621507;
    cfg.gils.epochs = 60;
    return cfg;
  }
  std::string msg = "unknown profile '" + profile + "'; available:";
  for (const auto& p : config_profiles()) msg += " " + p;
  throw ValidationError(msg);
}

inline int cmd_default_config(const std::string& profile,
                              std::ostream& out = std::cout,
                              std::ostream& err = std::cerr) {
  return detail::run_command(
      [&] { out << run_config_to_json(default_config(profile)).dump(2) << '\n'; }, err);
}

}  // namespace gils
