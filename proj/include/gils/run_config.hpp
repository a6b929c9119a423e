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

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gils/attacks.hpp"
#include "gils/bo.hpp"
#include "gils/data.hpp"
#include "gils/errors.hpp"
#include "gils/trainer.hpp"

namespace gils {

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::string& section,
                                std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw ValidationError("config: section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) {
        known = true;
        break;
      }
    if (!known)
      throw ValidationError("config: unknown key '" + section + "." + key + "'");
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("config: field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

struct DataConfig {
  std::string generator = "blobs";  // blobs | csv | tensor_bin
  int k = 3;
  int n_per_class = 40;
  int feature_dim = 4;
  double class_sep = 3.0;
  std::uint64_t seed = 1;
  int test_n_per_class = 0;  // 0: same as n_per_class
  double shift = 2.0;        // magnitude of the shifted test split
  std::string path;          // csv / tensor_bin train file
  std::string test_path;     // optional held-out file

  void validate() const {
    if (generator != "blobs" && generator != "csv" && generator != "tensor_bin")
      throw ValidationError("config: data.generator must be blobs|csv|tensor_bin");
    if (generator == "blobs") {
      if (k < 2) throw ValidationError("config: data.k must be >= 2");
      if (n_per_class < 1) throw ValidationError("config: data.n_per_class must be >= 1");
      if (feature_dim < k)
        throw ValidationError("config: data.feature_dim must be >= data.k");
      if (class_sep < 0) throw ValidationError("config: data.class_sep must be >= 0");
      if (shift < 0) throw ValidationError("config: data.shift must be >= 0");
    } else if (path.empty()) {
      throw ValidationError("config: data.path required for generator '" + generator + "'");
    }
  }
};

struct ModelConfig {
  std::vector<std::size_t> hidden = {8};
  std::uint64_t seed = 7;

  void validate() const {
    if (hidden.size() > 3)
      throw ValidationError("config: model.hidden supports at most 3 layers");
    for (std::size_t w : hidden)
      if (w == 0 || w > 64)
        throw ValidationError("config: model.hidden widths must be in [1, 64]");
  }
};

struct BoRunConfig {
  int n_init = 5;
  int n_iter = 20;
  std::uint64_t seed = 3;

  void validate() const {
    if (n_init < 1) throw ValidationError("config: bo.n_init must be >= 1");
    if (n_iter < 0) throw ValidationError("config: bo.n_iter must be >= 0");
  }
};

struct AttackRunConfig {
  std::vector<AttackKind> kinds;
  double epsilon = 8.0 / 225.0;
  int steps = 10;
  double step_size = 0.0;
  double kappa = 0.0;
  std::vector<std::string> checkpoints;

  AttackConfig attack_config(AttackKind kind) const {
    return AttackConfig{kind, epsilon, steps, step_size, kappa};
  }

  void validate() const {
    if (kinds.empty()) throw ValidationError("config: attack.kinds must not be empty");
    AttackConfig probe = attack_config(kinds.front());
    probe.validate();
  }
};

struct RunConfig {
  DataConfig data;
  ModelConfig model;
  GilsConfig gils;
  std::string eval_split = "test_seen";  // train | test_seen | test_shifted
  std::optional<AttackRunConfig> attack;
  BoRunConfig bo;

  void validate() const {
    data.validate();
    model.validate();
    gils.validate();
    // The experiment surface keeps alpha inside the hyperparameter search
    // bounds; the library itself accepts any alpha in [0, 1).
    if (gils.perturb.alpha > 0.5)
      throw ValidationError("config: gils.alpha " + format_double(gils.perturb.alpha) +
                            " outside [0, 0.5]");
    if (gils.epochs < 1) throw ValidationError("config: gils.epochs must be >= 1");
    if (eval_split != "train" && eval_split != "test_seen" && eval_split != "test_shifted")
      throw ValidationError("config: eval_split must be train|test_seen|test_shifted");
    if (attack) attack->validate();
    bo.validate();
    if (gils.mode == TrainMode::attacked_gils && !attack)
      throw ValidationError("config: mode attacked_gils requires an attack section");
  }
};

inline RunConfig parse_run_config(const nlohmann::json& j) {
  detail::reject_unknown_keys(j, "", {"data", "model", "gils", "attack", "bo"});
  RunConfig cfg;

  if (j.contains("data")) {
    const auto& d = j.at("data");
    detail::reject_unknown_keys(d, "data",
                                {"generator", "k", "n_per_class", "feature_dim",
                                 "class_sep", "seed", "test_n_per_class", "shift",
                                 "path", "test_path"});
    cfg.data.generator = detail::get_or<std::string>(d, "generator", cfg.data.generator);
    cfg.data.k = detail::get_or<int>(d, "k", cfg.data.k);
    cfg.data.n_per_class = detail::get_or<int>(d, "n_per_class", cfg.data.n_per_class);
    cfg.data.feature_dim = detail::get_or<int>(d, "feature_dim", cfg.data.feature_dim);
    cfg.data.class_sep = detail::get_or<double>(d, "class_sep", cfg.data.class_sep);
    cfg.data.seed = detail::get_or<std::uint64_t>(d, "seed", cfg.data.seed);
    cfg.data.test_n_per_class =
        detail::get_or<int>(d, "test_n_per_class", cfg.data.test_n_per_class);
    cfg.data.shift = detail::get_or<double>(d, "shift", cfg.data.shift);
    cfg.data.path = detail::get_or<std::string>(d, "path", cfg.data.path);
    cfg.data.test_path = detail::get_or<std::string>(d, "test_path", cfg.data.test_path);
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    detail::reject_unknown_keys(m, "model", {"hidden", "seed"});
    cfg.model.hidden = detail::get_or<std::vector<std::size_t>>(m, "hidden", cfg.model.hidden);
    cfg.model.seed = detail::get_or<std::uint64_t>(m, "seed", cfg.model.seed);
  }

  if (j.contains("gils")) {
    const auto& g = j.at("gils");
    detail::reject_unknown_keys(
        g, "gils",
        {"mode", "alpha", "T", "eta", "gamma", "epochs", "beta_classifier",
         "beta_features", "decay", "decay_every", "seed", "hard_labels_inner",
         "parallel_inner", "eval_split"});
    cfg.gils.mode = train_mode_from_string(detail::get_or<std::string>(g, "mode", "gils"));
    cfg.gils.perturb.alpha = detail::get_or<double>(g, "alpha", cfg.gils.perturb.alpha);
    cfg.gils.perturb.steps = detail::get_or<int>(g, "T", cfg.gils.perturb.steps);
    cfg.gils.perturb.eta = detail::get_or<double>(g, "eta", cfg.gils.perturb.eta);
    cfg.gils.perturb.gamma = detail::get_or<double>(g, "gamma", cfg.gils.perturb.gamma);
    cfg.gils.perturb.hard_labels_inner =
        detail::get_or<bool>(g, "hard_labels_inner", cfg.gils.perturb.hard_labels_inner);
    cfg.gils.epochs = detail::get_or<int>(g, "epochs", cfg.gils.epochs);
    cfg.gils.beta_classifier =
        detail::get_or<double>(g, "beta_classifier", cfg.gils.beta_classifier);
    cfg.gils.beta_features =
        detail::get_or<double>(g, "beta_features", cfg.gils.beta_features);
    cfg.gils.decay = detail::get_or<double>(g, "decay", cfg.gils.decay);
    cfg.gils.decay_every = detail::get_or<int>(g, "decay_every", cfg.gils.decay_every);
    cfg.gils.seed = detail::get_or<std::uint64_t>(g, "seed", cfg.gils.seed);
    cfg.gils.parallel_inner =
        detail::get_or<bool>(g, "parallel_inner", cfg.gils.parallel_inner);
    cfg.eval_split = detail::get_or<std::string>(g, "eval_split", cfg.eval_split);
  }

  if (j.contains("attack")) {
    const auto& a = j.at("attack");
    detail::reject_unknown_keys(
        a, "attack", {"kinds", "epsilon", "steps", "step_size", "kappa", "checkpoints"});
    AttackRunConfig ac;
    if (!a.contains("kinds"))
      throw ValidationError("config: attack.kinds is required");
    for (const auto& kind : a.at("kinds"))
      ac.kinds.push_back(attack_kind_from_string(kind.get<std::string>()));
    ac.epsilon = detail::get_or<double>(a, "epsilon", ac.epsilon);
    ac.steps = detail::get_or<int>(a, "steps", ac.steps);
    ac.step_size = detail::get_or<double>(a, "step_size", ac.step_size);
    ac.kappa = detail::get_or<double>(a, "kappa", ac.kappa);
    ac.checkpoints =
        detail::get_or<std::vector<std::string>>(a, "checkpoints", ac.checkpoints);
    cfg.attack = std::move(ac);
  }

  if (j.contains("bo")) {
    const auto& b = j.at("bo");
    detail::reject_unknown_keys(b, "bo", {"n_init", "n_iter", "seed"});
    cfg.bo.n_init = detail::get_or<int>(b, "n_init", cfg.bo.n_init);
    cfg.bo.n_iter = detail::get_or<int>(b, "n_iter", cfg.bo.n_iter);
    cfg.bo.seed = detail::get_or<std::uint64_t>(b, "seed", cfg.bo.seed);
  }

  cfg.validate();
  return cfg;
}

inline nlohmann::ordered_json run_config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["data"] = {{"generator", cfg.data.generator},
               {"k", cfg.data.k},
               {"n_per_class", cfg.data.n_per_class},
               {"feature_dim", cfg.data.feature_dim},
               {"class_sep", cfg.data.class_sep},
               {"seed", cfg.data.seed},
               {"shift", cfg.data.shift}};
  j["model"] = {{"hidden", cfg.model.hidden}, {"seed", cfg.model.seed}};
  j["gils"] = {{"mode", to_string(cfg.gils.mode)},
               {"alpha", cfg.gils.perturb.alpha},
               {"T", cfg.gils.perturb.steps},
               {"eta", cfg.gils.perturb.eta},
               {"gamma", cfg.gils.perturb.gamma},
               {"epochs", cfg.gils.epochs},
               {"beta_classifier", cfg.gils.beta_classifier},
               {"beta_features", cfg.gils.beta_features},
               {"decay", cfg.gils.decay},
               {"decay_every", cfg.gils.decay_every},
               {"seed", cfg.gils.seed},
               {"eval_split", cfg.eval_split}};
  j["bo"] = {{"n_init", cfg.bo.n_init}, {"n_iter", cfg.bo.n_iter}, {"seed", cfg.bo.seed}};
  if (cfg.attack) {
    nlohmann::ordered_json kinds = nlohmann::ordered_json::array();
    for (AttackKind k : cfg.attack->kinds) kinds.push_back(to_string(k));
    j["attack"] = {{"kinds", std::move(kinds)},
                   {"epsilon", cfg.attack->epsilon},
                   {"steps", cfg.attack->steps},
                   {"step_size", cfg.attack->step_size},
                   {"kappa", cfg.attack->kappa},
                   {"checkpoints", cfg.attack->checkpoints}};
  }
  return j;
}

/// The datasets a run works with. test_shifted exists only for generated data.
struct BuiltData {
  Dataset train;
  Dataset test_seen;
  std::optional<Dataset> test_shifted;

  const Dataset& split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "test_seen") return test_seen;
    if (name == "test_shifted") {
      if (!test_shifted)
        throw ValidationError("eval_split test_shifted is unavailable for this data source");
      return *test_shifted;
    }
    throw ValidationError("unknown split '" + name + "'");
  }
};

inline BuiltData build_data(const DataConfig& cfg) {
  cfg.validate();
  BuiltData out;
  if (cfg.generator == "blobs") {
    const int test_n = cfg.test_n_per_class > 0 ? cfg.test_n_per_class : cfg.n_per_class;
    out.train = gen_blobs(cfg.k, cfg.n_per_class, cfg.feature_dim, cfg.class_sep,
                          cfg.seed, Split::train);
    out.test_seen = gen_blobs(cfg.k, test_n, cfg.feature_dim, cfg.class_sep,
                              cfg.seed + 1000003, Split::test_seen);
    Dataset base = out.train;
    base.blob->n_per_class = test_n;
    out.test_shifted = gen_shifted_test(base, cfg.shift, cfg.seed + 2000003);
  } else if (cfg.generator == "csv") {
    out.train = load_csv(cfg.path);
    out.test_seen = cfg.test_path.empty() ? out.train : load_csv(cfg.test_path, out.train.k);
    out.test_seen.split = Split::test_seen;
  } else {
    out.train = load_tensor_bin(cfg.path);
    out.test_seen = cfg.test_path.empty() ? out.train : load_tensor_bin(cfg.test_path);
    out.test_seen.split = Split::test_seen;
  }
  return out;
}

}  // namespace gils
