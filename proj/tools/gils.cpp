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

#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gils/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"GI-LS toolkit: worst-case data augmentation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::string profile = "desk";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run configuration JSON")->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "override the run seed from the config");
  };

  CLI::App* train = app.add_subcommand("train", "train one model and write reports");
  add_common(train);
  CLI::App* bo = app.add_subcommand("bo", "Bayesian-optimization hyperparameter search");
  add_common(bo);
  CLI::App* attack = app.add_subcommand("attack", "evaluate checkpoints under attacks");
  add_common(attack);
  CLI::App* sweep = app.add_subcommand("gamma-sweep", "train across perturbed penalty values");
  add_common(sweep);
  CLI::App* defcfg = app.add_subcommand("default-config", "print a profile configuration");
  defcfg->add_option("--profile", profile, "desk | paper-mtdefect-resnet34");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gils::exit_validation;
  }

  if (train->parsed()) return gils::cmd_train(config_path, out_dir, seed);
  if (bo->parsed()) return gils::cmd_bo(config_path, out_dir, seed);
  if (attack->parsed()) return gils::cmd_attack(config_path, out_dir, seed);
  if (sweep->parsed()) return gils::cmd_gamma_sweep(config_path, out_dir, seed);
  if (defcfg->parsed()) return gils::cmd_default_config(profile);
  return gils::exit_validation;
}
