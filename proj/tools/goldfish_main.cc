/* Copyright 2026 The Goldfish Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// goldfish run | sweep | inspect | verify

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "goldfish/checkpoint.h"
#include "goldfish/config.h"
#include "goldfish/error.h"
#include "goldfish/experiment.h"
#include "goldfish/selfcheck.h"

namespace {

goldfish::exp::ExperimentConfig load(const std::string& path,
                                     const std::vector<std::string>& overrides,
                                     const std::string& output) {
  auto config = goldfish::exp::parse_config(path);
  for (const auto& o : overrides) goldfish::exp::apply_override(config, o);
  if (!output.empty()) goldfish::exp::apply_override(config, "output_dir", output);
  config.validate();
  return config;
}

goldfish::exp::RunOptions cli_options(bool quiet) {
  goldfish::exp::RunOptions opts;
  if (!quiet) opts.log = [](const std::string& line) { std::cerr << line << '\n'; };
  return opts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated unlearning experiments with distillation-based forgetting"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string output;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Run one experiment and write its artifacts");
  run->add_option("config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
  run->add_option("--set", overrides, "Override a key, e.g. --set rounds=20")->take_all();
  run->add_option("-o,--output", output, "Output directory (overrides output_dir)");
  run->add_flag("-q,--quiet", quiet, "Suppress per-round progress");

  std::string param;
  std::string values;
  auto* sweep = app.add_subcommand("sweep", "Run one experiment per parameter value");
  sweep->add_option("config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--param", param, "Config key to vary")->required();
  sweep->add_option("--values", values, "start:stop:step or a comma list")->required();
  sweep->add_option("--set", overrides, "Override a key before sweeping")->take_all();
  sweep->add_option("-o,--output", output, "Output directory (overrides output_dir)");
  sweep->add_flag("-q,--quiet", quiet, "Suppress per-round progress");

  std::string checkpoint_path;
  auto* inspect = app.add_subcommand("inspect", "Print a checkpoint header and statistics");
  inspect->add_option("checkpoint", checkpoint_path, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);

  auto* verify = app.add_subcommand("verify", "Run the built-in invariant suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto config = load(config_path, overrides, output);
      const auto result = goldfish::exp::run_experiment(config, cli_options(quiet));
      std::cout << goldfish::exp::format_summary(result.summary);
      return 0;
    }
    if (*sweep) {
      const auto config = load(config_path, overrides, output);
      goldfish::exp::run_sweep(config, param, goldfish::exp::expand_values(values),
                               cli_options(quiet));
      std::cout << "wrote " << config.output_dir << "/sweep.csv\n";
      return 0;
    }
    if (*inspect) {
      std::cout << goldfish::exp::describe_checkpoint(
          goldfish::exp::read_checkpoint(checkpoint_path));
      return 0;
    }
    if (*verify) {
      return goldfish::run_selfcheck(std::cout) ? 0 : 1;
    }
  } catch (const goldfish::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
