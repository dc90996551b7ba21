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

// End-to-end experiment: data preparation, the shared pre-deletion run and
// the comparison arms.
//
//   original   N rounds on the (poisoned) client data, never deletes
//   retrain    N rounds from omega_0 on D_r only; the JSD / L2 reference
//   goldfish   forks from the original run after round d, unlearns in d + 1
//   fedavg     same as goldfish with size-weighted aggregation
//
// Artifacts under output_dir: <arm>.csv, summary.csv, config.cfg and
// checkpoints/<arm>/round_NNN.gfck.

#ifndef GOLDFISH_EXPERIMENT_H_
#define GOLDFISH_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "goldfish/config.h"
#include "goldfish/data.h"
#include "goldfish/metrics.h"
#include "goldfish/nn.h"
#include "goldfish/server.h"
#include "goldfish/unlearn.h"

namespace goldfish::exp {

struct PreparedData {
  data::LabeledDataset test;
  data::LabeledDataset backdoor_eval;  // clean test rows whose label is not the target
  std::vector<data::LabeledDataset> clients;  // after poisoning
  std::vector<std::uint64_t> poisoned_ids;
  data::DeletionRequest deletion;
  data::LabeledDataset forget_eval;  // the deleted rows as the client held them
  double size_variance = 0.0;
};

PreparedData prepare_data(const ExperimentConfig& config);

// Fresh client states (shards split but untrained) over the prepared data.
std::vector<unlearn::ClientState> make_clients(const ExperimentConfig& config,
                                               const PreparedData& data);

struct ArmResult {
  std::string name;
  std::vector<eval::MetricsRecord> records;        // one per round
  std::vector<nn::ParameterVector> round_params;   // global after each round
  std::vector<fed::RoundMetrics> round_metrics;
  nn::ParameterVector deletion_client_params;  // after the deletion round, if the arm deletes
  double local_epochs = 0.0;                   // summed over rounds d+1..N and clients
  std::size_t audit_violations = 0;            // deleted ids seen by remain-side training

  const nn::ParameterVector& final_params() const { return round_params.back(); }
};

struct SummaryRow {
  std::string arm;
  std::size_t rounds = 0;
  double acc = 0.0;
  double backdoor = 0.0;
  double jsd = 0.0;
  double l2 = 0.0;
  double p_value = 1.0;
  double local_epochs = 0.0;
};

inline constexpr const char* kSummaryHeader = "arm,rounds,acc,backdoor,jsd,l2,p_value,local_epochs";

std::string format_summary(std::span<const SummaryRow> rows);

struct ExperimentResult {
  std::vector<ArmResult> arms;
  std::vector<SummaryRow> summary;
  PreparedData data;

  const ArmResult& arm(const std::string& name) const;
  bool has_arm(const std::string& name) const;
};

struct RunOptions {
  bool write_artifacts = true;
  std::function<void(const std::string&)> log;
};

// Throws ConfigError for an invalid config and re-throws module errors with
// the arm and round prefixed.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// "a:b:step" (inclusive) or a comma list. Values are formatted with up to 10
// significant digits.
std::vector<std::string> expand_values(const std::string& spec);

// Runs one experiment per value into output_dir/<param>_<value>/ and writes
// output_dir/sweep.csv (`value,` + summary columns).
void run_sweep(const ExperimentConfig& config, const std::string& param,
               const std::vector<std::string>& values, const RunOptions& options = {});

}  // namespace goldfish::exp

#endif  // GOLDFISH_EXPERIMENT_H_
