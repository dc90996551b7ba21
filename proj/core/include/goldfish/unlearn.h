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

// Client-side training: plain local training, distillation-based unlearning,
// excess-empirical-risk early termination and the shard checkpoint algebra.

#ifndef GOLDFISH_UNLEARN_H_
#define GOLDFISH_UNLEARN_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "goldfish/data.h"
#include "goldfish/loss.h"
#include "goldfish/nn.h"

namespace goldfish::unlearn {

struct TrainingBudget {
  std::size_t local_epochs = 5;
  std::size_t batch_size = 100;
  // Excess-empirical-risk threshold. Unset: always run every epoch.
  std::optional<double> early_stop_delta;
  std::size_t max_rounds = 10;

  void validate() const;
};

struct EpochLossLog {
  std::vector<double> epoch_losses;  // mean training loss of each finished epoch
  std::optional<double> reference_loss;
};

// | mean(epoch_losses) - reference_loss |. Throws PreconditionError on an empty
// log or a missing reference.
double excess_empirical_risk(const EpochLossLog& log);

// Inclusive: true iff excess_empirical_risk(log) <= delta.
bool should_terminate(const EpochLossLog& log, double delta);

struct ClientState {
  int client_id = 0;
  nn::ParameterVector params;
  std::optional<data::ShardSet> shards;
  // Learning rate and momentum; the buffer is reset at the start of every
  // training call and holds the last call's final momentum afterwards.
  nn::OptimizerState optimizer;
  data::LabeledDataset data;    // D_c, or D_r once a deletion has been applied
  data::LabeledDataset forget;  // D_f while a deletion is being processed
};

struct TrainingReport {
  EpochLossLog log;
  double epochs = 0.0;  // completed passes; size-weighted across shards
  bool stopped_early = false;
  bool skipped = false;  // nothing left to train on
  loss::LossComponents last_epoch;  // mean components over the final epoch
  double temperature = 1.0;
  std::vector<std::uint64_t> trained_ids;  // remain-side ids fed to SGD, sorted
  std::vector<std::uint64_t> forget_ids;   // ids used by the forget-side terms, sorted
};

// n epochs of shuffled mini-batch SGD with cross-entropy on state.data,
// starting from state.params. Sharded clients train every shard from
// state.params and recombine. `reference` is the previous global model; it
// is required when the budget enables early termination.
TrainingReport local_training(const nn::NetworkSpec& spec, ClientState& state,
                              const TrainingBudget& budget, std::uint64_t seed,
                              const nn::ParameterVector* reference = nullptr);

// Distills the frozen teacher into the student state.params on state.data
// (D_r) with the composite loss, using state.forget (D_f) only for the
// forget-side terms. The teacher also serves as the early-termination
// reference. An empty D_r is flagged (report.skipped) and leaves params
// untouched. Sharded clients must not carry a pending forget set here; use
// retrain_affected_shards instead.
TrainingReport goldfish_unlearn(const nn::NetworkSpec& spec, ClientState& state,
                                const nn::ParameterVector& teacher,
                                const loss::LossWeights& weights,
                                const TrainingBudget& budget, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Shard algebra. |D| is always the current total size of the shard set.

// sum_i |D_i| / |D| * w_i
nn::ParameterVector recombine_shards(const data::ShardSet& shards);

// sum_{j not excluded} |D_j| / |D| * w_j. The weights deliberately do not
// sum to one unless `normalize` is set.
nn::ParameterVector checkpoint_without_shards(const data::ShardSet& shards,
                                              std::span<const std::size_t> excluded,
                                              bool normalize = false);
nn::ParameterVector checkpoint_without_shard(const data::ShardSet& shards,
                                             std::size_t excluded, bool normalize = false);

// |D| / |D_i| * (full - sum_{j != i} |D_j| / |D| * w_j): the shard-i params
// for which recombine_shards reproduces `retrained_full`.
nn::ParameterVector recover_shard_params(const data::ShardSet& shards,
                                         const nn::ParameterVector& retrained_full,
                                         std::size_t shard);

struct ShardRetrainReport {
  std::vector<std::size_t> dropped;    // fully deleted shards (pre-deletion indices)
  std::vector<std::size_t> retrained;  // partially deleted shards (pre-deletion indices)
  std::vector<TrainingReport> reports;  // one per retrained shard
};

// Removes the requested ids from a sharded client: fully deleted shards are
// dropped, partially affected shards are retrained with goldfish_unlearn
// starting from the checkpoint of the unaffected shards, their params are
// recovered by inverting the recombination, and state.params becomes the
// recombination of the new shard set. Unaffected shard params are not
// touched. Affected shards train concurrently with per-shard seeds.
ShardRetrainReport retrain_affected_shards(const nn::NetworkSpec& spec, ClientState& state,
                                           const data::DeletionRequest& deletion,
                                           const nn::ParameterVector& teacher,
                                           const loss::LossWeights& weights,
                                           const TrainingBudget& budget,
                                           std::uint64_t seed,
                                           bool normalize_checkpoint = false);

}  // namespace goldfish::unlearn

#endif  // GOLDFISH_UNLEARN_H_
