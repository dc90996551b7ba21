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

// Experiment configuration: a flat `key = value` file with `#` comments.
// Unknown keys are rejected, `dataset` is mandatory and every other key has
// a default. serialize_config writes every key in a fixed order, so
// serialize(parse(f)) is a canonical form.

#ifndef GOLDFISH_CONFIG_H_
#define GOLDFISH_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "goldfish/loss.h"
#include "goldfish/nn.h"
#include "goldfish/server.h"

namespace goldfish::exp {

enum class DatasetSource { kSynthetic, kIdx };
enum class SyntheticKind { kImages, kBlobs };
enum class PartitionKind { kIid, kHeterogeneous };
// poisoned: D_f is the backdoored rows; random: a uniform sample of the
// client's rows; ids: an explicit id list.
enum class DeletionMode { kPoisoned, kRandom, kIds };
enum class CheckpointPolicy { kAll, kFinal, kNone };

struct ExperimentConfig {
  DatasetSource dataset = DatasetSource::kSynthetic;
  std::string train_images, train_labels, test_images, test_labels;
  std::size_t train_limit = 0;  // 0 keeps every example
  std::size_t test_limit = 0;

  SyntheticKind synthetic_kind = SyntheticKind::kImages;
  std::size_t train_size = 2000;
  std::size_t test_size = 1000;
  std::size_t dims = 64;  // blobs only
  std::size_t classes = 10;
  double separation = 4.0;
  std::size_t image_side = 28;

  std::vector<std::size_t> hidden = {128};
  nn::Activation activation = nn::Activation::kRelu;

  std::size_t clients = 3;
  PartitionKind partition = PartitionKind::kIid;
  double dirichlet = 0.5;
  double size_exponent = 1.5;
  std::size_t shards = 1;

  std::size_t rounds = 10;
  std::size_t deletion_round = 5;  // rounds 1..d train normally, d + 1 deletes
  std::size_t local_epochs = 5;
  std::size_t batch_size = 100;
  double learning_rate = 0.001;
  double momentum = 0.9;
  loss::LossWeights weights;

  DeletionMode deletion = DeletionMode::kPoisoned;
  double deletion_rate = 0.02;
  std::vector<std::uint64_t> deletion_ids;
  std::size_t deletion_client = 0;
  double poison_rate = 0.02;  // random / ids modes; poisoned mode uses deletion_rate

  bool backdoor = true;
  int target_label = 0;
  std::size_t trigger_size = 3;

  fed::AggregationMode aggregation = fed::AggregationMode::kMseAdaptive;
  std::vector<std::string> baselines = {"retrain", "fedavg"};
  std::uint64_t seed = 1;
  std::string output_dir = "goldfish_out";
  std::optional<double> early_stop_delta = 0.05;
  bool normalize_checkpoint = false;
  fed::ReinitScope reinit_scope = fed::ReinitScope::kAll;
  bool timing = false;
  CheckpointPolicy checkpoints = CheckpointPolicy::kAll;

  // Throws ConfigError naming the offending key.
  void validate() const;

  std::size_t input_dim() const;
  nn::NetworkSpec network() const;
  double effective_poison_rate() const;
  bool has_baseline(const std::string& name) const;
};

ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin = "<config>");

// Sets one key from its textual value (the same syntax as the file). Call
// validate() once all overrides are applied.
void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value);
// "key=value" form.
void apply_override(ExperimentConfig& config, const std::string& assignment);

std::string serialize_config(const ExperimentConfig& config);

std::vector<std::string> config_keys();

}  // namespace goldfish::exp

#endif  // GOLDFISH_CONFIG_H_
