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

// Datasets, client partitioning, shards, backdoor poisoning and deletion.
//
// A LabeledDataset is a read-only view (a list of row positions) over shared
// immutable storage, so subsets, client partitions and shards never copy
// feature data. Every example carries a stable 64-bit id that survives
// shuffling, partitioning and sharding; deletion requests are expressed in
// ids, never in positions.

#ifndef GOLDFISH_DATA_H_
#define GOLDFISH_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "goldfish/nn.h"

namespace goldfish::data {

struct DatasetStorage {
  std::size_t dims = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;  // row-major, rows x dims
  std::vector<int> labels;
  std::vector<std::uint64_t> ids;
};

class LabeledDataset {
 public:
  LabeledDataset() = default;

  // Builds a dataset over fresh storage. Throws PreconditionError if the
  // columns disagree in length, ids repeat, a label is outside
  // [0, num_classes) or a feature is outside [0, 1].
  static LabeledDataset from_columns(std::size_t dims, std::size_t num_classes,
                                     std::vector<double> features,
                                     std::vector<int> labels,
                                     std::vector<std::uint64_t> ids);

  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  std::size_t dims() const { return storage_ ? storage_->dims : 0; }
  std::size_t num_classes() const { return storage_ ? storage_->num_classes : 0; }

  std::span<const double> features(std::size_t i) const {
    return {storage_->features.data() + rows_[i] * storage_->dims, storage_->dims};
  }
  int label(std::size_t i) const { return storage_->labels[rows_[i]]; }
  std::uint64_t id(std::size_t i) const { return storage_->ids[rows_[i]]; }

  std::vector<std::uint64_t> ids() const;
  std::vector<int> labels() const;

  // View over the given positions of this view.
  LabeledDataset subset(std::span<const std::size_t> positions) const;

  template <typename Pred>
  LabeledDataset filter(Pred keep) const {
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < size(); ++i) {
      if (keep(*this, i)) pos.push_back(i);
    }
    return subset(pos);
  }

  // Copies the selected rows into a contiguous feature matrix.
  nn::Matrix gather(std::span<const std::size_t> positions) const;
  nn::Matrix all_features() const;

  // Fresh storage holding exactly this view's rows, in view order.
  LabeledDataset materialize() const;

 private:
  std::shared_ptr<const DatasetStorage> storage_;
  std::vector<std::size_t> rows_;
};

// Concatenates two views that share a feature shape. Ids must be disjoint.
LabeledDataset merge(const LabeledDataset& a, const LabeledDataset& b);

// True iff both views hold the same (id, label, features) triples,
// irrespective of order.
bool same_examples(const LabeledDataset& a, const LabeledDataset& b);

// ---------------------------------------------------------------------------
// Sources

// Reads an IDX image/label pair (magic 0x00000803 / 0x00000801, big-endian).
// Pixels are scaled by 1/255; ids are 0..n-1.
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path,
                        std::size_t num_classes = 10);

// Writes a square-image dataset as an IDX pair (pixels rounded to bytes).
void write_idx(const LabeledDataset& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

// num_classes Gaussian blobs with unit covariance whose means sit on a
// simplex with pairwise distance `separation`, mapped affinely into [0,1]
// and clipped. Requires n >= num_classes and dims >= num_classes.
LabeledDataset gen_synthetic(std::size_t n, std::size_t dims, std::size_t num_classes,
                             std::uint64_t seed, double separation = 4.0);

// Stroke-rendered side x side grayscale "glyphs", one stroke template per
// class (fixed by template_seed), with per-sample jitter and noise. The outer
// border stays dark like handwritten-digit scans, which is what a corner
// backdoor trigger relies on.
LabeledDataset gen_synthetic_images(std::size_t n, std::size_t num_classes,
                                    std::uint64_t seed, std::size_t side = 28,
                                    std::uint64_t template_seed = 7);

// CSV with header `id,label,f0..f{d-1}`.
void save_csv(const LabeledDataset& data, const std::filesystem::path& path);
LabeledDataset load_csv(const std::filesystem::path& path, std::size_t num_classes);

struct HoldoutSplit {
  LabeledDataset train;
  LabeledDataset test;
};
HoldoutSplit split_holdout(const LabeledDataset& data, std::size_t test_size,
                           std::uint64_t seed);

// ---------------------------------------------------------------------------
// Partitioning

struct ClientPartition {
  std::vector<LabeledDataset> clients;
  double size_variance = 0.0;  // population variance of client sizes
};

ClientPartition partition_iid(const LabeledDataset& data, std::size_t num_clients,
                              std::uint64_t seed);

struct HeterogeneityOptions {
  double size_exponent = 1.5;      // Pareto shape of the client-size draw
  double label_concentration = 0.5;  // symmetric Dirichlet; +inf = pooled mix
};

ClientPartition partition_heterogeneous(const LabeledDataset& data,
                                        std::size_t num_clients, std::uint64_t seed,
                                        const HeterogeneityOptions& options = {});

struct ShardSet {
  std::vector<LabeledDataset> shards;
  // One entry per shard once trained; empty before training.
  std::vector<nn::ParameterVector> shard_params;

  std::size_t num_shards() const { return shards.size(); }
  std::size_t total_size() const;
  bool trained() const { return !shards.empty() && shard_params.size() == shards.size(); }
};

ShardSet shard_split(const LabeledDataset& client_data, std::size_t num_shards,
                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// Backdoor poisoning

struct BackdoorSpec {
  std::size_t trigger_size = 3;  // square block in the bottom-right corner
  double trigger_value = 1.0;
  int target_label = 0;
  double poison_rate = 0.02;

  void validate(std::size_t num_classes) const;
};

struct PoisonResult {
  LabeledDataset data;
  std::vector<std::uint64_t> poisoned_ids;  // sorted
};

// Stamps the trigger on floor(poison_rate * n) rows whose label differs from
// the target and relabels them to the target.
PoisonResult inject_backdoor(const LabeledDataset& data, const BackdoorSpec& spec,
                             std::uint64_t seed);

// Stamps and relabels exactly the given ids. Idempotent.
LabeledDataset poison_ids(const LabeledDataset& data,
                          std::span<const std::uint64_t> ids,
                          const BackdoorSpec& spec);

// Stamps the trigger on every row, leaving labels untouched.
LabeledDataset apply_trigger(const LabeledDataset& data, const BackdoorSpec& spec);

// ---------------------------------------------------------------------------
// Deletion

struct DeletionRequest {
  int client_id = 0;
  std::vector<std::uint64_t> deleted_ids;  // sorted, unique
  double deletion_rate = 0.0;              // bookkeeping only
};

struct DeletionSplit {
  LabeledDataset forget;  // D_f
  LabeledDataset remain;  // D_r
};

// Throws PreconditionError on an empty request or an id the dataset lacks.
DeletionSplit apply_deletion(const LabeledDataset& client_data,
                             const DeletionRequest& request);

}  // namespace goldfish::data

#endif  // GOLDFISH_DATA_H_
