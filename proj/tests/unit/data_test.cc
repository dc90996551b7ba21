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

#include "goldfish/data.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "goldfish/error.h"
#include "goldfish/metrics.h"
#include "goldfish/unlearn.h"

namespace goldfish::data {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "goldfish_data_test";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::uint64_t> sorted_ids(const LabeledDataset& d) {
  auto ids = d.ids();
  std::sort(ids.begin(), ids.end());
  return ids;
}

TEST(LabeledDataset, RejectsBadColumns) {
  EXPECT_THROW(LabeledDataset::from_columns(2, 2, {0.1, 0.2}, {0, 1}, {0, 1}),
               PreconditionError);
  EXPECT_THROW(LabeledDataset::from_columns(1, 2, {0.1, 0.2}, {0, 2}, {0, 1}),
               PreconditionError);
  EXPECT_THROW(LabeledDataset::from_columns(1, 2, {0.1, 0.2}, {0, 1}, {3, 3}),
               PreconditionError);
  EXPECT_THROW(LabeledDataset::from_columns(1, 2, {0.1, 1.5}, {0, 1}, {0, 1}),
               PreconditionError);
}

TEST(LabeledDataset, SubsetAndMaterialize) {
  const auto d = LabeledDataset::from_columns(1, 3, {0.0, 0.5, 1.0}, {0, 1, 2}, {10, 11, 12});
  const std::vector<std::size_t> pos = {2, 0};
  const auto s = d.subset(pos);
  EXPECT_EQ(s.ids(), (std::vector<std::uint64_t>{12, 10}));
  EXPECT_TRUE(same_examples(s, s.materialize()));
  EXPECT_EQ(s.materialize().features(0)[0], 1.0);
}

TEST(Idx, RoundTrip) {
  const auto d = gen_synthetic_images(30, 10, 3, 12);
  const auto img = scratch("rt-images");
  const auto lab = scratch("rt-labels");
  write_idx(d, img, lab);
  const auto back = load_idx(img, lab, 10);
  ASSERT_EQ(back.size(), 30u);
  EXPECT_EQ(back.dims(), 144u);
  EXPECT_EQ(back.labels(), d.labels());
  for (std::size_t i = 0; i < back.size(); ++i) {
    for (std::size_t k = 0; k < 144; ++k) {
      EXPECT_NEAR(back.features(i)[k], d.features(i)[k], 0.5 / 255.0 + 1e-12);
    }
  }
}

TEST(Idx, WrongLabelMagicIsFormatError) {
  const auto d = gen_synthetic_images(12, 10, 3, 12);
  const auto img = scratch("bad-images");
  const auto lab = scratch("bad-labels");
  write_idx(d, img, lab);
  {
    std::fstream f(lab, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(3);
    f.put(0x03);
  }
  EXPECT_THROW(load_idx(img, lab, 10), FormatError);
}

TEST(Idx, MissingFileIsIoError) {
  EXPECT_THROW(load_idx(scratch("nope-a"), scratch("nope-b"), 10), IoError);
}

TEST(Idx, TruncatedPayloadIsFormatError) {
  const auto d = gen_synthetic_images(12, 10, 3, 12);
  const auto img = scratch("trunc-images");
  const auto lab = scratch("trunc-labels");
  write_idx(d, img, lab);
  fs::resize_file(img, fs::file_size(img) - 10);
  EXPECT_THROW(load_idx(img, lab, 10), FormatError);
}

TEST(Synthetic, DeterministicAndCoversClasses) {
  const auto a = gen_synthetic(100, 4, 2, 9);
  const auto b = gen_synthetic(100, 4, 2, 9);
  EXPECT_TRUE(same_examples(a, b));
  const auto labels = a.labels();
  EXPECT_EQ(std::set<int>(labels.begin(), labels.end()).size(), 2u);
  const auto img = gen_synthetic_images(40, 10, 5);
  const auto il = img.labels();
  EXPECT_EQ(std::set<int>(il.begin(), il.end()).size(), 10u);
}

TEST(Synthetic, ImagesKeepTriggerCornerDark) {
  const auto img = gen_synthetic_images(200, 10, 3);
  for (std::size_t i = 0; i < img.size(); ++i) {
    for (std::size_t r = 25; r < 28; ++r) {
      for (std::size_t c = 25; c < 28; ++c) EXPECT_LT(img.features(i)[r * 28 + c], 0.5);
    }
  }
}

TEST(Synthetic, BlobsAreLinearlySeparable) {
  const auto d = gen_synthetic(600, 8, 3, 21, 4.0);
  nn::NetworkSpec spec{{8, 3}, nn::Activation::kRelu, 1};
  unlearn::ClientState st;
  st.params = nn::init_network(spec);
  st.optimizer = nn::OptimizerState::fresh(st.params.size(), 0.05, 0.9);
  st.data = d;
  unlearn::TrainingBudget budget;
  budget.local_epochs = 40;
  budget.batch_size = 20;
  unlearn::local_training(spec, st, budget, 3);
  EXPECT_GE(eval::accuracy(spec, st.params, d), 95.0);
}

TEST(Holdout, SplitsDisjointly) {
  const auto d = gen_synthetic(50, 4, 2, 1);
  const auto s = split_holdout(d, 10, 2);
  EXPECT_EQ(s.test.size(), 10u);
  EXPECT_EQ(s.train.size(), 40u);
  EXPECT_TRUE(same_examples(merge(s.train, s.test), d));
  EXPECT_THROW(split_holdout(d, 51, 2), PreconditionError);
}

TEST(PartitionIid, EvenSizes) {
  const auto d = gen_synthetic(10, 4, 2, 1);
  const auto p = partition_iid(d, 5, 3);
  for (const auto& c : p.clients) EXPECT_EQ(c.size(), 2u);
  EXPECT_EQ(p.size_variance, 0.0);
}

TEST(PartitionIid, RemainderRule) {
  const auto d = gen_synthetic(11, 4, 2, 1);
  const auto p = partition_iid(d, 5, 3);
  std::vector<std::size_t> sizes;
  for (const auto& c : p.clients) sizes.push_back(c.size());
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{2, 2, 2, 2, 3}));
}

TEST(PartitionIid, UnionIsSource) {
  const auto d = gen_synthetic(97, 4, 3, 1);
  const auto p = partition_iid(d, 4, 8);
  LabeledDataset all = p.clients[0];
  for (std::size_t i = 1; i < p.clients.size(); ++i) all = merge(all, p.clients[i]);
  EXPECT_TRUE(same_examples(all, d));
}

TEST(PartitionHeterogeneous, NonUniformAndReproducible) {
  const auto d = gen_synthetic(10000, 10, 10, 4);
  const auto a = partition_heterogeneous(d, 5, 7);
  const auto b = partition_heterogeneous(d, 5, 7);
  EXPECT_GT(a.size_variance, 0.0);
  EXPECT_EQ(a.size_variance, b.size_variance);
  for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(a.clients[c].ids(), b.clients[c].ids());
}

TEST(PartitionHeterogeneous, InfiniteConcentrationMixesLabels) {
  const auto d = gen_synthetic(5000, 10, 10, 4);
  HeterogeneityOptions opts;
  opts.label_concentration = INFINITY;
  const auto p = partition_heterogeneous(d, 5, 7, opts);
  for (const auto& c : p.clients) {
    if (c.size() < 500) continue;
    std::vector<double> freq(10, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) freq[c.label(i)] += 1.0 / c.size();
    for (double f : freq) EXPECT_NEAR(f, 0.1, 0.05);
  }
}

TEST(Shards, SingleShardIsInput) {
  const auto d = gen_synthetic(9, 4, 2, 1);
  const auto s = shard_split(d, 1, 3);
  ASSERT_EQ(s.num_shards(), 1u);
  EXPECT_TRUE(same_examples(s.shards[0], d));
  EXPECT_FALSE(s.trained());
}

TEST(Shards, EqualThirds) {
  const auto d = gen_synthetic(9, 4, 2, 1);
  const auto s = shard_split(d, 3, 3);
  for (const auto& sh : s.shards) EXPECT_EQ(sh.size(), 3u);
  EXPECT_EQ(s.total_size(), 9u);
  EXPECT_THROW(shard_split(d, 10, 3), PreconditionError);
}

TEST(Backdoor, FloorRuleAndTrigger) {
  const auto d = gen_synthetic_images(1000, 10, 2);
  BackdoorSpec spec;
  spec.poison_rate = 0.02;
  const auto r = inject_backdoor(d, spec, 5);
  ASSERT_EQ(r.poisoned_ids.size(), 20u);
  const std::set<std::uint64_t> hit(r.poisoned_ids.begin(), r.poisoned_ids.end());
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    if (hit.count(r.data.id(i))) {
      EXPECT_EQ(r.data.label(i), 0);
      for (std::size_t y = 25; y < 28; ++y) {
        for (std::size_t x = 25; x < 28; ++x) EXPECT_EQ(r.data.features(i)[y * 28 + x], 1.0);
      }
    } else {
      EXPECT_EQ(r.data.label(i), d.label(i));
      for (std::size_t k = 0; k < 784; ++k) EXPECT_EQ(r.data.features(i)[k], d.features(i)[k]);
    }
  }
}

TEST(Backdoor, NonSquareFeaturesRejected) {
  const auto d = gen_synthetic(100, 5, 2, 1);
  EXPECT_THROW(inject_backdoor(d, BackdoorSpec{}, 1), PreconditionError);
}

TEST(Backdoor, RejectsBadSpec) {
  BackdoorSpec spec;
  spec.poison_rate = 1.5;
  EXPECT_THROW(spec.validate(10), ConfigError);
  spec.poison_rate = 0.1;
  spec.target_label = 10;
  EXPECT_THROW(spec.validate(10), ConfigError);
}

TEST(Backdoor, PoisonIdsIsIdempotent) {
  const auto d = gen_synthetic_images(50, 10, 2);
  BackdoorSpec spec;
  const std::vector<std::uint64_t> ids = {d.id(1), d.id(7)};
  const auto once = poison_ids(d, ids, spec);
  const auto twice = poison_ids(once, ids, spec);
  EXPECT_TRUE(same_examples(once, twice));
}

TEST(Deletion, SplitsAndReunites) {
  const auto d = gen_synthetic(600, 4, 2, 1);
  auto ids = d.ids();
  ids.resize(36);
  std::sort(ids.begin(), ids.end());
  DeletionRequest req{0, ids, 0.06};
  const auto s = apply_deletion(d, req);
  EXPECT_EQ(s.forget.size(), 36u);
  EXPECT_EQ(s.remain.size(), 564u);
  EXPECT_TRUE(same_examples(merge(s.remain, s.forget), d));
  EXPECT_EQ(sorted_ids(s.forget), ids);
}

TEST(Deletion, DeleteEverything) {
  const auto d = gen_synthetic(10, 4, 2, 1);
  auto ids = d.ids();
  std::sort(ids.begin(), ids.end());
  const auto s = apply_deletion(d, DeletionRequest{0, ids, 1.0});
  EXPECT_TRUE(s.remain.empty());
}

TEST(Deletion, EmptyOrUnknownRequestRejected) {
  const auto d = gen_synthetic(10, 4, 2, 1);
  EXPECT_THROW(apply_deletion(d, DeletionRequest{0, {}, 0.0}), PreconditionError);
  EXPECT_THROW(apply_deletion(d, DeletionRequest{0, {999999}, 0.0}), PreconditionError);
}

TEST(Csv, RoundTrip) {
  const auto d = gen_synthetic(20, 3, 2, 1);
  const auto p = scratch("data.csv");
  save_csv(d, p);
  EXPECT_TRUE(same_examples(load_csv(p, 2), d));
}

}  // namespace
}  // namespace goldfish::data
