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

#include "goldfish/experiment.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "goldfish/checkpoint.h"
#include "goldfish/error.h"

namespace goldfish::exp {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

ExperimentConfig small_config(const std::string& out) {
  auto c = parse_config_text(
      "dataset = synthetic\n"
      "image_side = 12\n"
      "train_size = 400\n"
      "test_size = 150\n"
      "classes = 4\n"
      "hidden = 16\n"
      "clients = 2\n"
      "rounds = 4\n"
      "deletion_round = 2\n"
      "local_epochs = 3\n"
      "batch_size = 25\n"
      "learning_rate = 0.01\n"
      "deletion_rate = 0.05\n"
      "seed = 5\n");
  c.output_dir = (fs::temp_directory_path() / out).string();
  fs::remove_all(c.output_dir);
  return c;
}

TEST(Experiment, ArmsAndRecords) {
  const auto c = small_config("goldfish_exp_a");
  const auto r = run_experiment(c);
  for (const char* name : {"original", "retrain", "goldfish", "fedavg"}) {
    ASSERT_TRUE(r.has_arm(name)) << name;
    const auto& a = r.arm(name);
    EXPECT_EQ(a.records.size(), c.rounds);
    EXPECT_EQ(a.round_params.size(), c.rounds);
    for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i].round, i + 1);
    EXPECT_EQ(a.audit_violations, 0u) << name;
  }
  EXPECT_THROW(r.arm("oracle"), PreconditionError);
  EXPECT_EQ(r.summary.size(), 4u);
  EXPECT_EQ(r.data.deletion.deleted_ids, r.data.poisoned_ids);
  EXPECT_FALSE(r.data.deletion.deleted_ids.empty());

  // Forked arms share the pre-deletion prefix with the original run.
  for (std::size_t i = 0; i < c.deletion_round; ++i) {
    EXPECT_EQ(r.arm("goldfish").round_params[i], r.arm("original").round_params[i]);
    EXPECT_EQ(r.arm("fedavg").round_params[i], r.arm("original").round_params[i]);
  }
  EXPECT_NE(r.arm("goldfish").final_params(), r.arm("original").final_params());
  EXPECT_FALSE(r.arm("goldfish").deletion_client_params.values.empty());
  EXPECT_GT(r.arm("goldfish").local_epochs, 0.0);
}

TEST(Experiment, ArtifactsAreByteIdentical) {
  auto a = small_config("goldfish_exp_b1");
  auto b = small_config("goldfish_exp_b2");
  run_experiment(a);
  run_experiment(b);
  for (const char* f : {"summary.csv", "original.csv", "retrain.csv", "goldfish.csv",
                        "fedavg.csv", "config.cfg"}) {
    const auto x = slurp(fs::path(a.output_dir) / f);
    EXPECT_FALSE(x.empty()) << f;
    if (std::string(f) == "config.cfg") continue;  // output_dir differs
    EXPECT_EQ(x, slurp(fs::path(b.output_dir) / f)) << f;
  }
  EXPECT_EQ(lines(slurp(fs::path(a.output_dir) / "goldfish.csv")), a.rounds + 1);
  EXPECT_EQ(lines(slurp(fs::path(a.output_dir) / "summary.csv")), 5u);

  const auto ck = fs::path(a.output_dir) / "checkpoints" / "goldfish" / "round_004.gfck";
  ASSERT_TRUE(fs::exists(ck));
  const auto again = parse_config(fs::path(a.output_dir) / "config.cfg");
  EXPECT_EQ(load_checkpoint(ck, again.network()),
            run_experiment(again, RunOptions{false, {}}).arm("goldfish").final_params());
}

TEST(Experiment, BaselinesAreOptional) {
  auto c = small_config("goldfish_exp_c");
  apply_override(c, "baselines", "none");
  apply_override(c, "checkpoints", "none");
  const auto r = run_experiment(c);
  EXPECT_EQ(r.arms.size(), 2u);
  EXPECT_FALSE(r.has_arm("retrain"));
  EXPECT_FALSE(fs::exists(fs::path(c.output_dir) / "checkpoints"));
}

TEST(Experiment, InvalidConfigRejected) {
  auto c = small_config("goldfish_exp_d");
  c.deletion_round = c.rounds;
  EXPECT_THROW(run_experiment(c), ConfigError);
}

TEST(ExpandValues, RangesAndLists) {
  EXPECT_EQ(expand_values("0.1:0.3:0.1"), (std::vector<std::string>{"0.1", "0.2", "0.3"}));
  EXPECT_EQ(expand_values("1:4:1"), (std::vector<std::string>{"1", "2", "3", "4"}));
  EXPECT_EQ(expand_values("a,b,,c"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_THROW(expand_values(""), ConfigError);
  EXPECT_THROW(expand_values("1:2"), ConfigError);
  EXPECT_THROW(expand_values("2:1:1"), ConfigError);
  EXPECT_THROW(expand_values("1:2:0"), ConfigError);
}

TEST(Sweep, OneRowPerValueAndArm) {
  auto c = small_config("goldfish_exp_sweep");
  apply_override(c, "baselines", "none");
  apply_override(c, "checkpoints", "none");
  run_sweep(c, "mu_c", {"0", "0.5"}, RunOptions{true, {}});
  const auto csv = slurp(fs::path(c.output_dir) / "sweep.csv");
  EXPECT_EQ(lines(csv), 1u + 2u * 2u);
  EXPECT_NE(csv.find("\n0.5,goldfish,"), std::string::npos);
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "mu_c_0" / "summary.csv"));
}

}  // namespace
}  // namespace goldfish::exp
