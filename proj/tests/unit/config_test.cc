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

#include "goldfish/config.h"

#include <gtest/gtest.h>

#include <filesystem>

#include "goldfish/error.h"

namespace goldfish::exp {
namespace {

TEST(Config, Defaults) {
  const auto c = parse_config_text("dataset = synthetic\n");
  EXPECT_EQ(c.batch_size, 100u);
  EXPECT_EQ(c.learning_rate, 0.001);
  EXPECT_EQ(c.momentum, 0.9);
  EXPECT_EQ(c.weights.T0, 3.0);
  EXPECT_EQ(c.weights.mu_c, 0.25);
  EXPECT_EQ(c.weights.mu_d, 1.0);
  EXPECT_EQ(c.shards, 1u);
  ASSERT_TRUE(c.early_stop_delta.has_value());
  EXPECT_EQ(*c.early_stop_delta, 0.05);
  EXPECT_EQ(c.network().layer_sizes, (std::vector<std::size_t>{784, 128, 10}));
}

TEST(Config, DatasetIsMandatory) {
  EXPECT_THROW(parse_config_text("rounds = 4\n"), ConfigError);
}

TEST(Config, CommentsAndBlankLines) {
  const auto c = parse_config_text("# header\n\ndataset = synthetic  # trailing\n  rounds=7\n");
  EXPECT_EQ(c.rounds, 7u);
}

TEST(Config, Rejections) {
  const std::string base = "dataset = synthetic\n";
  EXPECT_THROW(parse_config_text(base + "shards = 0\n"), ConfigError);
  EXPECT_THROW(parse_config_text(base + "rounds = 0\n"), ConfigError);
  EXPECT_THROW(parse_config_text(base + "deletion_round = 10\n"), ConfigError);
  EXPECT_THROW(parse_config_text(base + "colour = red\n"), ConfigError);
  EXPECT_THROW(parse_config_text(base + "rounds\n"), ConfigError);
  EXPECT_THROW(parse_config_text(base + "momentum = 1.0\n"), ConfigError);
  EXPECT_THROW(parse_config_text(base + "learning_rate = abc\n"), ConfigError);
  EXPECT_THROW(parse_config_text(base + "baselines = oracle\n"), ConfigError);
  EXPECT_THROW(parse_config_text(base + "deletion_client = 3\n"), ConfigError);
  EXPECT_THROW(parse_config_text(base + "deletion = ids\n"), ConfigError);
  EXPECT_THROW(parse_config_text(base + "backdoor = false\n"), ConfigError);
  EXPECT_THROW(parse_config_text(base + "synthetic_kind = blobs\ndims = 9\n"), ConfigError);
  EXPECT_THROW(parse_config_text(base + "mu_d = -1\n"), ConfigError);
}

TEST(Config, ErrorNamesTheLine) {
  try {
    parse_config_text("dataset = synthetic\nbogus = 1\n", "x.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.cfg:2"), std::string::npos);
  }
}

TEST(Config, MissingFileIsIoError) {
  EXPECT_THROW(parse_config("/nonexistent/goldfish.cfg"), IoError);
}

TEST(Config, CanonicalRoundTrip) {
  const auto c = parse_config_text(
      "dataset = synthetic\nhidden = 64,32\nearly_stop_delta = off\nlearning_rate = 0.0125\n"
      "baselines = fedavg\nseed = 77\n");
  const auto text = serialize_config(c);
  const auto again = parse_config_text(text);
  EXPECT_EQ(serialize_config(again), text);
  EXPECT_FALSE(again.early_stop_delta.has_value());
  EXPECT_EQ(again.hidden, (std::vector<std::size_t>{64, 32}));
  EXPECT_EQ(again.learning_rate, 0.0125);
  EXPECT_EQ(again.seed, 77u);
}

TEST(Config, EveryKeySerialized) {
  const auto text = serialize_config(parse_config_text("dataset = synthetic\n"));
  for (const auto& k : config_keys()) {
    EXPECT_NE(text.find(k + " = "), std::string::npos) << k;
  }
}

TEST(Config, ShippedConfigsParse) {
  const std::filesystem::path dir = std::filesystem::path(GOLDFISH_SOURCE_DIR) / "configs";
  std::size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() != ".cfg") continue;
    if (e.path().stem().string().find("mnist") != std::string::npos) continue;
    EXPECT_NO_THROW(parse_config(e.path())) << e.path();
    ++n;
  }
  EXPECT_GT(n, 0u);
}

TEST(Overrides, LastWriteWins) {
  auto c = parse_config_text("dataset = synthetic\n");
  apply_override(c, "rounds=12");
  apply_override(c, " rounds = 14 ");
  apply_override(c, "deletion_round", "13");
  EXPECT_EQ(c.rounds, 14u);
  EXPECT_NO_THROW(c.validate());
  EXPECT_THROW(apply_override(c, "rounds"), ConfigError);
  EXPECT_THROW(apply_override(c, "nope", "1"), ConfigError);
}

TEST(Overrides, ValidatedOnlyWhenAsked) {
  auto c = parse_config_text("dataset = synthetic\n");
  apply_override(c, "deletion_round", "20");
  EXPECT_THROW(c.validate(), ConfigError);
  apply_override(c, "rounds", "25");
  EXPECT_NO_THROW(c.validate());
}

}  // namespace
}  // namespace goldfish::exp
