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

#include "goldfish/loss.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "goldfish/error.h"
#include "support/oracles.h"

namespace goldfish::loss {
namespace {

nn::Matrix rows(std::initializer_list<std::vector<double>> r) {
  const std::size_t cols = r.begin()->size();
  nn::Matrix m(r.size(), cols);
  std::size_t i = 0;
  for (const auto& row : r) {
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = row[j];
    ++i;
  }
  return m;
}

// Logits whose softmax is (1 - eps) on `hot` and eps spread elsewhere.
constexpr double kBig = 60.0;

TEST(HardLoss, EmptyForgetIsRemainOnly) {
  const auto lr = rows({{0.3, -0.2, 1.0}});
  const std::vector<int> yr = {2};
  const auto h = hard_loss(lr, yr, nn::Matrix(0, 3), {}, true);
  EXPECT_EQ(h.forget, 0.0);
  EXPECT_EQ(h.total, h.remain);
}

TEST(HardLoss, ConfidentPredictionsGiveZero) {
  const auto lr = rows({{kBig, 0.0}});
  const auto lf = rows({{0.0, kBig}});
  const std::vector<int> yr = {0};
  const std::vector<int> yf = {1};
  const auto h = hard_loss(lr, yr, lf, yf, true);
  EXPECT_NEAR(h.remain, 0.0, 1e-20);
  EXPECT_NEAR(h.forget, 0.0, 1e-20);
  EXPECT_NEAR(h.total, 0.0, 1e-20);
}

TEST(HardLoss, HalfProbabilityClampsAtLn2) {
  const auto l = rows({{0.0, 0.0}});
  const std::vector<int> y = {0};
  const auto h = hard_loss(l, y, l, y, true);
  EXPECT_NEAR(h.forget, std::log(2.0), 1e-15);
  EXPECT_NEAR(h.total, 0.0, 1e-15);
}

TEST(HardLoss, ClampBoundsForgetTerm) {
  const auto lf = rows({{-kBig, kBig}});
  const std::vector<int> yf = {0};
  const auto lr = rows({{0.0, 0.0}});
  const std::vector<int> yr = {0};
  const auto clamped = hard_loss(lr, yr, lf, yf, true);
  const auto raw = hard_loss(lr, yr, lf, yf, false);
  EXPECT_NEAR(clamped.forget, std::log(2.0), 1e-15);
  EXPECT_GT(raw.forget, 100.0);
  for (double g : clamped.forget_grad.data()) EXPECT_EQ(g, 0.0);
}

TEST(Confusion, UniformIsZero) {
  const auto c = confusion_loss(rows({{1.0, 1.0, 1.0, 1.0}}));
  EXPECT_NEAR(c.value, 0.0, 1e-15);
}

TEST(Confusion, OneHotValues) {
  EXPECT_NEAR(confusion_loss(rows({{kBig, 0.0}})).value, 0.5, 1e-12);
  EXPECT_NEAR(confusion_loss(rows({{kBig, 0.0, 0.0, 0.0}})).value, 0.4330127018922193, 1e-12);
}

TEST(Confusion, EmptyBatchRejected) {
  EXPECT_THROW(confusion_loss(nn::Matrix(0, 3)), DomainError);
}

TEST(Confusion, DecreasesTowardUniform) {
  double prev = INFINITY;
  for (double s = 5.0; s >= 0.0; s -= 0.5) {
    const double v = confusion_loss(rows({{s, 0.0, 0.0}})).value;
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(SoftTargets, EqualLogitsAreUniform) {
  const auto t = soft_targets(rows({{2.0, 2.0, 2.0, 2.0}}), 3.0);
  for (double p : t.probabilities.data()) EXPECT_NEAR(p, 0.25, 1e-15);
}

TEST(SoftTargets, HighTemperatureFlattens) {
  const auto t = soft_targets(rows({{0.0, 1.0, 0.3, 0.9}}), 1000.0);
  double lo = 1.0, hi = 0.0;
  for (double p : t.probabilities.data()) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  EXPECT_LT(hi - lo, 0.01);
}

TEST(SoftTargets, UnitTemperatureIsSoftmax) {
  const std::vector<double> z = {0.2, -1.0, 2.0};
  const auto t = soft_targets(rows({z}), 1.0);
  const auto want = oracle::softmax(z);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(t.probabilities(0, i), want[i], 1e-15);
}

TEST(Distillation, UniformTargetsGiveLn10) {
  nn::Matrix z(2, 10, 0.5);
  const auto d = distillation_loss(soft_targets(z, 3.0), z, 3.0);
  EXPECT_NEAR(d.value, std::log(10.0), 1e-12);
}

TEST(Distillation, MatchingOneHotIsZero) {
  const auto z = rows({{kBig * 3, 0.0, 0.0}});
  const auto d = distillation_loss(soft_targets(z, 1.0), z, 1.0);
  EXPECT_NEAR(d.value, 0.0, 1e-12);
}

TEST(Distillation, GibbsInequality) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    nn::Matrix teacher(3, 5), student(3, 5);
    for (double& v : teacher.data()) v = g(rng);
    for (double& v : student.data()) v = g(rng);
    const double T = 1.0 + trial % 4;
    const auto targets = soft_targets(teacher, T);
    double entropy = 0.0;
    for (double p : targets.probabilities.data()) entropy -= p * std::log(p);
    entropy /= 3.0;
    EXPECT_GE(distillation_loss(targets, student, T).value - entropy, -1e-12);
    EXPECT_NEAR(distillation_loss(targets, teacher, T).value, entropy, 1e-9);
  }
}

TEST(Distillation, ShapeMismatchRejected) {
  EXPECT_THROW(distillation_loss(soft_targets(nn::Matrix(2, 3), 1.0), nn::Matrix(2, 4), 1.0),
               ShapeError);
}

TEST(AdaptiveTemperature, Values) {
  const double a = 0.36787944117144233;
  EXPECT_NEAR(adaptive_temperature(3.0, a, 100, 0), 3.0, 1e-15);
  EXPECT_NEAR(adaptive_temperature(3.0, a, 50, 50), 1.8195919791379005, 1e-12);
  EXPECT_NEAR(adaptive_temperature(3.0, a, 94, 6), 2.825293600752746, 1e-12);
}

TEST(AdaptiveTemperature, MonotoneInRemainShare) {
  double prev = 0.0;
  for (std::size_t r = 0; r <= 100; r += 5) {
    const double t = adaptive_temperature(3.0, 0.5, r, 100 - r);
    EXPECT_GT(t, prev);
    prev = t;
  }
}

TEST(ResolveTemperature, FlooredAtOne) {
  LossWeights w;
  w.T0 = 0.5;
  EXPECT_EQ(resolve_temperature(w, 10, 0), 1.0);
  w.adaptive_temp = false;
  w.T0 = 4.0;
  EXPECT_EQ(resolve_temperature(w, 10, 90), 4.0);
}

TEST(TotalLoss, ReducesToCrossEntropy) {
  LossWeights w;
  w.mu_c = 0.0;
  w.mu_d = 0.0;
  const auto lr = rows({{0.3, -0.2, 1.0}, {1.0, 0.0, 0.0}});
  const std::vector<int> yr = {2, 1};
  const auto t = total_loss(lr, lr, yr, nn::Matrix(0, 3), {}, w, {2, 0});
  const auto ce = mean_sample_loss(lr, yr);
  EXPECT_EQ(t.parts.total, ce.value);
  EXPECT_EQ(t.remain_grad.data()[0], ce.grad.data()[0]);
}

TEST(TotalLoss, ConfidentTeacherUniformForget) {
  // L_r = 0, L_f clamped to ln 3, L_c = 0, L_d = 0 -> L = -ln 3.
  const auto lr = rows({{kBig * 4, 0.0, 0.0}});
  const std::vector<int> yr = {0};
  const auto lf = rows({{0.0, 0.0, 0.0}});
  const std::vector<int> yf = {1};
  const auto t = total_loss(lr, lr, yr, lf, yf, LossWeights{}, {10, 1});
  EXPECT_NEAR(t.parts.total, -std::log(3.0), 1e-9);
}

TEST(TotalLoss, BoundedBelowWithClamp) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 30.0);
  for (int trial = 0; trial < 100; ++trial) {
    nn::Matrix teacher(2, 4), lr(2, 4), lf(3, 4);
    for (double& v : teacher.data()) v = g(rng);
    for (double& v : lr.data()) v = g(rng);
    for (double& v : lf.data()) v = g(rng);
    const std::vector<int> yr = {0, 3};
    const std::vector<int> yf = {1, 2, 2};
    const auto t = total_loss(teacher, lr, yr, lf, yf, LossWeights{}, {20, 3});
    EXPECT_GE(t.parts.total, -std::log(4.0) - 1e-12);
  }
}

TEST(TotalLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    nn::Matrix teacher(3, 4), lr(3, 4), lf(2, 4);
    for (double& v : teacher.data()) v = g(rng);
    for (double& v : lr.data()) v = g(rng);
    for (double& v : lf.data()) v = g(rng);
    const std::vector<int> yr = {0, 1, 3};
    const std::vector<int> yf = {2, 0};
    LossWeights w;
    w.forget_clamp = false;
    const auto t = total_loss(teacher, lr, yr, lf, yf, w, {30, 2});
    std::vector<double> x(lr.data().begin(), lr.data().end());
    x.insert(x.end(), lf.data().begin(), lf.data().end());
    auto f = [&](const std::vector<double>& v) {
      nn::Matrix a(3, 4), b(2, 4);
      std::copy(v.begin(), v.begin() + 12, a.data().begin());
      std::copy(v.begin() + 12, v.end(), b.data().begin());
      return total_loss(teacher, a, yr, b, yf, w, {30, 2}).parts.total;
    };
    std::vector<double> analytic(t.remain_grad.data().begin(), t.remain_grad.data().end());
    analytic.insert(analytic.end(), t.forget_grad.data().begin(), t.forget_grad.data().end());
    EXPECT_LT(oracle::relative_error(oracle::numeric_gradient(f, x), analytic), 1e-4);
  }
}

TEST(LossWeights, Validation) {
  LossWeights w;
  w.mu_c = -1.0;
  EXPECT_THROW(w.validate(), ConfigError);
  w = LossWeights{};
  w.T0 = 0.0;
  EXPECT_THROW(w.validate(), ConfigError);
}

}  // namespace
}  // namespace goldfish::loss
