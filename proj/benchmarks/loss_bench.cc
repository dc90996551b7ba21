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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "goldfish/loss.h"

namespace {

using goldfish::nn::Matrix;

Matrix logits(std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 2.0);
  Matrix m(rows, 10);
  for (double& v : m.data()) v = g(rng);
  return m;
}

void BM_TotalLoss(benchmark::State& state) {
  const auto nf = static_cast<std::size_t>(state.range(0));
  const auto teacher = logits(100, 1);
  const auto lr = logits(100, 2);
  const auto lf = logits(nf, 3);
  std::vector<int> yr(100), yf(nf);
  for (std::size_t i = 0; i < yr.size(); ++i) yr[i] = static_cast<int>(i % 10);
  for (std::size_t i = 0; i < yf.size(); ++i) yf[i] = static_cast<int>(i % 10);
  const goldfish::loss::LossWeights w;
  for (auto _ : state) {
    benchmark::DoNotOptimize(goldfish::loss::total_loss(teacher, lr, yr, lf, yf, w, {600, 40}));
  }
}
BENCHMARK(BM_TotalLoss)->Arg(0)->Arg(10)->Arg(100);

}  // namespace
