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

#include "goldfish/server.h"

namespace {

std::vector<goldfish::fed::ClientReport> reports(std::size_t clients, std::size_t params) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  std::vector<goldfish::fed::ClientReport> out(clients);
  for (std::size_t c = 0; c < clients; ++c) {
    out[c].params.values.resize(params);
    for (double& v : out[c].params.values) v = u(rng);
    out[c].dataset_size = 500 + 50 * c;
    out[c].mse = 0.01 + 0.002 * static_cast<double>(c);
  }
  return out;
}

// 784-128-10 has 101770 parameters.
void BM_FedAvg(benchmark::State& state) {
  const auto r = reports(static_cast<std::size_t>(state.range(0)), 101770);
  for (auto _ : state) benchmark::DoNotOptimize(goldfish::fed::fedavg_aggregate(r));
}
BENCHMARK(BM_FedAvg)->Arg(3)->Arg(10);

void BM_AdaptiveAggregate(benchmark::State& state) {
  const auto r = reports(static_cast<std::size_t>(state.range(0)), 101770);
  for (auto _ : state) benchmark::DoNotOptimize(goldfish::fed::adaptive_aggregate(r));
}
BENCHMARK(BM_AdaptiveAggregate)->Arg(3)->Arg(10);

}  // namespace
