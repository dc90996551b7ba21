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

#include "goldfish/nn.h"

namespace {

using goldfish::nn::Activation;
using goldfish::nn::Matrix;
using goldfish::nn::NetworkSpec;

Matrix batch(std::size_t rows, std::size_t cols) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = u(rng);
  return m;
}

void BM_Forward(benchmark::State& state) {
  const NetworkSpec spec{{784, static_cast<std::size_t>(state.range(0)), 10}, Activation::kRelu, 1};
  const auto p = goldfish::nn::init_network(spec);
  const auto x = batch(100, 784);
  for (auto _ : state) benchmark::DoNotOptimize(goldfish::nn::forward(spec, p, x));
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(128)->Arg(256);

void BM_ForwardBackward(benchmark::State& state) {
  const NetworkSpec spec{{784, static_cast<std::size_t>(state.range(0)), 10}, Activation::kRelu, 1};
  auto p = goldfish::nn::init_network(spec);
  auto opt = goldfish::nn::OptimizerState::fresh(p.size(), 0.001, 0.9);
  const auto x = batch(100, 784);
  for (auto _ : state) {
    const auto t = goldfish::nn::forward(spec, p, x);
    const auto g = goldfish::nn::backward(spec, p, t, t.logits());
    goldfish::nn::sgd_step(p, g, opt);
  }
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(128)->Arg(256);

void BM_SoftmaxRows(benchmark::State& state) {
  const auto z = batch(100, 10);
  for (auto _ : state) benchmark::DoNotOptimize(goldfish::nn::softmax_rows(z, 3.0));
}
BENCHMARK(BM_SoftmaxRows);

}  // namespace

BENCHMARK_MAIN();
