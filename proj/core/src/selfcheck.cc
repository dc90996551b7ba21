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

#include "goldfish/selfcheck.h"

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "goldfish/checkpoint.h"
#include "goldfish/config.h"
#include "goldfish/data.h"
#include "goldfish/loss.h"
#include "goldfish/metrics.h"
#include "goldfish/nn.h"
#include "goldfish/server.h"
#include "goldfish/unlearn.h"

namespace goldfish {

namespace {

nn::Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo,
                         double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  nn::Matrix m(r, c);
  for (double& v : m.data()) v = u(rng);
  return m;
}

// Central differences of the unclamped total loss w.r.t. the parameters.
double gradient_error(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  nn::NetworkSpec spec{{5, 7, 4}, nn::Activation::kTanh, seed};
  auto params = nn::init_network(spec);
  const auto xr = random_matrix(6, 5, rng, 0.0, 1.0);
  const auto xf = random_matrix(3, 5, rng, 0.0, 1.0);
  const std::vector<int> yr = {0, 1, 2, 3, 1, 2};
  const std::vector<int> yf = {3, 0, 2};
  const auto teacher = random_matrix(6, 4, rng, -2.0, 2.0);
  loss::LossWeights w;
  w.forget_clamp = false;
  const loss::ClientSizes sizes{60, 4};

  auto eval = [&](const nn::ParameterVector& p) {
    const auto tr = nn::forward(spec, p, xr);
    const auto tf = nn::forward(spec, p, xf);
    return loss::total_loss(teacher, tr.logits(), yr, tf.logits(), yf, w, sizes);
  };
  const auto tr = nn::forward(spec, params, xr);
  const auto tf = nn::forward(spec, params, xf);
  const auto tl = eval(params);
  auto grad = nn::backward(spec, params, tr, tl.remain_grad);
  nn::axpy(1.0, nn::backward(spec, params, tf, tl.forget_grad), grad);

  const double eps = 1e-5;
  double num2 = 0.0;
  double diff2 = 0.0;
  double ana2 = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params;
    p.values[i] += eps;
    const double up = eval(p).parts.total;
    p.values[i] -= 2 * eps;
    const double dn = eval(p).parts.total;
    const double num = (up - dn) / (2 * eps);
    num2 += num * num;
    ana2 += grad.values[i] * grad.values[i];
    diff2 += (num - grad.values[i]) * (num - grad.values[i]);
  }
  return std::sqrt(diff2) / (std::sqrt(ana2) + std::sqrt(num2) + 1e-300);
}

double shard_roundtrip_error(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t tau = 2 + rng() % 17;
  const auto pool = data::gen_synthetic(tau * 8, 4, 2, seed);
  auto set = data::shard_split(pool, tau, seed);
  std::normal_distribution<double> g;
  for (std::size_t i = 0; i < tau; ++i) {
    nn::ParameterVector p;
    p.values.resize(32);
    for (double& v : p.values) v = g(rng);
    set.shard_params.push_back(p);
  }
  const auto full = unlearn::recombine_shards(set);
  double worst = 0.0;
  for (std::size_t i = 0; i < tau; ++i) {
    const auto back = unlearn::recover_shard_params(set, full, i);
    for (std::size_t k = 0; k < back.size(); ++k) {
      const double ref = set.shard_params[i].values[k];
      worst = std::max(worst, std::abs(back.values[k] - ref) / std::max(1.0, std::abs(ref)));
    }
  }
  return worst;
}

}  // namespace

bool run_selfcheck(std::ostream& out) {
  bool ok = true;
  auto check = [&](const std::string& name, const std::function<bool()>& body) {
    bool pass = false;
    std::string note;
    try {
      pass = body();
    } catch (const std::exception& e) {
      note = std::string(" (") + e.what() + ")";
    }
    out << (pass ? "PASS " : "FAIL ") << name << note << '\n';
    ok = ok && pass;
  };

  check("gradient of the composite loss matches central differences", [] {
    for (std::uint64_t s = 1; s <= 5; ++s) {
      if (gradient_error(s) > 1e-4) return false;
    }
    return true;
  });
  check("shard recombination inverts exactly", [] {
    for (std::uint64_t s = 1; s <= 20; ++s) {
      if (shard_roundtrip_error(s) > 1e-10) return false;
    }
    return true;
  });
  check("adaptive aggregation equals fedavg for equal MSEs and sizes", [] {
    std::vector<fed::ClientReport> reports(3);
    for (std::size_t c = 0; c < 3; ++c) {
      reports[c].params.values = {1.0 * c, 2.0 - c, 0.5 * c * c};
      reports[c].dataset_size = 10;
      reports[c].mse = 0.2;
    }
    const auto a = fed::adaptive_aggregate(reports);
    const auto f = fed::fedavg_aggregate(reports);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::abs(a.values[i] - f.values[i]) > 1e-12) return false;
    }
    return true;
  });
  check("MSE weights for {0.1, 0.3} normalize to {0.731, 0.269}", [] {
    std::vector<fed::ClientReport> reports(2);
    reports[0].params.values = {0.0};
    reports[1].params.values = {1.0};
    reports[0].mse = 0.1;
    reports[1].mse = 0.3;
    const auto w = fed::adaptive_weights(reports);
    return std::abs(w[0] - 0.731) < 1e-3 && std::abs(w[1] - 0.269) < 1e-3;
  });
  check("Welch test {1..5} vs {2..6} gives p = 0.347", [] {
    const std::vector<double> a = {1, 2, 3, 4, 5};
    const std::vector<double> b = {2, 3, 4, 5, 6};
    return std::abs(eval::welch_t_test(a, b).p_value - 0.347) < 0.005;
  });
  check("JSD reference values", [] {
    const std::vector<double> p = {0.5, 0.5};
    const std::vector<double> q = {1.0, 0.0};
    const std::vector<double> r = {0.0, 1.0};
    return std::abs(eval::jsd(p, q) - 0.2158) < 1e-4 &&
           std::abs(eval::jsd(q, r) - std::log(2.0)) < 1e-6;
  });
  check("checkpoint round trip is bit exact", [] {
    nn::NetworkSpec spec{{6, 5, 3}, nn::Activation::kRelu, 3};
    const auto params = nn::init_network(spec);
    const auto path = std::filesystem::temp_directory_path() /
                      ("goldfish_selfcheck_" + std::to_string(spec.digest()) + ".gfck");
    exp::save_checkpoint(params, 7, path);
    const auto back = exp::load_checkpoint(path, spec);
    std::filesystem::remove(path);
    return back == params;
  });
  check("config serialization is canonical", [] {
    const auto c = exp::parse_config_text("dataset = synthetic\nshards = 3\n");
    const auto s = exp::serialize_config(c);
    return exp::serialize_config(exp::parse_config_text(s)) == s;
  });
  return ok;
}

}  // namespace goldfish
