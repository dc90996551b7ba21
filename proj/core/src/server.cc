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

#include "goldfish/server.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "goldfish/error.h"
#include "goldfish/parallel.h"

namespace goldfish::fed {

namespace {

constexpr std::size_t kScoreChunk = 256;

void check_reports(std::span<const ClientReport> reports) {
  if (reports.empty()) throw PreconditionError("no client reports to aggregate");
  for (const auto& r : reports) {
    if (r.params.size() != reports[0].params.size()) {
      throw ShapeError("client parameter vectors differ in length");
    }
  }
}

nn::ParameterVector weighted_sum(std::span<const ClientReport> reports,
                                 const std::vector<double>& w) {
  auto out = nn::zeros_like(reports[0].params);
  for (std::size_t c = 0; c < reports.size(); ++c) nn::axpy(w[c], reports[c].params, out);
  return out;
}

// Folds per-shard retraining reports into one client-level report.
unlearn::TrainingReport merge_shard_reports(const unlearn::ShardRetrainReport& sr,
                                            const unlearn::ClientState& st) {
  unlearn::TrainingReport out;
  for (const auto& r : sr.reports) {
    const double w = 1.0 / static_cast<double>(sr.reports.size());
    out.epochs += r.epochs / static_cast<double>(st.shards->num_shards());
    out.last_epoch.remain += w * r.last_epoch.remain;
    out.last_epoch.forget += w * r.last_epoch.forget;
    out.last_epoch.hard += w * r.last_epoch.hard;
    out.last_epoch.confusion += w * r.last_epoch.confusion;
    out.last_epoch.distill += w * r.last_epoch.distill;
    out.last_epoch.total += w * r.last_epoch.total;
    out.temperature = r.temperature;
    out.trained_ids.insert(out.trained_ids.end(), r.trained_ids.begin(), r.trained_ids.end());
    out.forget_ids.insert(out.forget_ids.end(), r.forget_ids.begin(), r.forget_ids.end());
  }
  out.skipped = sr.reports.empty();
  std::sort(out.trained_ids.begin(), out.trained_ids.end());
  std::sort(out.forget_ids.begin(), out.forget_ids.end());
  return out;
}

}  // namespace

std::string to_string(AggregationMode mode) {
  return mode == AggregationMode::kFedAvg ? "fedavg" : "mse_adaptive";
}

AggregationMode parse_aggregation(const std::string& name) {
  if (name == "fedavg") return AggregationMode::kFedAvg;
  if (name == "mse_adaptive" || name == "adaptive") return AggregationMode::kMseAdaptive;
  throw ConfigError("unknown aggregation mode '" + name + "'");
}

std::string to_string(ReinitScope scope) {
  return scope == ReinitScope::kAll ? "all" : "unlearned";
}

ReinitScope parse_reinit_scope(const std::string& name) {
  if (name == "all") return ReinitScope::kAll;
  if (name == "unlearned") return ReinitScope::kUnlearned;
  throw ConfigError("unknown reinit scope '" + name + "'");
}

nn::ParameterVector fedavg_aggregate(std::span<const ClientReport> reports) {
  check_reports(reports);
  double total = 0.0;
  for (const auto& r : reports) total += static_cast<double>(r.dataset_size);
  if (total == 0.0) throw PreconditionError("all clients report empty datasets");
  std::vector<double> w;
  w.reserve(reports.size());
  for (const auto& r : reports) w.push_back(static_cast<double>(r.dataset_size) / total);
  return weighted_sum(reports, w);
}

double mse_weight(double me, double mean, double eps) {
  if (!(mean > eps)) throw DomainError("mean MSE too close to zero for adaptive weighting");
  return std::exp(-(me - mean) / mean);
}

std::vector<double> adaptive_weights(std::span<const ClientReport> reports) {
  check_reports(reports);
  for (const auto& r : reports) {
    if (!(r.mse >= 0.0)) throw DomainError("client MSE must be non-negative");
  }
  double mean = 0.0;
  for (const auto& r : reports) mean += r.mse;
  mean /= static_cast<double>(reports.size());
  std::vector<double> w(reports.size(), 1.0);
  if (mean > kMseEpsilon) {
    for (std::size_t c = 0; c < reports.size(); ++c) w[c] = mse_weight(reports[c].mse, mean);
  }
  const double theta = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= theta;
  return w;
}

nn::ParameterVector adaptive_aggregate(std::span<const ClientReport> reports) {
  return weighted_sum(reports, adaptive_weights(reports));
}

double compute_client_mse(const nn::NetworkSpec& spec, const nn::ParameterVector& params,
                          const data::LabeledDataset& test) {
  if (test.empty()) throw PreconditionError("MSE needs a nonempty test set");
  const std::size_t k = spec.num_classes();
  std::vector<std::size_t> pos(test.size());
  std::iota(pos.begin(), pos.end(), 0);
  double sum = 0.0;
  for (std::size_t start = 0; start < test.size(); start += kScoreChunk) {
    std::span<const std::size_t> p(pos.data() + start,
                                   std::min(kScoreChunk, test.size() - start));
    const auto probs =
        nn::softmax_rows(nn::forward(spec, params, test.gather(p)).logits(), 1.0);
    for (std::size_t r = 0; r < p.size(); ++r) {
      const auto y = static_cast<std::size_t>(test.label(p[r]));
      for (std::size_t j = 0; j < k; ++j) {
        const double e = probs(r, j) - (j == y ? 1.0 : 0.0);
        sum += e * e;
      }
    }
  }
  return sum / static_cast<double>(test.size() * k);
}

FederatedServer::FederatedServer(nn::NetworkSpec spec, data::LabeledDataset test_set,
                                 ServerOptions options)
    : spec_(std::move(spec)), test_set_(std::move(test_set)), options_(options) {
  spec_.validate();
  if (options_.mode == AggregationMode::kMseAdaptive && test_set_.empty()) {
    throw PreconditionError("adaptive aggregation needs a server test set");
  }
}

nn::ParameterVector FederatedServer::initial_params() const { return nn::init_network(spec_); }

GlobalModel FederatedServer::initial_model() const {
  return GlobalModel{initial_params(), 0, options_.mode};
}

nn::ParameterVector FederatedServer::aggregate(std::span<const ClientReport> reports) const {
  return options_.mode == AggregationMode::kFedAvg ? fedavg_aggregate(reports)
                                                   : adaptive_aggregate(reports);
}

GlobalModel FederatedServer::run_round(const GlobalModel& global,
                                       std::vector<unlearn::ClientState>& clients,
                                       const RoundPlan& plan, RoundMetrics* metrics) const {
  if (plan.round != global.round + 1) {
    throw PreconditionError("round plan " + std::to_string(plan.round) +
                            " does not follow global round " + std::to_string(global.round));
  }
  if (clients.empty()) throw PreconditionError("no clients");
  if (!nn::all_finite(global.params)) throw DomainError("global model is not finite");
  plan.budget.validate();

  std::vector<const data::DeletionRequest*> request(clients.size(), nullptr);
  for (const auto& d : plan.deletions) {
    auto it = std::find_if(clients.begin(), clients.end(),
                           [&](const auto& c) { return c.client_id == d.client_id; });
    if (it == clients.end()) {
      throw PreconditionError("deletion request for unknown client " +
                              std::to_string(d.client_id));
    }
    auto& slot = request[static_cast<std::size_t>(it - clients.begin())];
    if (slot != nullptr) {
      throw PreconditionError("two deletion requests for client " +
                              std::to_string(d.client_id));
    }
    slot = &d;
  }
  const bool deletion = !plan.deletions.empty();
  if (deletion) plan.weights.validate();
  const auto omega0 = deletion ? initial_params() : nn::ParameterVector{};
  const bool score = options_.mode == AggregationMode::kMseAdaptive;

  std::vector<ClientRound> out(clients.size());
  parallel_for(clients.size(), [&](std::size_t i) {
    auto& st = clients[i];
    auto& cr = out[i];
    cr.client_id = st.client_id;
    const auto seed = mix_seed(options_.seed, plan.round, static_cast<std::uint64_t>(st.client_id));
    try {
      if (!deletion) {
        st.params = global.params;
        cr.report = unlearn::local_training(spec_, st, plan.budget, seed, &global.params);
      } else if (request[i] != nullptr) {
        cr.unlearned = true;
        if (st.shards) {
          auto sr = unlearn::retrain_affected_shards(spec_, st, *request[i], global.params,
                                                     plan.weights, plan.budget, seed,
                                                     options_.normalize_checkpoint);
          cr.report = merge_shard_reports(sr, st);
        } else {
          auto split = data::apply_deletion(st.data, *request[i]);
          st.data = std::move(split.remain);
          st.forget = std::move(split.forget);
          st.params = omega0;
          cr.report = unlearn::goldfish_unlearn(spec_, st, global.params, plan.weights,
                                                plan.budget, seed);
          st.forget = {};
        }
      } else {
        if (!st.shards) {
          st.params = options_.reinit_scope == ReinitScope::kAll ? omega0 : global.params;
        }
        cr.report = unlearn::goldfish_unlearn(spec_, st, global.params, plan.weights,
                                              plan.budget, seed);
      }
      if (!nn::all_finite(st.params)) throw DomainError("training produced non-finite params");
      if (score) cr.mse = compute_client_mse(spec_, st.params, test_set_);
    } catch (const ClientError&) {
      throw;
    } catch (const std::exception& e) {
      throw ClientError(st.client_id, e.what());
    }
  });

  std::vector<ClientReport> reports;
  reports.reserve(clients.size());
  for (std::size_t i = 0; i < clients.size(); ++i) {
    reports.push_back({clients[i].client_id, clients[i].params, clients[i].data.size(),
                       out[i].mse});
  }
  GlobalModel next{aggregate(reports), plan.round, options_.mode};

  if (metrics != nullptr) {
    metrics->round = plan.round;
    metrics->deletion_round = deletion;
    metrics->components = {};
    metrics->local_epochs = 0.0;
    std::size_t trained = 0;
    for (const auto& cr : out) {
      metrics->local_epochs += cr.report.epochs;
      if (cr.report.skipped) continue;
      const auto& p = cr.report.last_epoch;
      metrics->components.remain += p.remain;
      metrics->components.forget += p.forget;
      metrics->components.hard += p.hard;
      metrics->components.confusion += p.confusion;
      metrics->components.distill += p.distill;
      metrics->components.total += p.total;
      ++trained;
    }
    if (trained > 0) {
      const double inv = 1.0 / static_cast<double>(trained);
      auto& c = metrics->components;
      for (double* v : {&c.remain, &c.forget, &c.hard, &c.confusion, &c.distill, &c.total}) {
        *v *= inv;
      }
    }
    metrics->clients = std::move(out);
  }
  return next;
}

GlobalModel FederatedServer::retrain_baseline(std::vector<unlearn::ClientState> clients,
                                              std::size_t rounds,
                                              const unlearn::TrainingBudget& budget,
                                              const RoundCallback& on_round) const {
  for (auto& c : clients) {
    c.forget = {};
    if (c.shards) c.shards->shard_params.clear();
  }
  GlobalModel global = initial_model();
  for (std::size_t r = 1; r <= rounds; ++r) {
    RoundPlan plan;
    plan.round = r;
    plan.budget = budget;
    RoundMetrics m;
    global = run_round(global, clients, plan, &m);
    if (on_round) on_round(global, m);
  }
  return global;
}

}  // namespace goldfish::fed
