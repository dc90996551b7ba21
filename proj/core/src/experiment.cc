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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <unordered_set>

#include "goldfish/checkpoint.h"
#include "goldfish/error.h"
#include "goldfish/parallel.h"

namespace goldfish::exp {

namespace fs = std::filesystem;

namespace {

enum StreamTag : std::uint64_t {
  kDataTag = 11,
  kHoldoutTag,
  kPartitionTag,
  kBackdoorTag,
  kDeletionTag,
  kShardTag,
  kServerTag,
  kLimitTag,
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

data::LabeledDataset take_subset(const data::LabeledDataset& d, std::size_t limit,
                                 std::uint64_t seed) {
  if (limit == 0 || limit >= d.size()) return d;
  std::vector<std::size_t> pos(d.size());
  std::iota(pos.begin(), pos.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  pos.resize(limit);
  std::sort(pos.begin(), pos.end());
  return d.subset(pos);
}

data::BackdoorSpec backdoor_spec(const ExperimentConfig& c) {
  data::BackdoorSpec b;
  b.trigger_size = c.trigger_size;
  b.trigger_value = 1.0;
  b.target_label = c.target_label;
  b.poison_rate = c.effective_poison_rate();
  return b;
}

unlearn::TrainingBudget make_budget(const ExperimentConfig& c, bool early_stop) {
  unlearn::TrainingBudget b;
  b.local_epochs = c.local_epochs;
  b.batch_size = c.batch_size;
  b.max_rounds = c.rounds;
  if (early_stop) b.early_stop_delta = c.early_stop_delta;
  return b;
}

std::vector<unlearn::ClientState> clients_over(const ExperimentConfig& config,
                                               const std::vector<data::LabeledDataset>& sets) {
  const auto spec = config.network();
  std::vector<unlearn::ClientState> out(sets.size());
  for (std::size_t c = 0; c < sets.size(); ++c) {
    auto& st = out[c];
    st.client_id = static_cast<int>(c);
    st.data = sets[c];
    st.optimizer = nn::OptimizerState::fresh(spec.parameter_count(), config.learning_rate,
                                             config.momentum);
    if (config.shards > 1) {
      st.shards = data::shard_split(sets[c], config.shards,
                                    mix_seed(config.seed, kShardTag, c));
    }
  }
  return out;
}

std::string round_file(std::size_t round) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "round_%03zu.gfck", round);
  return buf;
}

struct ArmContext {
  const ExperimentConfig& config;
  const fed::FederatedServer& server;
  const RunOptions& options;
};

// Runs rounds [first, last]; a deletion request, if any, is applied in round
// `first`.
void run_rounds(const ArmContext& ctx, ArmResult& arm, fed::GlobalModel& global,
                std::vector<unlearn::ClientState>& clients, std::size_t first, std::size_t last,
                const data::DeletionRequest* deletion, bool early_stop,
                std::vector<double>& seconds) {
  const auto& cfg = ctx.config;
  for (std::size_t r = first; r <= last; ++r) {
    fed::RoundPlan plan;
    plan.round = r;
    plan.budget = make_budget(cfg, early_stop);
    plan.weights = cfg.weights;
    const bool deleting = deletion != nullptr && r == first;
    if (deleting) plan.deletions.push_back(*deletion);
    fed::RoundMetrics m;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      global = ctx.server.run_round(global, clients, plan, &m);
    } catch (const std::exception& e) {
      throw Error(arm.name + " arm, round " + std::to_string(r) + ": " + e.what());
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    seconds.push_back(cfg.timing ? dt.count() : 0.0);
    if (deleting) {
      for (const auto& c : clients) {
        if (c.client_id == deletion->client_id) arm.deletion_client_params = c.params;
      }
    }
    arm.round_params.push_back(global.params);
    arm.round_metrics.push_back(std::move(m));
    if (ctx.options.log) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%-8s round %zu/%zu%s", arm.name.c_str(), r, last,
                    deleting ? " (deletion)" : "");
      ctx.options.log(buf);
    }
  }
}

std::size_t count_leaks(const ArmResult& arm, std::size_t from_round,
                        const std::unordered_set<std::uint64_t>& deleted) {
  std::size_t leaks = 0;
  for (const auto& m : arm.round_metrics) {
    if (m.round < from_round) continue;
    for (const auto& c : m.clients) {
      for (auto id : c.report.trained_ids) leaks += deleted.count(id);
    }
  }
  return leaks;
}

struct Scorer {
  const ExperimentConfig& config;
  const nn::NetworkSpec& spec;
  const PreparedData& data;
  std::optional<std::vector<double>> reference_mean;  // retrain final on D_f
  std::vector<double> original_conf;                  // pre-deletion global on D_f

  eval::MetricsRecord score(std::size_t round, const nn::ParameterVector& params,
                            const fed::RoundMetrics& m, double seconds) const {
    eval::MetricsRecord rec;
    rec.round = round;
    rec.accuracy = eval::accuracy(spec, params, data.test);
    rec.backdoor = config.backdoor && !data.backdoor_eval.empty()
                       ? eval::backdoor_success_rate(spec, params, data.backdoor_eval,
                                                     backdoor_spec(config))
                       : 0.0;
    rec.loss = m.components;
    rec.jsd = kNaN;
    rec.l2 = kNaN;
    rec.p_value = kNaN;
    if (!data.forget_eval.empty()) {
      if (reference_mean) {
        const auto mean = eval::mean_prediction(spec, params, data.forget_eval);
        rec.jsd = eval::jsd(mean, *reference_mean);
        rec.l2 = eval::l2_distance(mean, *reference_mean);
      }
      if (data.forget_eval.size() >= 2) {
        rec.p_value =
            eval::welch_t_test(eval::max_confidences(spec, params, data.forget_eval),
                               original_conf)
                .p_value;
      }
    }
    rec.seconds = seconds;
    return rec;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& config) {
  config.validate();
  const auto seed = config.seed;
  data::LabeledDataset train;
  PreparedData out;
  if (config.dataset == DatasetSource::kIdx) {
    train = take_subset(data::load_idx(config.train_images, config.train_labels, config.classes),
                        config.train_limit, mix_seed(seed, kLimitTag, 0));
    out.test = take_subset(data::load_idx(config.test_images, config.test_labels, config.classes),
                           config.test_limit, mix_seed(seed, kLimitTag, 1));
  } else {
    const std::size_t n = config.train_size + config.test_size;
    const auto pool =
        config.synthetic_kind == SyntheticKind::kImages
            ? data::gen_synthetic_images(n, config.classes, mix_seed(seed, kDataTag),
                                         config.image_side)
            : data::gen_synthetic(n, config.dims, config.classes, mix_seed(seed, kDataTag),
                                  config.separation);
    auto split = data::split_holdout(pool, config.test_size, mix_seed(seed, kHoldoutTag));
    train = std::move(split.train);
    out.test = std::move(split.test);
  }

  data::ClientPartition part;
  if (config.partition == PartitionKind::kIid) {
    part = data::partition_iid(train, config.clients, mix_seed(seed, kPartitionTag));
  } else {
    data::HeterogeneityOptions opts;
    opts.size_exponent = config.size_exponent;
    opts.label_concentration = config.dirichlet;
    part = data::partition_heterogeneous(train, config.clients, mix_seed(seed, kPartitionTag),
                                         opts);
  }
  out.clients = std::move(part.clients);
  out.size_variance = part.size_variance;

  auto& victim = out.clients[config.deletion_client];
  if (config.backdoor) {
    const auto spec = backdoor_spec(config);
    auto poisoned = data::inject_backdoor(victim, spec, mix_seed(seed, kBackdoorTag));
    victim = std::move(poisoned.data);
    out.poisoned_ids = std::move(poisoned.poisoned_ids);
    out.backdoor_eval = out.test.filter([&](const data::LabeledDataset& d, std::size_t i) {
      return d.label(i) != config.target_label;
    });
  }

  out.deletion.client_id = static_cast<int>(config.deletion_client);
  switch (config.deletion) {
    case DeletionMode::kPoisoned:
      out.deletion.deleted_ids = out.poisoned_ids;
      break;
    case DeletionMode::kRandom: {
      auto ids = victim.ids();
      std::mt19937_64 rng(mix_seed(seed, kDeletionTag));
      std::shuffle(ids.begin(), ids.end(), rng);
      const auto k = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::floor(config.deletion_rate *
                                                 static_cast<double>(victim.size()))));
      ids.resize(std::min(k, ids.size()));
      std::sort(ids.begin(), ids.end());
      out.deletion.deleted_ids = std::move(ids);
      break;
    }
    case DeletionMode::kIds:
      out.deletion.deleted_ids = config.deletion_ids;
      break;
  }
  out.deletion.deletion_rate = static_cast<double>(out.deletion.deleted_ids.size()) /
                               static_cast<double>(victim.size());
  out.forget_eval = data::apply_deletion(victim, out.deletion).forget;
  return out;
}

std::vector<unlearn::ClientState> make_clients(const ExperimentConfig& config,
                                               const PreparedData& data) {
  return clients_over(config, data.clients);
}

std::string format_summary(std::span<const SummaryRow> rows) {
  std::string out = kSummaryHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += r.arm + ',' + std::to_string(r.rounds);
    for (double v : {r.acc, r.backdoor, r.jsd, r.l2, r.p_value, r.local_epochs}) {
      out += ',';
      out += eval::format_fixed(v);
    }
    out += '\n';
  }
  return out;
}

const ArmResult& ExperimentResult::arm(const std::string& name) const {
  for (const auto& a : arms) {
    if (a.name == name) return a;
  }
  throw PreconditionError("experiment has no arm '" + name + "'");
}

bool ExperimentResult::has_arm(const std::string& name) const {
  return std::any_of(arms.begin(), arms.end(), [&](const auto& a) { return a.name == name; });
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  ExperimentResult result;
  result.data = prepare_data(config);
  const auto& data = result.data;
  const auto spec = config.network();
  const std::size_t d = config.deletion_round;
  const std::size_t n_rounds = config.rounds;

  fed::ServerOptions sopts;
  sopts.mode = config.aggregation;
  sopts.reinit_scope = config.reinit_scope;
  sopts.normalize_checkpoint = config.normalize_checkpoint;
  sopts.seed = mix_seed(config.seed, kServerTag);
  const fed::FederatedServer server(spec, data.test, sopts);
  auto fedavg_opts = sopts;
  fedavg_opts.mode = fed::AggregationMode::kFedAvg;
  const fed::FederatedServer fedavg_server(spec, data.test, fedavg_opts);
  const ArmContext ctx{config, server, options};

  // Original run; its state after round d seeds the forked arms.
  ArmResult original;
  original.name = "original";
  std::vector<double> original_seconds;
  auto clients = make_clients(config, data);
  fed::GlobalModel global = server.initial_model();
  run_rounds(ctx, original, global, clients, 1, d, nullptr, false, original_seconds);
  const fed::GlobalModel pre_global = global;
  const auto pre_clients = clients;
  run_rounds(ctx, original, global, clients, d + 1, n_rounds, nullptr, false, original_seconds);

  std::vector<ArmResult> arms;
  std::vector<std::vector<double>> seconds;
  arms.push_back(std::move(original));
  seconds.push_back(std::move(original_seconds));

  if (config.has_baseline("retrain")) {
    ArmResult retrain;
    retrain.name = "retrain";
    std::vector<double> secs;
    auto remain_sets = data.clients;
    auto& victim = remain_sets[config.deletion_client];
    victim = data::apply_deletion(victim, data.deletion).remain;
    auto rclients = clients_over(config, remain_sets);
    fed::GlobalModel rglobal = server.initial_model();
    run_rounds(ctx, retrain, rglobal, rclients, 1, n_rounds, nullptr, false, secs);
    arms.push_back(std::move(retrain));
    seconds.push_back(std::move(secs));
  }

  auto fork = [&](const std::string& name, const fed::FederatedServer& srv) {
    ArmResult arm;
    arm.name = name;
    arm.round_params.assign(arms[0].round_params.begin(), arms[0].round_params.begin() + d);
    arm.round_metrics.assign(arms[0].round_metrics.begin(), arms[0].round_metrics.begin() + d);
    std::vector<double> secs(seconds[0].begin(), seconds[0].begin() + d);
    auto fclients = pre_clients;
    fed::GlobalModel fglobal = pre_global;
    fglobal.mode = srv.options().mode;
    const ArmContext fctx{config, srv, options};
    run_rounds(fctx, arm, fglobal, fclients, d + 1, n_rounds, &data.deletion, true, secs);
    arms.push_back(std::move(arm));
    seconds.push_back(std::move(secs));
  };
  fork("goldfish", server);
  if (config.has_baseline("fedavg")) fork("fedavg", fedavg_server);

  // Metrics.
  Scorer scorer{config, spec, data, std::nullopt, {}};
  const auto& pre_params = arms[0].round_params[d - 1];
  if (!data.forget_eval.empty()) {
    scorer.original_conf = eval::max_confidences(spec, pre_params, data.forget_eval);
    for (const auto& a : arms) {
      if (a.name == "retrain") {
        scorer.reference_mean = eval::mean_prediction(spec, a.final_params(), data.forget_eval);
      }
    }
  }
  const std::unordered_set<std::uint64_t> deleted(data.deletion.deleted_ids.begin(),
                                                  data.deletion.deleted_ids.end());
  for (std::size_t k = 0; k < arms.size(); ++k) {
    auto& a = arms[k];
    const bool forked = a.name == "goldfish" || a.name == "fedavg";
    for (std::size_t r = 0; r < a.round_params.size(); ++r) {
      if (forked && r < d) {
        a.records.push_back(arms[0].records[r]);
        continue;
      }
      a.records.push_back(scorer.score(r + 1, a.round_params[r], a.round_metrics[r], seconds[k][r]));
    }
    for (const auto& m : a.round_metrics) {
      if (m.round > d) a.local_epochs += m.local_epochs;
    }
    if (a.name == "retrain") a.audit_violations = count_leaks(a, 1, deleted);
    if (forked) a.audit_violations = count_leaks(a, d + 1, deleted);

    const auto& last = a.records.back();
    result.summary.push_back(
        {a.name, a.records.size(), last.accuracy, last.backdoor, last.jsd, last.l2,
         last.p_value, a.local_epochs});
  }

  if (options.write_artifacts) {
    const fs::path root(config.output_dir);
    fs::create_directories(root);
    write_text(root / "config.cfg", serialize_config(config));
    for (const auto& a : arms) {
      eval::emit_csv(a.records, root / (a.name + ".csv"));
      if (config.checkpoints == CheckpointPolicy::kNone) continue;
      const fs::path dir = root / "checkpoints" / a.name;
      fs::create_directories(dir);
      const bool forked = a.name == "goldfish" || a.name == "fedavg";
      for (std::size_t r = 0; r < a.round_params.size(); ++r) {
        const bool last = r + 1 == a.round_params.size();
        if (config.checkpoints == CheckpointPolicy::kFinal && !last) continue;
        if (forked && r < d && !last) continue;  // identical to the original's files
        save_checkpoint(a.round_params[r], static_cast<std::uint32_t>(r + 1),
                        dir / round_file(r + 1));
      }
    }
    write_text(root / "summary.csv", format_summary(result.summary));
  }
  result.arms = std::move(arms);
  return result;
}

std::vector<std::string> expand_values(const std::string& spec) {
  std::vector<std::string> out;
  auto fmt = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  const auto c1 = spec.find(':');
  if (c1 == std::string::npos) {
    std::size_t start = 0;
    while (start <= spec.size()) {
      const auto comma = spec.find(',', start);
      const auto item = spec.substr(start, comma == std::string::npos ? std::string::npos
                                                                      : comma - start);
      if (!item.empty()) out.push_back(item);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (out.empty()) throw ConfigError("empty value list");
    return out;
  }
  const auto c2 = spec.find(':', c1 + 1);
  if (c2 == std::string::npos) throw ConfigError("range must look like start:stop:step");
  double a = 0.0, b = 0.0, step = 0.0;
  try {
    a = std::stod(spec.substr(0, c1));
    b = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    step = std::stod(spec.substr(c2 + 1));
  } catch (const std::exception&) {
    throw ConfigError("range '" + spec + "' is not numeric");
  }
  if (!(step > 0.0) || b < a) throw ConfigError("range needs step > 0 and stop >= start");
  const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) out.push_back(fmt(a + static_cast<double>(i) * step));
  return out;
}

void run_sweep(const ExperimentConfig& config, const std::string& param,
               const std::vector<std::string>& values, const RunOptions& options) {
  const fs::path root(config.output_dir);
  std::string csv = std::string("value,") + kSummaryHeader + "\n";
  for (const auto& v : values) {
    ExperimentConfig point = config;
    apply_override(point, param, v);
    point.output_dir = (root / (param + "_" + v)).string();
    if (options.log) options.log("sweep " + param + " = " + v);
    const auto res = run_experiment(point, options);
    const auto body = format_summary(res.summary);
    // Prefix every summary line (after the header) with the swept value.
    std::size_t pos = body.find('\n') + 1;
    while (pos < body.size()) {
      const auto nl = body.find('\n', pos);
      csv += v + "," + body.substr(pos, nl - pos + 1);
      pos = nl + 1;
    }
  }
  fs::create_directories(root);
  write_text(root / "sweep.csv", csv);
}

}  // namespace goldfish::exp
