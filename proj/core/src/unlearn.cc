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

#include "goldfish/unlearn.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>

#include "goldfish/error.h"
#include "goldfish/parallel.h"

namespace goldfish::unlearn {

namespace {

constexpr std::uint64_t kRemainStream = 1;
constexpr std::uint64_t kForgetStream = 2;
constexpr std::uint64_t kShardStream = 0x5348;

struct LoopInputs {
  const data::LabeledDataset* remain = nullptr;
  const data::LabeledDataset* forget = nullptr;
  const nn::ParameterVector* teacher = nullptr;  // null: plain cross-entropy
  const loss::LossWeights* weights = nullptr;
  loss::ClientSizes sizes;
  const nn::ParameterVector* reference = nullptr;
};

std::vector<int> labels_at(const data::LabeledDataset& d, std::span<const std::size_t> pos) {
  std::vector<int> y(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) y[i] = d.label(pos[i]);
  return y;
}

// Objective tracked by early termination: cross-entropy for plain training,
// L_r + mu_d * L_d for distillation.
double tracked_value(const loss::LossComponents& parts, const LoopInputs& in) {
  if (in.teacher == nullptr) return parts.remain;
  return parts.remain + in.weights->mu_d * parts.distill;
}

// Mean tracked objective of `model` over the whole remain set.
double dataset_reference_loss(const nn::NetworkSpec& spec, const nn::ParameterVector& model,
                              const LoopInputs& in, double temperature,
                              std::size_t batch) {
  const auto& d = *in.remain;
  std::vector<std::size_t> pos(d.size());
  std::iota(pos.begin(), pos.end(), 0);
  double sum = 0.0;
  for (std::size_t start = 0; start < d.size(); start += batch) {
    const std::size_t len = std::min(batch, d.size() - start);
    std::span<const std::size_t> p(pos.data() + start, len);
    const auto x = d.gather(p);
    const auto y = labels_at(d, p);
    const auto logits = nn::forward(spec, model, x).logits();
    loss::LossComponents parts;
    parts.remain = loss::mean_sample_loss(logits, y).value;
    if (in.teacher != nullptr && in.weights->mu_d != 0.0) {
      const auto t_logits = nn::forward(spec, *in.teacher, x).logits();
      parts.distill = loss::distillation_loss(loss::soft_targets(t_logits, temperature),
                                              logits, temperature)
                          .value;
    }
    sum += tracked_value(parts, in) * static_cast<double>(len);
  }
  return sum / static_cast<double>(d.size());
}

void accumulate(loss::LossComponents& acc, const loss::LossComponents& x, double w) {
  acc.remain += w * x.remain;
  acc.forget += w * x.forget;
  acc.hard += w * x.hard;
  acc.confusion += w * x.confusion;
  acc.distill += w * x.distill;
  acc.total += w * x.total;
}

std::vector<std::uint64_t> sorted_ids(const data::LabeledDataset& d,
                                      const std::vector<char>& seen) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i]) out.push_back(d.id(i));
  }
  std::sort(out.begin(), out.end());
  return out;
}

TrainingReport train_loop(const nn::NetworkSpec& spec, nn::ParameterVector& params,
                          nn::OptimizerState& opt, const LoopInputs& in,
                          const TrainingBudget& budget, std::uint64_t seed) {
  TrainingReport rep;
  const auto& remain = *in.remain;
  const auto& forget = *in.forget;
  if (remain.empty()) {
    rep.skipped = true;
    return rep;
  }
  const std::size_t batch = budget.batch_size;
  const bool distill = in.teacher != nullptr;
  const std::size_t classes = spec.num_classes();
  rep.temperature =
      distill ? loss::resolve_temperature(*in.weights, in.sizes.remain, in.sizes.forget) : 1.0;

  opt.momentum.assign(params.size(), 0.0);
  if (budget.early_stop_delta) {
    if (in.reference == nullptr) {
      throw PreconditionError("early termination needs a reference model");
    }
    rep.log.reference_loss =
        dataset_reference_loss(spec, *in.reference, in, rep.temperature, batch);
  }

  std::mt19937_64 rng_r(mix_seed(seed, kRemainStream));
  std::mt19937_64 rng_f(mix_seed(seed, kForgetStream));
  std::vector<std::size_t> order(remain.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> forder(forget.size());
  std::iota(forder.begin(), forder.end(), 0);
  std::size_t fcursor = forder.size();
  std::vector<char> seen(remain.size(), 0);
  std::vector<char> fseen(forget.size(), 0);

  for (std::size_t epoch = 0; epoch < budget.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng_r);
    loss::LossComponents epoch_parts;
    double tracked = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::span<const std::size_t> pos(order.data() + start,
                                       std::min(batch, order.size() - start));
      for (std::size_t p : pos) seen[p] = 1;
      const auto x = remain.gather(pos);
      const auto y = labels_at(remain, pos);
      const auto trace = nn::forward(spec, params, x);

      loss::LossComponents parts;
      nn::ParameterVector grad;
      if (!distill) {
        auto ce = loss::mean_sample_loss(trace.logits(), y);
        parts.remain = parts.hard = parts.total = ce.value;
        grad = nn::backward(spec, params, trace, ce.grad);
      } else {
        std::vector<std::size_t> fpos;
        if (!forget.empty()) {
          if (forget.size() <= batch) {
            fpos = forder;
          } else {
            fpos.reserve(batch);
            while (fpos.size() < batch) {
              if (fcursor == forder.size()) {
                std::shuffle(forder.begin(), forder.end(), rng_f);
                fcursor = 0;
              }
              fpos.push_back(forder[fcursor++]);
            }
          }
          for (std::size_t p : fpos) fseen[p] = 1;
        }
        const bool has_forget = !fpos.empty();
        nn::ForwardTrace ftrace;
        nn::Matrix f_logits(0, classes);
        std::vector<int> yf;
        if (has_forget) {
          ftrace = nn::forward(spec, params, forget.gather(fpos));
          f_logits = ftrace.logits();
          yf = labels_at(forget, fpos);
        }
        const nn::Matrix t_logits = in.weights->mu_d != 0.0
                                        ? nn::forward(spec, *in.teacher, x).logits()
                                        : nn::Matrix(x.rows(), classes);
        auto tl = loss::total_loss(t_logits, trace.logits(), y, f_logits, yf, *in.weights,
                                   in.sizes);
        parts = tl.parts;
        grad = nn::backward(spec, params, trace, tl.remain_grad);
        if (has_forget) {
          nn::axpy(1.0, nn::backward(spec, params, ftrace, tl.forget_grad), grad);
        }
      }
      nn::sgd_step(params, grad, opt);
      accumulate(epoch_parts, parts, 1.0);
      tracked += tracked_value(parts, in);
      ++batches;
    }
    const double inv = 1.0 / static_cast<double>(batches);
    rep.last_epoch = {};
    accumulate(rep.last_epoch, epoch_parts, inv);
    rep.log.epoch_losses.push_back(tracked * inv);
    rep.epochs += 1.0;
    if (budget.early_stop_delta && should_terminate(rep.log, *budget.early_stop_delta)) {
      rep.stopped_early = rep.epochs < static_cast<double>(budget.local_epochs);
      break;
    }
  }
  rep.trained_ids = sorted_ids(remain, seen);
  rep.forget_ids = sorted_ids(forget, fseen);
  return rep;
}

// Size-weighted merge of per-shard reports.
TrainingReport merge_reports(const std::vector<TrainingReport>& reps,
                             const data::ShardSet& set) {
  TrainingReport out;
  const double total = static_cast<double>(set.total_size());
  out.stopped_early = !reps.empty();
  out.skipped = true;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const double w = total > 0.0 ? static_cast<double>(set.shards[i].size()) / total : 0.0;
    out.epochs += w * reps[i].epochs;
    accumulate(out.last_epoch, reps[i].last_epoch, w);
    out.stopped_early = out.stopped_early && reps[i].stopped_early;
    out.skipped = out.skipped && reps[i].skipped;
    out.temperature = reps[i].temperature;
    out.trained_ids.insert(out.trained_ids.end(), reps[i].trained_ids.begin(),
                           reps[i].trained_ids.end());
    out.forget_ids.insert(out.forget_ids.end(), reps[i].forget_ids.begin(),
                          reps[i].forget_ids.end());
  }
  std::sort(out.trained_ids.begin(), out.trained_ids.end());
  std::sort(out.forget_ids.begin(), out.forget_ids.end());
  return out;
}

void check_shard_params(const data::ShardSet& set) {
  if (set.shards.empty()) throw PreconditionError("shard set is empty");
  if (set.shard_params.size() != set.shards.size()) {
    throw PreconditionError("shard set has not been trained");
  }
  for (std::size_t i = 1; i < set.shard_params.size(); ++i) {
    if (set.shard_params[i].size() != set.shard_params[0].size()) {
      throw ShapeError("shard parameter vectors differ in size");
    }
  }
}

}  // namespace

void TrainingBudget::validate() const {
  if (local_epochs == 0) throw ConfigError("local_epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (early_stop_delta && !(*early_stop_delta >= 0.0)) {
    throw ConfigError("early-termination delta must be non-negative");
  }
}

double excess_empirical_risk(const EpochLossLog& log) {
  if (log.epoch_losses.empty()) throw PreconditionError("no finished epochs");
  if (!log.reference_loss) throw PreconditionError("no reference loss");
  const double mean =
      std::accumulate(log.epoch_losses.begin(), log.epoch_losses.end(), 0.0) /
      static_cast<double>(log.epoch_losses.size());
  return std::abs(mean - *log.reference_loss);
}

bool should_terminate(const EpochLossLog& log, double delta) {
  return excess_empirical_risk(log) <= delta;
}

TrainingReport local_training(const nn::NetworkSpec& spec, ClientState& state,
                              const TrainingBudget& budget, std::uint64_t seed,
                              const nn::ParameterVector* reference) {
  budget.validate();
  const data::LabeledDataset no_forget;
  if (!state.shards) {
    LoopInputs in;
    in.remain = &state.data;
    in.forget = &no_forget;
    in.reference = reference;
    return train_loop(spec, state.params, state.optimizer, in, budget, seed);
  }
  auto& set = *state.shards;
  const std::size_t tau = set.num_shards();
  std::vector<TrainingReport> reps(tau);
  std::vector<nn::ParameterVector> trained(tau);
  parallel_for(tau, [&](std::size_t i) {
    nn::ParameterVector p = state.params;
    nn::OptimizerState opt = state.optimizer;
    LoopInputs in;
    in.remain = &set.shards[i];
    in.forget = &no_forget;
    in.reference = reference;
    reps[i] = train_loop(spec, p, opt, in, budget, mix_seed(seed, kShardStream, i));
    trained[i] = std::move(p);
  });
  set.shard_params = std::move(trained);
  state.params = recombine_shards(set);
  return merge_reports(reps, set);
}

TrainingReport goldfish_unlearn(const nn::NetworkSpec& spec, ClientState& state,
                                const nn::ParameterVector& teacher,
                                const loss::LossWeights& weights,
                                const TrainingBudget& budget, std::uint64_t seed) {
  budget.validate();
  weights.validate();
  if (!state.shards) {
    LoopInputs in;
    in.remain = &state.data;
    in.forget = &state.forget;
    in.teacher = &teacher;
    in.weights = &weights;
    in.sizes = {state.data.size(), state.forget.size()};
    in.reference = &teacher;
    return train_loop(spec, state.params, state.optimizer, in, budget, seed);
  }
  if (!state.forget.empty()) {
    throw PreconditionError("sharded client " + std::to_string(state.client_id) +
                            " must delete through retrain_affected_shards");
  }
  auto& set = *state.shards;
  const std::size_t tau = set.num_shards();
  const bool trained = set.trained();
  const data::LabeledDataset no_forget;
  std::vector<TrainingReport> reps(tau);
  std::vector<nn::ParameterVector> out(tau);
  parallel_for(tau, [&](std::size_t i) {
    nn::ParameterVector p = trained ? set.shard_params[i] : state.params;
    nn::OptimizerState opt = state.optimizer;
    LoopInputs in;
    in.remain = &set.shards[i];
    in.forget = &no_forget;
    in.teacher = &teacher;
    in.weights = &weights;
    in.sizes = {set.shards[i].size(), 0};
    in.reference = &teacher;
    reps[i] = train_loop(spec, p, opt, in, budget, mix_seed(seed, kShardStream, i));
    out[i] = std::move(p);
  });
  set.shard_params = std::move(out);
  state.params = recombine_shards(set);
  return merge_reports(reps, set);
}

nn::ParameterVector recombine_shards(const data::ShardSet& shards) {
  check_shard_params(shards);
  const double total = static_cast<double>(shards.total_size());
  if (total == 0.0) throw DomainError("shard set holds no data");
  auto out = nn::zeros_like(shards.shard_params[0]);
  for (std::size_t i = 0; i < shards.num_shards(); ++i) {
    nn::axpy(static_cast<double>(shards.shards[i].size()) / total, shards.shard_params[i],
             out);
  }
  return out;
}

nn::ParameterVector checkpoint_without_shards(const data::ShardSet& shards,
                                              std::span<const std::size_t> excluded,
                                              bool normalize) {
  check_shard_params(shards);
  std::vector<char> skip(shards.num_shards(), 0);
  for (std::size_t e : excluded) {
    if (e >= shards.num_shards()) throw PreconditionError("shard index out of range");
    skip[e] = 1;
  }
  double kept = 0.0;
  for (std::size_t j = 0; j < shards.num_shards(); ++j) {
    if (!skip[j]) kept += static_cast<double>(shards.shards[j].size());
  }
  if (kept == 0.0) throw PreconditionError("no unaffected shard data left to checkpoint");
  const double denom = normalize ? kept : static_cast<double>(shards.total_size());
  auto out = nn::zeros_like(shards.shard_params[0]);
  for (std::size_t j = 0; j < shards.num_shards(); ++j) {
    if (skip[j]) continue;
    nn::axpy(static_cast<double>(shards.shards[j].size()) / denom, shards.shard_params[j], out);
  }
  return out;
}

nn::ParameterVector checkpoint_without_shard(const data::ShardSet& shards,
                                             std::size_t excluded, bool normalize) {
  const std::size_t ex[] = {excluded};
  return checkpoint_without_shards(shards, ex, normalize);
}

nn::ParameterVector recover_shard_params(const data::ShardSet& shards,
                                         const nn::ParameterVector& retrained_full,
                                         std::size_t shard) {
  check_shard_params(shards);
  if (shard >= shards.num_shards()) throw PreconditionError("shard index out of range");
  if (retrained_full.size() != shards.shard_params[0].size()) {
    throw ShapeError("retrained params differ in size from shard params");
  }
  const double total = static_cast<double>(shards.total_size());
  const double own = static_cast<double>(shards.shards[shard].size());
  if (own == 0.0) throw DomainError("cannot recover params of an empty shard");
  auto rest = nn::zeros_like(retrained_full);
  for (std::size_t j = 0; j < shards.num_shards(); ++j) {
    if (j == shard) continue;
    nn::axpy(static_cast<double>(shards.shards[j].size()) / total, shards.shard_params[j],
             rest);
  }
  nn::ParameterVector out = retrained_full;
  nn::axpy(-1.0, rest, out);
  for (double& v : out.values) v *= total / own;
  return out;
}

ShardRetrainReport retrain_affected_shards(const nn::NetworkSpec& spec, ClientState& state,
                                           const data::DeletionRequest& deletion,
                                           const nn::ParameterVector& teacher,
                                           const loss::LossWeights& weights,
                                           const TrainingBudget& budget,
                                           std::uint64_t seed, bool normalize_checkpoint) {
  if (!state.shards || !state.shards->trained()) {
    throw PreconditionError("client " + std::to_string(state.client_id) +
                            " has no trained shards");
  }
  // Validates the request against the client's data.
  auto split = data::apply_deletion(state.data, deletion);
  const std::unordered_set<std::uint64_t> gone(deletion.deleted_ids.begin(),
                                               deletion.deleted_ids.end());
  const auto& old = *state.shards;
  const std::size_t tau = old.num_shards();

  ShardRetrainReport report;
  std::vector<data::DeletionSplit> parts(tau);
  std::vector<std::size_t> affected;
  for (std::size_t i = 0; i < tau; ++i) {
    const auto& s = old.shards[i];
    parts[i].remain = s.filter([&](const data::LabeledDataset& d, std::size_t k) {
      return !gone.count(d.id(k));
    });
    parts[i].forget = s.filter([&](const data::LabeledDataset& d, std::size_t k) {
      return gone.count(d.id(k)) > 0;
    });
    if (parts[i].forget.empty()) continue;
    affected.push_back(i);
    if (parts[i].remain.empty()) {
      report.dropped.push_back(i);
    } else {
      report.retrained.push_back(i);
    }
  }
  if (report.dropped.size() == tau) {
    throw PreconditionError("deletion removes every shard of client " +
                            std::to_string(state.client_id));
  }

  const auto checkpoint = checkpoint_without_shards(old, affected, normalize_checkpoint);
  const std::size_t nr = report.retrained.size();
  report.reports.resize(nr);
  std::vector<nn::ParameterVector> retrained(nr);
  parallel_for(nr, [&](std::size_t k) {
    const std::size_t i = report.retrained[k];
    ClientState shard;
    shard.client_id = state.client_id;
    shard.params = checkpoint;
    shard.optimizer = state.optimizer;
    shard.data = parts[i].remain;
    shard.forget = parts[i].forget;
    report.reports[k] = goldfish_unlearn(
        spec, shard, teacher, weights, budget,
        mix_seed(seed, static_cast<std::uint64_t>(state.client_id), i));
    retrained[k] = std::move(shard.params);
  });

  // New shard set in original order, dropped shards removed.
  data::ShardSet next;
  std::vector<std::size_t> new_index(tau, tau);
  for (std::size_t i = 0; i < tau; ++i) {
    if (std::find(report.dropped.begin(), report.dropped.end(), i) != report.dropped.end()) {
      continue;
    }
    new_index[i] = next.shards.size();
    next.shards.push_back(parts[i].remain);
    next.shard_params.push_back(old.shard_params[i]);
  }
  const double total = static_cast<double>(next.total_size());
  auto unaffected = nn::zeros_like(checkpoint);
  for (std::size_t i = 0; i < tau; ++i) {
    if (std::find(affected.begin(), affected.end(), i) != affected.end()) continue;
    nn::axpy(static_cast<double>(old.shards[i].size()) / total, old.shard_params[i],
             unaffected);
  }
  if (nr == 1) {
    const std::size_t j = new_index[report.retrained[0]];
    next.shard_params[j] = recover_shard_params(next, retrained[0], j);
  } else if (nr > 1) {
    // Each retrained model stands in for the whole client; the recovered
    // shard params make the recombination equal their size-weighted mean.
    double affected_size = 0.0;
    for (std::size_t i : report.retrained) {
      affected_size += static_cast<double>(parts[i].remain.size());
    }
    for (std::size_t k = 0; k < nr; ++k) {
      nn::ParameterVector theta = retrained[k];
      nn::axpy(-1.0, unaffected, theta);
      for (double& v : theta.values) v *= total / affected_size;
      next.shard_params[new_index[report.retrained[k]]] = std::move(theta);
    }
  }

  state.shards = std::move(next);
  state.data = std::move(split.remain);
  state.forget = {};
  state.params = recombine_shards(*state.shards);
  return report;
}

}  // namespace goldfish::unlearn
