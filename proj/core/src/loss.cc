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

#include <algorithm>
#include <cmath>
#include <string>

#include "goldfish/error.h"

namespace goldfish::loss {

namespace {

void check_labels(const nn::Matrix& logits, std::span<const int> labels) {
  if (logits.rows() != labels.size()) {
    throw ShapeError("logit rows and label count differ");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols()) {
      throw DomainError("label " + std::to_string(y) + " outside class range");
    }
  }
}

// log-sum-exp of logits / T, max-shifted.
double log_partition(std::span<const double> z, double temperature) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp((v - mx) / temperature);
  return mx / temperature + std::log(s);
}

}  // namespace

void LossWeights::validate() const {
  if (!(mu_c >= 0.0) || !(mu_d >= 0.0)) {
    throw ConfigError("loss weights mu_c and mu_d must be non-negative");
  }
  if (!(T0 > 0.0)) throw ConfigError("initial temperature must be positive");
  if (!(temp_adjust > 0.0)) throw ConfigError("temperature adjustment must be positive");
}

double cross_entropy_sample(std::span<const double> logits, int label,
                            std::span<double> grad) {
  const double lz = log_partition(logits, 1.0);
  for (std::size_t j = 0; j < logits.size(); ++j) {
    grad[j] = std::exp(logits[j] - lz);
  }
  grad[static_cast<std::size_t>(label)] -= 1.0;
  return lz - logits[static_cast<std::size_t>(label)];
}

TermResult mean_sample_loss(const nn::Matrix& logits, std::span<const int> labels,
                            const PerSampleLoss& per_sample) {
  check_labels(logits, labels);
  TermResult out{0.0, nn::Matrix(logits.rows(), logits.cols())};
  if (logits.rows() == 0) return out;
  const double inv = 1.0 / static_cast<double>(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    out.value += per_sample(logits.row(r), labels[r], out.grad.row(r));
    for (double& g : out.grad.row(r)) g *= inv;
  }
  out.value *= inv;
  return out;
}

HardLoss hard_loss(const nn::Matrix& logits_r, std::span<const int> labels_r,
                   const nn::Matrix& logits_f, std::span<const int> labels_f,
                   bool clamp, const PerSampleLoss& per_sample) {
  HardLoss out;
  auto remain = mean_sample_loss(logits_r, labels_r, per_sample);
  out.remain = remain.value;
  out.remain_grad = std::move(remain.grad);

  check_labels(logits_f, labels_f);
  out.forget_grad = nn::Matrix(logits_f.rows(), logits_f.cols());
  if (logits_f.rows() > 0) {
    const double bound = std::log(static_cast<double>(logits_f.cols()));
    const double inv = 1.0 / static_cast<double>(logits_f.rows());
    std::vector<double> g(logits_f.cols());
    for (std::size_t r = 0; r < logits_f.rows(); ++r) {
      const double l = per_sample(logits_f.row(r), labels_f[r], g);
      if (clamp && l >= bound) {
        out.forget += bound;  // saturated: no gradient
        continue;
      }
      out.forget += l;
      // L_h = L_r - L_f, so the forget side enters with a minus sign.
      auto gr = out.forget_grad.row(r);
      for (std::size_t j = 0; j < g.size(); ++j) gr[j] = -g[j] * inv;
    }
    out.forget *= inv;
  }
  out.total = out.remain - out.forget;
  return out;
}

TermResult confusion_loss(const nn::Matrix& logits_f) {
  if (logits_f.rows() == 0) throw DomainError("confusion loss needs a nonempty batch");
  const std::size_t k = logits_f.cols();
  const double inv_k = 1.0 / static_cast<double>(k);
  const double inv_n = 1.0 / static_cast<double>(logits_f.rows());
  TermResult out{0.0, nn::Matrix(logits_f.rows(), k)};
  std::vector<double> g(k);
  for (std::size_t r = 0; r < logits_f.rows(); ++r) {
    const auto p = nn::softmax_t(logits_f.row(r), 1.0);
    // Probabilities average exactly 1/k, so the population variance is
    // centred on 1/k.
    double var = 0.0;
    for (double v : p) var += (v - inv_k) * (v - inv_k);
    var *= inv_k;
    const double sd = std::sqrt(var);
    out.value += sd;
    if (sd == 0.0) continue;  // uniform prediction: flat minimum, zero subgradient
    // d sd / d p_j = (p_j - 1/k) / (k * sd); then through the softmax.
    double dot = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      g[j] = (p[j] - inv_k) * inv_k / sd;
      dot += g[j] * p[j];
    }
    auto gr = out.grad.row(r);
    for (std::size_t j = 0; j < k; ++j) gr[j] = p[j] * (g[j] - dot) * inv_n;
  }
  out.value *= inv_n;
  return out;
}

SoftTargets soft_targets(const nn::Matrix& teacher_logits, double temperature) {
  return {nn::softmax_rows(teacher_logits, temperature), temperature};
}

TermResult distillation_loss(const SoftTargets& targets, const nn::Matrix& student_logits,
                             double temperature) {
  if (!(temperature > 0.0)) throw DomainError("distillation temperature must be positive");
  const auto& q = targets.probabilities;
  if (q.rows() != student_logits.rows() || q.cols() != student_logits.cols()) {
    throw ShapeError("soft targets and student logits differ in shape");
  }
  TermResult out{0.0, nn::Matrix(q.rows(), q.cols())};
  if (q.rows() == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(q.rows());
  for (std::size_t r = 0; r < q.rows(); ++r) {
    auto z = student_logits.row(r);
    const double lz = log_partition(z, temperature);
    auto qr = q.row(r);
    auto gr = out.grad.row(r);
    double ce = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double log_p = z[j] / temperature - lz;
      if (qr[j] > 0.0) ce -= qr[j] * log_p;
      gr[j] = (std::exp(log_p) - qr[j]) / temperature * inv_n;
    }
    out.value += ce;
  }
  out.value *= inv_n;
  return out;
}

double adaptive_temperature(double T0, double adjust, std::size_t size_r,
                            std::size_t size_f) {
  if (size_r + size_f == 0) throw DomainError("adaptive temperature needs data");
  if (!(T0 > 0.0) || !(adjust > 0.0)) {
    throw DomainError("temperature parameters must be positive");
  }
  const double ratio =
      static_cast<double>(size_r) / static_cast<double>(size_r + size_f);
  return adjust * T0 * std::exp(ratio);
}

double resolve_temperature(const LossWeights& weights, std::size_t size_r,
                           std::size_t size_f) {
  const double t = weights.adaptive_temp
                       ? adaptive_temperature(weights.T0, weights.temp_adjust, size_r, size_f)
                       : weights.T0;
  return std::max(t, 1.0);
}

TotalLoss total_loss(const nn::Matrix& teacher_logits_r, const nn::Matrix& student_logits_r,
                     std::span<const int> labels_r, const nn::Matrix& student_logits_f,
                     std::span<const int> labels_f, const LossWeights& weights,
                     const ClientSizes& sizes) {
  weights.validate();
  if (student_logits_r.rows() == 0) throw PreconditionError("remain batch is empty");
  TotalLoss out;
  out.temperature = resolve_temperature(weights, sizes.remain, sizes.forget);

  const bool has_forget = student_logits_f.rows() > 0;
  auto hard = hard_loss(student_logits_r, labels_r, student_logits_f, labels_f,
                        weights.forget_clamp);
  out.parts.remain = hard.remain;
  out.parts.forget = hard.forget;
  out.parts.hard = hard.total;
  out.remain_grad = std::move(hard.remain_grad);
  out.forget_grad = std::move(hard.forget_grad);

  // Terms with zero weight are skipped entirely so that the retain-only form
  // with mu = 0 reproduces plain cross-entropy bit for bit.
  if (weights.mu_d != 0.0) {
    auto targets = soft_targets(teacher_logits_r, out.temperature);
    auto d = distillation_loss(targets, student_logits_r, out.temperature);
    out.parts.distill = d.value;
    auto g = out.remain_grad.data();
    auto dg = d.grad.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += weights.mu_d * dg[i];
  }
  if (has_forget && weights.mu_c != 0.0) {
    auto c = confusion_loss(student_logits_f);
    out.parts.confusion = c.value;
    auto g = out.forget_grad.data();
    auto cg = c.grad.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += weights.mu_c * cg[i];
  }
  out.parts.total = out.parts.hard + weights.mu_c * out.parts.confusion +
                    weights.mu_d * out.parts.distill;
  return out;
}

}  // namespace goldfish::loss
