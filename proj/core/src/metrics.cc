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

#include "goldfish/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "goldfish/error.h"

namespace goldfish::eval {

namespace {

constexpr std::size_t kChunk = 256;

// Calls visit(position, probability row) for every example.
template <typename Visit>
void for_each_prediction(const nn::NetworkSpec& spec, const nn::ParameterVector& params,
                         const data::LabeledDataset& set, Visit visit) {
  std::vector<std::size_t> pos(set.size());
  std::iota(pos.begin(), pos.end(), 0);
  for (std::size_t start = 0; start < set.size(); start += kChunk) {
    std::span<const std::size_t> p(pos.data() + start, std::min(kChunk, set.size() - start));
    const auto probs = nn::softmax_rows(nn::forward(spec, params, set.gather(p)).logits(), 1.0);
    for (std::size_t r = 0; r < p.size(); ++r) visit(p[r], probs.row(r));
  }
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void check_distribution(std::span<const double> p) {
  double s = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw DomainError("distribution has a negative or NaN entry");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9) throw DomainError("distribution does not sum to 1");
}

// KL(p || m) with 0 log 0 = 0.
double kl(std::span<const double> p, const std::vector<double>& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / m[i]);
  }
  return s;
}

// Continued fraction for I_x(a, b); converges for x < (a + 1) / (a + b + 2).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

std::pair<double, double> mean_var(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, ss / (n - 1.0)};
}

}  // namespace

double accuracy(const nn::NetworkSpec& spec, const nn::ParameterVector& params,
                const data::LabeledDataset& test) {
  if (test.empty()) throw PreconditionError("accuracy needs a nonempty test set");
  std::size_t correct = 0;
  for_each_prediction(spec, params, test, [&](std::size_t i, std::span<const double> p) {
    if (argmax(p) == static_cast<std::size_t>(test.label(i))) ++correct;
  });
  return 100.0 * static_cast<double>(correct) / static_cast<double>(test.size());
}

std::vector<double> class_error_breakdown(const nn::NetworkSpec& spec,
                                          const nn::ParameterVector& params,
                                          const data::LabeledDataset& test) {
  if (test.empty()) throw PreconditionError("error breakdown needs a nonempty test set");
  std::vector<std::size_t> wrong(spec.num_classes(), 0);
  for_each_prediction(spec, params, test, [&](std::size_t i, std::span<const double> p) {
    const auto y = static_cast<std::size_t>(test.label(i));
    if (argmax(p) != y) ++wrong[y];
  });
  std::vector<double> out(wrong.size());
  for (std::size_t c = 0; c < wrong.size(); ++c) {
    out[c] = 100.0 * static_cast<double>(wrong[c]) / static_cast<double>(test.size());
  }
  return out;
}

double backdoor_success_rate(const nn::NetworkSpec& spec, const nn::ParameterVector& params,
                             const data::LabeledDataset& clean_nontarget_test,
                             const data::BackdoorSpec& backdoor) {
  if (clean_nontarget_test.empty()) {
    throw PreconditionError("backdoor evaluation needs a nonempty non-target set");
  }
  for (std::size_t i = 0; i < clean_nontarget_test.size(); ++i) {
    if (clean_nontarget_test.label(i) == backdoor.target_label) {
      throw PreconditionError("backdoor evaluation set contains target-label examples");
    }
  }
  const auto stamped = data::apply_trigger(clean_nontarget_test, backdoor);
  const auto target = static_cast<std::size_t>(backdoor.target_label);
  std::size_t hits = 0;
  for_each_prediction(spec, params, stamped, [&](std::size_t, std::span<const double> p) {
    if (argmax(p) == target) ++hits;
  });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(stamped.size());
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("l2_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double l2_distance(const nn::ParameterVector& a, const nn::ParameterVector& b) {
  return l2_distance(std::span<const double>(a.values), std::span<const double>(b.values));
}

std::vector<double> mean_prediction(const nn::NetworkSpec& spec,
                                    const nn::ParameterVector& params,
                                    const data::LabeledDataset& set) {
  if (set.empty()) throw PreconditionError("mean prediction needs a nonempty set");
  std::vector<double> mean(spec.num_classes(), 0.0);
  for_each_prediction(spec, params, set, [&](std::size_t, std::span<const double> p) {
    for (std::size_t j = 0; j < p.size(); ++j) mean[j] += p[j];
  });
  for (double& v : mean) v /= static_cast<double>(set.size());
  return mean;
}

std::vector<double> max_confidences(const nn::NetworkSpec& spec,
                                    const nn::ParameterVector& params,
                                    const data::LabeledDataset& set) {
  std::vector<double> out(set.size());
  for_each_prediction(spec, params, set, [&](std::size_t i, std::span<const double> p) {
    out[i] = *std::max_element(p.begin(), p.end());
  });
  return out;
}

double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("jsd: length mismatch");
  check_distribution(p);
  check_distribution(q);
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  const double v = 0.5 * kl(p, m) + 0.5 * kl(q, m);
  return std::clamp(v, 0.0, std::log(2.0));
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta needs x in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
  if (!(df > 0.0)) throw DomainError("t distribution needs df > 0");
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DomainError("t-test needs two samples of size >= 2");
  const auto [ma, va] = mean_var(a);
  const auto [mb, vb] = mean_var(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double sa = va / na;
  const double sb = vb / nb;
  const double se2 = sa + sb;
  TTestResult r;
  if (se2 == 0.0) {
    r.df = na + nb - 2.0;
    if (ma == mb) {
      r.t = 0.0;
      r.p_value = 1.0;
    } else {
      r.t = ma > mb ? std::numeric_limits<double>::infinity()
                    : -std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
    }
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  r.p_value = std::clamp(student_t_two_sided(r.t, r.df), 0.0, 1.0);
  return r;
}

std::string format_fixed(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  // Avoid "-0.000000" so that sign noise never changes the bytes.
  if (std::string(buf) == "-0.000000") return "0.000000";
  return buf;
}

std::string format_csv(std::span<const MetricsRecord> records) {
  std::string out = kMetricsHeader;
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.round);
    for (double v : {r.accuracy, r.backdoor, r.loss.remain, r.loss.forget, r.loss.confusion,
                     r.loss.distill, r.loss.total, r.jsd, r.l2, r.p_value, r.seconds}) {
      out += ',';
      out += format_fixed(v);
    }
    out += '\n';
  }
  return out;
}

void emit_csv(std::span<const MetricsRecord> records, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << format_csv(records);
  if (!f) throw IoError("write failed for " + path.string());
}

}  // namespace goldfish::eval
