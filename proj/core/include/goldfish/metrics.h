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

#ifndef GOLDFISH_METRICS_H_
#define GOLDFISH_METRICS_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "goldfish/data.h"
#include "goldfish/loss.h"
#include "goldfish/nn.h"

namespace goldfish::eval {

// Percent of argmax-correct predictions.
double accuracy(const nn::NetworkSpec& spec, const nn::ParameterVector& params,
                const data::LabeledDataset& test);

// Percent of all examples misclassified, split by true class. Together with
// accuracy() the entries sum to 100.
std::vector<double> class_error_breakdown(const nn::NetworkSpec& spec,
                                          const nn::ParameterVector& params,
                                          const data::LabeledDataset& test);

// Stamps the trigger on every example and reports the percent predicted as
// the target label. Every example must have a true label other than the
// target.
double backdoor_success_rate(const nn::NetworkSpec& spec, const nn::ParameterVector& params,
                             const data::LabeledDataset& clean_nontarget_test,
                             const data::BackdoorSpec& backdoor);

double l2_distance(std::span<const double> a, std::span<const double> b);
double l2_distance(const nn::ParameterVector& a, const nn::ParameterVector& b);

// Mean softmax (T = 1) class distribution over a set.
std::vector<double> mean_prediction(const nn::NetworkSpec& spec,
                                    const nn::ParameterVector& params,
                                    const data::LabeledDataset& set);

// Per-example max softmax probability.
std::vector<double> max_confidences(const nn::NetworkSpec& spec,
                                    const nn::ParameterVector& params,
                                    const data::LabeledDataset& set);

// Jensen-Shannon divergence in nats, in [0, ln 2]. Inputs must be
// non-negative and sum to 1 within 1e-9.
double jsd(std::span<const double> p, std::span<const double> q);

// I_x(a, b), continued fraction with lgamma prefactor.
double regularized_incomplete_beta(double a, double b, double x);

// P(|T| >= |t|) for Student's t with `df` (real) degrees of freedom.
double student_t_two_sided(double t, double df);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

// Two-sided Welch test. Both samples need >= 2 values. If both variances are
// zero the result is p = 1 for equal means and p = 0 otherwise.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

struct MetricsRecord {
  std::size_t round = 0;
  double accuracy = 0.0;
  double backdoor = 0.0;
  loss::LossComponents loss;
  double jsd = 0.0;
  double l2 = 0.0;
  double p_value = 1.0;
  double seconds = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "round,acc,backdoor,l_r,l_f,l_c,l_d,l_total,jsd,l2,p_value,seconds";

// Formats a float with 6 decimals; NaN is written as `nan`.
std::string format_fixed(double v);

std::string format_csv(std::span<const MetricsRecord> records);

// Throws IoError if the file cannot be written.
void emit_csv(std::span<const MetricsRecord> records, const std::filesystem::path& path);

}  // namespace goldfish::eval

#endif  // GOLDFISH_METRICS_H_
