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

// Composite unlearning loss.
//
//   L = L_h + mu_c * L_c + mu_d * L_d,   L_h = L_r - L_f
//
// L_r / L_f are mean cross-entropies on the remaining / forgotten batch,
// L_c is the mean root-variance of the student's class probabilities on the
// forgotten batch, and L_d is the mean cross-entropy between the teacher's
// and the student's temperature-softened distributions on the remaining
// batch. Every term returns its gradient with respect to the student logits;
// the teacher is a constant.

#ifndef GOLDFISH_LOSS_H_
#define GOLDFISH_LOSS_H_

#include <cstddef>
#include <functional>
#include <span>

#include "goldfish/nn.h"

namespace goldfish::loss {

struct LossWeights {
  double mu_c = 0.25;
  double mu_d = 1.0;
  double T0 = 3.0;
  double temp_adjust = 0.36787944117144233;  // 1/e: no deletion gives T = T0
  bool adaptive_temp = true;
  bool forget_clamp = true;

  void validate() const;
};

struct SoftTargets {
  nn::Matrix probabilities;
  double temperature = 1.0;
};

struct TermResult {
  double value = 0.0;
  nn::Matrix grad;  // dValue / dLogits, same shape as the logits
};

// Per-sample hard loss: returns the loss and writes dLoss/dLogits into grad.
using PerSampleLoss =
    std::function<double(std::span<const double> logits, int label, std::span<double> grad)>;

double cross_entropy_sample(std::span<const double> logits, int label,
                            std::span<double> grad);

// Mean per-sample loss over a batch.
TermResult mean_sample_loss(const nn::Matrix& logits, std::span<const int> labels,
                            const PerSampleLoss& per_sample = cross_entropy_sample);

struct HardLoss {
  double total = 0.0;   // L_h = L_r - L_f
  double remain = 0.0;  // L_r
  double forget = 0.0;  // L_f
  nn::Matrix remain_grad;
  nn::Matrix forget_grad;
};

// With clamp on, each forget-side term is min(loss, ln(classes)) and stops
// contributing gradient once it reaches the bound. An empty forget batch
// gives L_f = 0.
HardLoss hard_loss(const nn::Matrix& logits_r, std::span<const int> labels_r,
                   const nn::Matrix& logits_f, std::span<const int> labels_f,
                   bool clamp, const PerSampleLoss& per_sample = cross_entropy_sample);

// Throws DomainError on an empty batch.
TermResult confusion_loss(const nn::Matrix& logits_f);

SoftTargets soft_targets(const nn::Matrix& teacher_logits, double temperature);

TermResult distillation_loss(const SoftTargets& targets, const nn::Matrix& student_logits,
                             double temperature);

// a * T0 * exp(size_r / (size_r + size_f)).
double adaptive_temperature(double T0, double adjust, std::size_t size_r,
                            std::size_t size_f);

// Temperature actually used for distillation: adaptive or T0, floored at 1
// (at T <= 1 soft labels are treated as hard).
double resolve_temperature(const LossWeights& weights, std::size_t size_r,
                           std::size_t size_f);

struct LossComponents {
  double remain = 0.0;     // L_r
  double forget = 0.0;     // L_f
  double hard = 0.0;       // L_h
  double confusion = 0.0;  // L_c
  double distill = 0.0;    // L_d
  double total = 0.0;      // L
};

struct TotalLoss {
  LossComponents parts;
  double temperature = 1.0;
  nn::Matrix remain_grad;
  nn::Matrix forget_grad;  // 0 x classes when the forget batch is empty
};

struct ClientSizes {
  std::size_t remain = 0;
  std::size_t forget = 0;
};

// Client-level sizes drive the adaptive temperature. An empty forget batch
// selects the retain-only form L = L_r + mu_d * L_d.
TotalLoss total_loss(const nn::Matrix& teacher_logits_r, const nn::Matrix& student_logits_r,
                     std::span<const int> labels_r, const nn::Matrix& student_logits_f,
                     std::span<const int> labels_f, const LossWeights& weights,
                     const ClientSizes& sizes);

}  // namespace goldfish::loss

#endif  // GOLDFISH_LOSS_H_
