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

// Dense multilayer perceptron with hand-written backpropagation.
//
// Parameters live in one flat ParameterVector so that aggregation, shard
// recombination, and checkpointing operate on plain vectors. For every layer
// k (fan_in = layer_sizes[k], fan_out = layer_sizes[k+1]) the vector holds a
// fan_in x fan_out weight block stored input-major (weight (i, o) at offset
// i * fan_out + o) followed by fan_out biases. Hidden layers apply the
// configured activation; the last layer emits raw logits.

#ifndef GOLDFISH_NN_H_
#define GOLDFISH_NN_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace goldfish::nn {

enum class Activation { kRelu, kTanh };

std::string to_string(Activation activation);
Activation parse_activation(const std::string& name);

struct NetworkSpec {
  // Input dimension, hidden widths..., number of classes.
  std::vector<std::size_t> layer_sizes;
  Activation activation = Activation::kRelu;
  std::uint64_t seed = 0;

  // Throws ConfigError unless there are >= 2 layers, no zero sizes and at
  // least two classes.
  void validate() const;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t num_classes() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return layer_sizes.size() - 1; }
  std::size_t parameter_count() const;

  // FNV-1a digest of the architecture (sizes + activation). The seed is not
  // part of the digest: it changes values, not shape.
  std::uint64_t digest() const;
};

struct ParameterVector {
  std::vector<double> values;
  std::uint64_t spec_digest = 0;

  std::size_t size() const { return values.size(); }
  bool operator==(const ParameterVector&) const = default;
};

ParameterVector zeros_like(const ParameterVector& p);
// y += a * x
void axpy(double a, const ParameterVector& x, ParameterVector& y);
bool all_finite(const ParameterVector& p);

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct ForwardTrace {
  // activations[0] is the input batch; activations[k] is the output of layer
  // k (post-activation for hidden layers). pre_activations[k-1] is the affine
  // output of layer k; the last one is the logits.
  std::vector<Matrix> activations;
  std::vector<Matrix> pre_activations;

  const Matrix& logits() const { return pre_activations.back(); }
  std::size_t batch_size() const { return activations.front().rows(); }
};

// Glorot-uniform weights, zero biases, deterministic in spec.seed.
ParameterVector init_network(const NetworkSpec& spec);

ForwardTrace forward(const NetworkSpec& spec, const ParameterVector& params,
                     const Matrix& batch);

// Gradient of a scalar loss w.r.t. every parameter given dLoss/dLogits.
ParameterVector backward(const NetworkSpec& spec, const ParameterVector& params,
                         const ForwardTrace& trace, const Matrix& logit_grad);

// Temperature softmax with max subtraction. Throws DomainError if T <= 0.
std::vector<double> softmax_t(std::span<const double> logits, double temperature);
// Row-wise softmax_t.
Matrix softmax_rows(const Matrix& logits, double temperature);

struct OptimizerState {
  std::vector<double> momentum;
  double learning_rate = 0.001;
  double beta = 0.9;

  static OptimizerState fresh(std::size_t size, double learning_rate, double beta);
};

// buffer <- beta * buffer + grad ; params <- params - lr * buffer
void sgd_step(ParameterVector& params, const ParameterVector& grad,
              OptimizerState& state);

}  // namespace goldfish::nn

#endif  // GOLDFISH_NN_H_
