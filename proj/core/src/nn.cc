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

#include "goldfish/nn.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "goldfish/error.h"

namespace goldfish::nn {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Offset of layer k's weight block inside the flat vector.
std::size_t layer_offset(const NetworkSpec& spec, std::size_t k) {
  std::size_t off = 0;
  for (std::size_t j = 0; j < k; ++j) {
    off += (spec.layer_sizes[j] + 1) * spec.layer_sizes[j + 1];
  }
  return off;
}

void check_params(const NetworkSpec& spec, const ParameterVector& params) {
  if (params.size() != spec.parameter_count()) {
    throw ShapeError("parameter vector has " + std::to_string(params.size()) +
                     " entries, network expects " +
                     std::to_string(spec.parameter_count()));
  }
  if (params.spec_digest != 0 && params.spec_digest != spec.digest()) {
    throw ShapeError("parameter vector was shaped by a different network spec");
  }
}

double activate(Activation act, double z) {
  switch (act) {
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
    case Activation::kTanh:
      return std::tanh(z);
  }
  return z;
}

// Derivative expressed through the pre-activation z and activation a.
double activate_grad(Activation act, double z, double a) {
  switch (act) {
    case Activation::kRelu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh:
      return 1.0 - a * a;
  }
  return 1.0;
}

}  // namespace

std::string to_string(Activation activation) {
  return activation == Activation::kRelu ? "relu" : "tanh";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + name + "'");
}

void NetworkSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw ConfigError("network needs at least an input and an output layer");
  }
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw ConfigError("layer size must be positive");
  }
  if (layer_sizes.back() < 2) {
    throw ConfigError("network needs at least two output classes");
  }
}

std::size_t NetworkSpec::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
    n += (layer_sizes[k] + 1) * layer_sizes[k + 1];
  }
  return n;
}

std::uint64_t NetworkSpec::digest() const {
  std::ostringstream os;
  os << "mlp:";
  for (std::size_t k = 0; k < layer_sizes.size(); ++k) {
    if (k) os << ',';
    os << layer_sizes[k];
  }
  os << ':' << to_string(activation);
  return fnv1a(os.str());
}

ParameterVector zeros_like(const ParameterVector& p) {
  return ParameterVector{std::vector<double>(p.size(), 0.0), p.spec_digest};
}

void axpy(double a, const ParameterVector& x, ParameterVector& y) {
  if (x.size() != y.size()) throw ShapeError("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y.values[i] += a * x.values[i];
}

bool all_finite(const ParameterVector& p) {
  return std::all_of(p.values.begin(), p.values.end(),
                     [](double v) { return std::isfinite(v); });
}

ParameterVector init_network(const NetworkSpec& spec) {
  spec.validate();
  ParameterVector params{std::vector<double>(spec.parameter_count(), 0.0),
                         spec.digest()};
  std::mt19937_64 rng(spec.seed);
  std::size_t off = 0;
  for (std::size_t k = 0; k < spec.num_layers(); ++k) {
    const std::size_t fan_in = spec.layer_sizes[k];
    const std::size_t fan_out = spec.layer_sizes[k + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < fan_in * fan_out; ++i) {
      params.values[off + i] = dist(rng);
    }
    off += (fan_in + 1) * fan_out;  // biases stay zero
  }
  return params;
}

ForwardTrace forward(const NetworkSpec& spec, const ParameterVector& params,
                     const Matrix& batch) {
  check_params(spec, params);
  if (batch.cols() != spec.input_dim()) {
    throw ShapeError("batch has " + std::to_string(batch.cols()) +
                     " columns, network input is " +
                     std::to_string(spec.input_dim()));
  }
  const std::size_t rows = batch.rows();
  const std::size_t layers = spec.num_layers();

  ForwardTrace trace;
  trace.activations.reserve(layers + 1);
  trace.pre_activations.reserve(layers);
  trace.activations.push_back(batch);

  const double* w = params.values.data();
  for (std::size_t k = 0; k < layers; ++k) {
    const std::size_t fan_in = spec.layer_sizes[k];
    const std::size_t fan_out = spec.layer_sizes[k + 1];
    const double* bias = w + fan_in * fan_out;
    const Matrix& in = trace.activations.back();

    Matrix z(rows, fan_out);
    for (std::size_t r = 0; r < rows; ++r) {
      double* zr = z.row(r).data();
      std::copy(bias, bias + fan_out, zr);
      const double* ar = in.row(r).data();
      for (std::size_t i = 0; i < fan_in; ++i) {
        const double a = ar[i];
        if (a == 0.0) continue;
        const double* wi = w + i * fan_out;
        for (std::size_t o = 0; o < fan_out; ++o) zr[o] += a * wi[o];
      }
    }

    if (k + 1 < layers) {
      Matrix a(rows, fan_out);
      auto zd = z.data();
      auto ad = a.data();
      for (std::size_t i = 0; i < zd.size(); ++i) ad[i] = activate(spec.activation, zd[i]);
      trace.pre_activations.push_back(std::move(z));
      trace.activations.push_back(std::move(a));
    } else {
      trace.pre_activations.push_back(std::move(z));
    }
    w += (fan_in + 1) * fan_out;
  }
  return trace;
}

ParameterVector backward(const NetworkSpec& spec, const ParameterVector& params,
                         const ForwardTrace& trace, const Matrix& logit_grad) {
  check_params(spec, params);
  const std::size_t layers = spec.num_layers();
  if (trace.pre_activations.size() != layers ||
      trace.activations.size() != layers) {
    throw ShapeError("forward trace does not match network depth");
  }
  const Matrix& logits = trace.logits();
  if (logit_grad.rows() != logits.rows() || logit_grad.cols() != logits.cols()) {
    throw ShapeError("logit gradient shape does not match logits");
  }

  ParameterVector grad = zeros_like(params);
  grad.spec_digest = spec.digest();
  const std::size_t rows = logits.rows();

  Matrix delta = logit_grad;
  for (std::size_t k = layers; k-- > 0;) {
    const std::size_t fan_in = spec.layer_sizes[k];
    const std::size_t fan_out = spec.layer_sizes[k + 1];
    const std::size_t off = layer_offset(spec, k);
    const Matrix& in = trace.activations[k];

    double* gw = grad.values.data() + off;
    double* gb = gw + fan_in * fan_out;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* dr = delta.row(r).data();
      const double* ar = in.row(r).data();
      for (std::size_t i = 0; i < fan_in; ++i) {
        const double a = ar[i];
        if (a == 0.0) continue;
        double* gwi = gw + i * fan_out;
        for (std::size_t o = 0; o < fan_out; ++o) gwi[o] += a * dr[o];
      }
      for (std::size_t o = 0; o < fan_out; ++o) gb[o] += dr[o];
    }

    if (k == 0) break;

    const double* w = params.values.data() + off;
    const Matrix& z_prev = trace.pre_activations[k - 1];
    Matrix next(rows, fan_in);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* dr = delta.row(r).data();
      double* nr = next.row(r).data();
      for (std::size_t i = 0; i < fan_in; ++i) {
        const double* wi = w + i * fan_out;
        double s = 0.0;
        for (std::size_t o = 0; o < fan_out; ++o) s += wi[o] * dr[o];
        nr[i] = s * activate_grad(spec.activation, z_prev(r, i), in(r, i));
      }
    }
    delta = std::move(next);
  }
  return grad;
}

std::vector<double> softmax_t(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) {
    throw DomainError("softmax temperature must be positive");
  }
  if (logits.empty()) return {};
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    p[j] = std::exp((logits[j] - mx) / temperature);
    sum += p[j];
  }
  for (double& v : p) v /= sum;
  return p;
}

Matrix softmax_rows(const Matrix& logits, double temperature) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto p = softmax_t(logits.row(r), temperature);
    std::copy(p.begin(), p.end(), out.row(r).begin());
  }
  return out;
}

OptimizerState OptimizerState::fresh(std::size_t size, double learning_rate,
                                     double beta) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  return OptimizerState{std::vector<double>(size, 0.0), learning_rate, beta};
}

void sgd_step(ParameterVector& params, const ParameterVector& grad,
              OptimizerState& state) {
  if (params.size() != grad.size() || params.size() != state.momentum.size()) {
    throw ShapeError("sgd_step: parameter, gradient and buffer lengths differ");
  }
  const double lr = state.learning_rate;
  const double beta = state.beta;
  double* buf = state.momentum.data();
  double* p = params.values.data();
  const double* g = grad.values.data();
  for (std::size_t i = 0; i < params.size(); ++i) {
    buf[i] = beta * buf[i] + g[i];
    p[i] -= lr * buf[i];
  }
}

}  // namespace goldfish::nn
