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

// Reference implementations used only by tests. They share no code with the
// library: plain loops, direct formulas and numerical quadrature.

#ifndef GOLDFISH_TESTS_SUPPORT_ORACLES_H_
#define GOLDFISH_TESTS_SUPPORT_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace goldfish::oracle {

using Rows = std::vector<std::vector<double>>;

// Dense MLP with [fan_in][fan_out] weights followed by the bias, per layer.
inline Rows mlp_logits(const std::vector<std::size_t>& sizes, bool relu,
                       const std::vector<double>& params, const Rows& x) {
  Rows out;
  for (const auto& row : x) {
    std::vector<double> a = row;
    std::size_t off = 0;
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
      const std::size_t in = sizes[k];
      const std::size_t outn = sizes[k + 1];
      std::vector<double> z(outn);
      for (std::size_t o = 0; o < outn; ++o) {
        double s = params[off + in * outn + o];
        for (std::size_t i = 0; i < in; ++i) s += a[i] * params[off + i * outn + o];
        z[o] = s;
      }
      off += in * outn + outn;
      if (k + 2 < sizes.size()) {
        for (double& v : z) v = relu ? std::max(0.0, v) : std::tanh(v);
      }
      a = std::move(z);
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline std::vector<double> softmax(const std::vector<double>& z, double t = 1.0) {
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += std::exp(z[i] / t);
  for (std::size_t i = 0; i < z.size(); ++i) p[i] = std::exp(z[i] / t) / s;
  return p;
}

// Central differences of f at x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double eps = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = f(x);
    x[i] = keep - eps;
    const double dn = f(x);
    x[i] = keep;
    g[i] = (up - dn) / (2 * eps);
  }
  return g;
}

// ||a - b|| / (||a|| + ||b||)
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(na) + std::sqrt(nb);
  return denom == 0.0 ? 0.0 : std::sqrt(d) / denom;
}

// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      std::size_t n = 20000) {
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4 : 2);
  return s * h / 3.0;
}

// Two-sided Student-t tail, 1 - integral of the density over [-|t|, |t|].
inline double t_two_sided(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) /
                   std::sqrt(df * M_PI);
  auto pdf = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  return 1.0 - 2.0 * simpson(pdf, 0.0, std::abs(t));
}

struct Welch {
  double t, df, p;
};

inline Welch welch(const std::vector<double>& a, const std::vector<double>& b) {
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  auto var = [&](const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
  };
  const double va = var(a) / static_cast<double>(a.size());
  const double vb = var(b) / static_cast<double>(b.size());
  const double t = (mean(a) - mean(b)) / std::sqrt(va + vb);
  const double df = (va + vb) * (va + vb) /
                    (va * va / static_cast<double>(a.size() - 1) +
                     vb * vb / static_cast<double>(b.size() - 1));
  return {t, df, t_two_sided(t, df)};
}

// Natural-log Jensen-Shannon divergence with 0 log 0 = 0.
inline double jsd(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) s += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0) s += 0.5 * q[i] * std::log(q[i] / m);
  }
  return s;
}

}  // namespace goldfish::oracle

#endif  // GOLDFISH_TESTS_SUPPORT_ORACLES_H_
