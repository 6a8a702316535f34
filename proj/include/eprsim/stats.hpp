// Copyright 2026 The eprsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "eprsim/error.hpp"

namespace eprsim {

/// Pairwise summation with a fixed split, so results do not depend on threading.
inline double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 16;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

inline double mean(std::span<const double> values) {
  require(!values.empty(), "mean: empty input");
  return pairwise_sum(values) / static_cast<double>(values.size());
}

/// Unbiased sample variance.
inline double sample_variance(std::span<const double> values) {
  require(values.size() >= 2, "sample_variance: need at least two values");
  const double m = mean(values);
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - m) * (values[i] - m);
  return pairwise_sum(sq) / static_cast<double>(values.size() - 1);
}

/// An estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// Sample variance with its delete-one jackknife standard error, O(n).
inline Estimate variance_with_jackknife(std::span<const double> values) {
  const std::size_t n = values.size();
  require(n >= 3, "variance_with_jackknife: need at least three values");
  const double m = mean(values);
  std::vector<double> centered(n);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    centered[i] = values[i] - m;
    sq[i] = centered[i] * centered[i];
  }
  const double s1 = pairwise_sum(centered);
  const double s2 = pairwise_sum(sq);
  const double nm1 = static_cast<double>(n - 1);
  const double nm2 = static_cast<double>(n - 2);
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mean_i = (s1 - centered[i]) / nm1;
    loo[i] = (s2 - sq[i] - nm1 * mean_i * mean_i) / nm2;
  }
  const double loo_mean = mean(loo);
  for (auto& v : loo) v = (v - loo_mean) * (v - loo_mean);
  const double se = std::sqrt(nm1 / static_cast<double>(n) * pairwise_sum(loo));
  return {(s2 - s1 * s1 / static_cast<double>(n)) / nm1, se};
}

/// Sample covariance of paired values with its delete-one jackknife standard error, O(n).
inline Estimate covariance_with_jackknife(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  require(n >= 3 && y.size() == n, "covariance_with_jackknife: need >= 3 paired values");
  const double mx = mean(x);
  const double my = mean(y);
  std::vector<double> cx(n), cy(n), cxy(n);
  for (std::size_t i = 0; i < n; ++i) {
    cx[i] = x[i] - mx;
    cy[i] = y[i] - my;
    cxy[i] = cx[i] * cy[i];
  }
  const double sx = pairwise_sum(cx);
  const double sy = pairwise_sum(cy);
  const double sxy = pairwise_sum(cxy);
  const double nm1 = static_cast<double>(n - 1);
  const double nm2 = static_cast<double>(n - 2);
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mx_i = (sx - cx[i]) / nm1;
    const double my_i = (sy - cy[i]) / nm1;
    loo[i] = (sxy - cxy[i] - nm1 * mx_i * my_i) / nm2;
  }
  const double loo_mean = mean(loo);
  for (auto& v : loo) v = (v - loo_mean) * (v - loo_mean);
  const double se = std::sqrt(nm1 / static_cast<double>(n) * pairwise_sum(loo));
  return {(sxy - sx * sy / static_cast<double>(n)) / nm1, se};
}

/// (signal - a*electronic) / (shot - electronic) with first-order error propagation
/// over three independent estimates.
inline Estimate normalized_ratio(const Estimate& signal, const Estimate& shot,
                                 const Estimate& electronic, double electronic_weight) {
  const double den = shot.value - electronic.value;
  if (!(den > 0.0)) throw DataError("shot-noise level does not exceed electronic noise");
  const double num = signal.value - electronic_weight * electronic.value;
  const double r = num / den;
  const double d_sig = 1.0 / den;
  const double d_shot = -r / den;
  const double d_el = (-electronic_weight + r) / den;
  const double var = d_sig * d_sig * signal.se * signal.se + d_shot * d_shot * shot.se * shot.se +
                     d_el * d_el * electronic.se * electronic.se;
  return {r, std::sqrt(var)};
}

struct RunsTestResult {
  std::size_t runs = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double z = 0.0;
  double p_value = 1.0;  // two-sided, normal approximation
};

/// Wald-Wolfowitz runs test on the signs of a residual sequence. Zeros are skipped.
inline RunsTestResult runs_test(std::span<const double> residuals) {
  RunsTestResult out;
  int previous = 0;
  for (double r : residuals) {
    if (r == 0.0) continue;
    const int sign = r > 0.0 ? 1 : -1;
    (sign > 0 ? out.positives : out.negatives)++;
    if (sign != previous) ++out.runs;
    previous = sign;
  }
  const double n1 = static_cast<double>(out.positives);
  const double n2 = static_cast<double>(out.negatives);
  const double n = n1 + n2;
  if (n1 == 0.0 || n2 == 0.0) {
    out.p_value = n < 2.0 ? 1.0 : 0.0;
    return out;
  }
  const double expected = 2.0 * n1 * n2 / n + 1.0;
  const double var = 2.0 * n1 * n2 * (2.0 * n1 * n2 - n) / (n * n * (n - 1.0));
  if (!(var > 0.0)) return out;
  out.z = (static_cast<double>(out.runs) - expected) / std::sqrt(var);
  out.p_value = std::erfc(std::abs(out.z) / std::sqrt(2.0));
  return out;
}

}  // namespace eprsim
