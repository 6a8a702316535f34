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

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "eprsim/dsp.hpp"
#include "eprsim/error.hpp"
#include "eprsim/trace_synth.hpp"
#include "eprsim/units.hpp"

namespace eprsim {

/// Autocovariance r[0..n-1] of the stationary process with per-sample PSD `psd`
/// as realised by the circulant embedding in ColoredNoiseShaper.
inline std::vector<double> autocovariance_from_psd(const PsdFunction& psd, std::size_t n,
                                                   double sample_rate) {
  const std::size_t m = embedding_length(n);
  const double md = static_cast<double>(m);
  std::vector<double> s(m / 2 + 1);
  for (std::size_t k = 0; k <= m / 2; ++k) s[k] = psd(static_cast<double>(k) * sample_rate / md);
  std::vector<double> r(n);
  for (std::size_t tau = 0; tau < n; ++tau) {
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t kk = k <= m / 2 ? k : m - k;
      acc += s[kk] * std::cos(kTwoPi * static_cast<double>(k * tau % m) / md);
    }
    r[tau] = acc / md;
  }
  return r;
}

/// Expected output of the spectral and mode estimators for a stationary input,
/// including the per-trace detrending. Expectations are divided by the
/// response to unit white noise, so a flat PSD c maps to c exactly.
class EstimatorResponse {
 public:
  EstimatorResponse(std::size_t n_samples, double sample_rate, bool detrended,
                    Window window = Window::kRectangular)
      : n_(n_samples), fs_(sample_rate) {
    require(n_samples >= 3, "EstimatorResponse: need at least three samples");
    projection_ = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n_),
                                            static_cast<Eigen::Index>(n_));
    if (detrended) {
      Eigen::MatrixXd x(static_cast<Eigen::Index>(n_), 2);
      for (std::size_t t = 0; t < n_; ++t) {
        x(static_cast<Eigen::Index>(t), 0) = 1.0;
        x(static_cast<Eigen::Index>(t), 1) = static_cast<double>(t);
      }
      projection_ -= x * (x.transpose() * x).ldlt().solve(x.transpose());
    }
    const std::vector<double> w = window_weights(window, n_);
    const std::size_t bins = n_ / 2;
    bin_vectors_.resize(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(bins));
    for (std::size_t k = 1; k <= bins; ++k) {
      Eigen::VectorXcd e(static_cast<Eigen::Index>(n_));
      for (std::size_t t = 0; t < n_; ++t) {
        e(static_cast<Eigen::Index>(t)) =
            w[t] * std::polar(1.0, -kTwoPi * static_cast<double>(k * t) / static_cast<double>(n_));
      }
      bin_vectors_.col(static_cast<Eigen::Index>(k - 1)) = projection_.cast<std::complex<double>>() * e;
    }
    white_bins_ = bin_quadratic(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n_),
                                                          static_cast<Eigen::Index>(n_)));
  }

  std::size_t n_samples() const { return n_; }

  /// Bin frequencies for bins 1..n/2 (Hz).
  std::vector<double> bin_frequencies() const {
    std::vector<double> f;
    for (std::size_t k = 1; k <= n_ / 2; ++k) {
      f.push_back(static_cast<double>(k) * fs_ / static_cast<double>(n_));
    }
    return f;
  }

  /// Expected normalised periodogram for bins 1..n/2.
  std::vector<double> spectrum(const PsdFunction& psd) const {
    const auto c = covariance(psd);
    const std::vector<double> raw = bin_quadratic(c);
    std::vector<double> out(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) out[k] = raw[k] / white_bins_[k];
    return out;
  }

  /// Expected normalised variance of the sine-mixed mode at f0.
  double mode_variance(const PsdFunction& psd, double f0_hz) const {
    Eigen::VectorXd kernel(static_cast<Eigen::Index>(n_));
    for (std::size_t t = 0; t < n_; ++t) {
      kernel(static_cast<Eigen::Index>(t)) =
          std::sin(kTwoPi * f0_hz * static_cast<double>(t) / fs_);
    }
    const Eigen::VectorXd v = projection_ * kernel;
    return v.dot(covariance(psd) * v) / v.squaredNorm();
  }

 private:
  Eigen::MatrixXd covariance(const PsdFunction& psd) const {
    const std::vector<double> r = autocovariance_from_psd(psd, n_, fs_);
    Eigen::MatrixXd c(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[i > j ? i - j : j - i];
      }
    }
    return c;
  }

  std::vector<double> bin_quadratic(const Eigen::MatrixXd& c) const {
    const Eigen::MatrixXcd cv = c.cast<std::complex<double>>() * bin_vectors_;
    std::vector<double> out(static_cast<std::size_t>(bin_vectors_.cols()));
    for (Eigen::Index k = 0; k < bin_vectors_.cols(); ++k) {
      out[static_cast<std::size_t>(k)] = bin_vectors_.col(k).dot(cv.col(k)).real();
    }
    return out;
  }

  std::size_t n_;
  double fs_;
  Eigen::MatrixXd projection_;
  Eigen::MatrixXcd bin_vectors_;
  std::vector<double> white_bins_;
};

}  // namespace eprsim
