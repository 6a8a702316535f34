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
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "eprsim/error.hpp"
#include "eprsim/gaussian.hpp"
#include "eprsim/units.hpp"

namespace eprsim {

enum class Quadrature { kX, kP };

/// Linear cavity described by its mirror and loss budget.
struct CavityGeometry {
  double coupler_transmission = 0.10;  // T_c
  double intracavity_loss = 0.0055;    // fractional power loss per round trip
  double round_trip_length = 0.320;    // m

  void validate() const {
    require(coupler_transmission >= 0.0 && coupler_transmission < 1.0,
            "CavityGeometry: coupler transmission must lie in [0, 1)");
    require(intracavity_loss >= 0.0 && intracavity_loss < 1.0,
            "CavityGeometry: intracavity loss must lie in [0, 1)");
    require(round_trip_length > 0.0, "CavityGeometry: round-trip length must be positive");
  }
};

/// Below-threshold OPO. Rates are angular (rad/s).
struct OpoParams {
  double gamma_c = 0.0;  // coupling mirror
  double gamma_l = 0.0;  // intracavity loss
  double gamma_s = 0.0;  // seed mirror; kept for bookkeeping only
  double epsilon = 0.0;  // pump rate
  double eta = 1.0;      // overall detection efficiency
  Quadrature squeezed = Quadrature::kX;

  double gamma() const { return gamma_c + gamma_l + gamma_s; }

  /// Parameters given only the total decay rate.
  static OpoParams from_total(double gamma, double epsilon, double eta) {
    OpoParams p;
    p.gamma_c = gamma;
    p.epsilon = epsilon;
    p.eta = eta;
    p.validate();
    return p;
  }

  void validate() const {
    require(gamma_c >= 0.0 && gamma_l >= 0.0 && gamma_s >= 0.0 && epsilon >= 0.0,
            "OpoParams: rates must be non-negative");
    require(epsilon < gamma() || (epsilon == 0.0 && gamma() == 0.0),
            "OpoParams: pump rate must stay below the total decay rate");
    require(eta >= 0.0 && eta <= 1.0, "OpoParams: eta must lie in [0, 1]");
  }
};

/// Total decay rate from mirror transmission, loss and round-trip time.
inline double decay_rate(const CavityGeometry& geom, double speed_of_light = kSpeedOfLight) {
  geom.validate();
  const double tau = geom.round_trip_length / speed_of_light;
  return ((1.0 - std::sqrt(1.0 - geom.coupler_transmission)) +
          (1.0 - std::sqrt(1.0 - geom.intracavity_loss))) /
         tau;
}

/// Pump rate for a pump power below threshold: gamma * sqrt(P / P_th).
inline double pump_rate(double pump_power, double threshold_power, double gamma) {
  require(threshold_power > 0.0, "pump_rate: threshold power must be positive");
  require(pump_power >= 0.0, "pump_rate: pump power must be non-negative");
  if (pump_power >= threshold_power) {
    throw ContractError("pump_rate: pump power at or above the oscillation threshold");
  }
  return gamma * std::sqrt(pump_power / threshold_power);
}

/// Product of stage efficiencies.
inline double efficiency_budget(const std::vector<double>& stages) {
  double eta = 1.0;
  for (double s : stages) {
    require(s >= 0.0 && s <= 1.0, "efficiency_budget: stage efficiency must lie in [0, 1]");
    eta *= s;
  }
  return eta;
}

// ---------------------------------------------------------------------------
// Seed noise
// ---------------------------------------------------------------------------

/// Seed-noise coefficients K_x(omega), K_p(omega) on an angular-frequency grid.
///
/// K is in absolute units times rad^2/s^2, so the added spectral term in
/// absolute units is K / ((gamma +- epsilon)^2 + omega^2). Lookups between
/// grid points interpolate linearly and clamp outside the grid.
class SeedNoiseModel {
 public:
  SeedNoiseModel() = default;

  SeedNoiseModel(std::vector<double> omega, std::vector<double> k_x, std::vector<double> k_p,
                 std::size_t clipped = 0)
      : omega_(std::move(omega)), k_x_(std::move(k_x)), k_p_(std::move(k_p)), clipped_(clipped) {
    require(omega_.size() == k_x_.size() && omega_.size() == k_p_.size(),
            "SeedNoiseModel: grid and coefficient sizes differ");
    for (std::size_t i = 1; i < omega_.size(); ++i) {
      require(omega_[i] > omega_[i - 1], "SeedNoiseModel: grid must be strictly increasing");
    }
    for (std::size_t i = 0; i < omega_.size(); ++i) {
      require(k_x_[i] >= 0.0 && k_p_[i] >= 0.0, "SeedNoiseModel: coefficients must be >= 0");
    }
  }

  /// Shot-noise-limited seed.
  static SeedNoiseModel none() { return {}; }

  bool empty() const { return omega_.empty(); }
  const std::vector<double>& omega() const { return omega_; }
  const std::vector<double>& k_x() const { return k_x_; }
  const std::vector<double>& k_p() const { return k_p_; }
  /// Grid points where the measured spectrum dipped below shot noise.
  std::size_t clipped_count() const { return clipped_; }

  double k(Quadrature q, double omega) const {
    if (omega_.empty()) return 0.0;
    const auto& table = q == Quadrature::kX ? k_x_ : k_p_;
    if (omega <= omega_.front()) return table.front();
    if (omega >= omega_.back()) return table.back();
    const auto it = std::upper_bound(omega_.begin(), omega_.end(), omega);
    const auto hi = static_cast<std::size_t>(it - omega_.begin());
    const std::size_t lo = hi - 1;
    const double t = (omega - omega_[lo]) / (omega_[hi] - omega_[lo]);
    return table[lo] + t * (table[hi] - table[lo]);
  }

 private:
  std::vector<double> omega_;
  std::vector<double> k_x_;
  std::vector<double> k_p_;
  std::size_t clipped_ = 0;
};

/// Parametric excess of an unpumped spectrum over shot noise, in V0 units:
/// a low-frequency roll-off plus a Gaussian bump.
struct ExcessNoiseShape {
  double low_amplitude = 0.0;  // excess at f -> 0
  double low_corner_mhz = 1.0;
  double bump_amplitude = 0.0;
  double bump_center_mhz = 5.5;
  double bump_width_mhz = 0.5;

  double operator()(double f_mhz) const {
    const double low = low_amplitude / (1.0 + (f_mhz / low_corner_mhz) * (f_mhz / low_corner_mhz));
    const double z = (f_mhz - bump_center_mhz) / bump_width_mhz;
    return low + bump_amplitude * std::exp(-0.5 * z * z);
  }

  bool is_zero() const { return low_amplitude == 0.0 && bump_amplitude == 0.0; }

  void validate() const {
    require(low_amplitude >= 0.0 && bump_amplitude >= 0.0,
            "ExcessNoiseShape: amplitudes must be non-negative");
    require(low_corner_mhz > 0.0 && bump_width_mhz > 0.0,
            "ExcessNoiseShape: corner and width must be positive");
  }
};

/// K_q(omega) = (gamma^2 + omega^2) (S0(omega) - 1/2), with S0 given in V0 units
/// (shot noise = 1). Negative values are clipped to zero and counted.
inline SeedNoiseModel kq_from_seed_spectrum(const std::vector<double>& omega,
                                            const std::vector<double>& s0_x,
                                            const std::vector<double>& s0_p, double gamma) {
  require(!omega.empty(), "kq_from_seed_spectrum: empty frequency grid");
  require(omega.size() == s0_x.size() && omega.size() == s0_p.size(),
          "kq_from_seed_spectrum: spectrum and grid sizes differ");
  std::vector<double> k_x(omega.size());
  std::vector<double> k_p(omega.size());
  std::size_t clipped = 0;
  auto convert = [&](double s0, double w) {
    require(s0 > 0.0, "kq_from_seed_spectrum: spectrum values must be positive");
    const double k = (gamma * gamma + w * w) * kVacuumVariance * (s0 - 1.0);
    if (k < 0.0) {
      ++clipped;
      return 0.0;
    }
    return k;
  };
  for (std::size_t i = 0; i < omega.size(); ++i) {
    k_x[i] = convert(s0_x[i], omega[i]);
    k_p[i] = convert(s0_p[i], omega[i]);
  }
  return SeedNoiseModel(omega, std::move(k_x), std::move(k_p), clipped);
}

/// Seed model whose unpumped spectrum equals 1 + shape(f) in both quadratures.
inline SeedNoiseModel seed_model_from_shape(const ExcessNoiseShape& shape, double gamma,
                                            double f_max_mhz = 125.0, double df_mhz = 0.05) {
  std::vector<double> omega;
  std::vector<double> s0;
  for (double f = 0.0; f <= f_max_mhz + 1e-9; f += df_mhz) {
    omega.push_back(mhz_to_rad_per_s(f));
    s0.push_back(1.0 + shape(f));
  }
  return kq_from_seed_spectrum(omega, s0, s0, gamma);
}

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

/// Output quadrature spectrum in V0 units (shot noise = 1).
///
/// The squeezed quadrature sees (gamma + epsilon) in its Lorentzian and a
/// negative pump term, the anti-squeezed one (gamma - epsilon) and a positive
/// term. Seed noise adds K_q over the same Lorentzian.
inline double output_spectrum(const OpoParams& params, const SeedNoiseModel& seed, double omega,
                              Quadrature quadrature) {
  require(omega >= 0.0, "output_spectrum: omega must be non-negative");
  const double gamma = params.gamma();
  const bool squeezed = quadrature == params.squeezed;
  const double shifted = squeezed ? gamma + params.epsilon : gamma - params.epsilon;
  const double denom = shifted * shifted + omega * omega;
  if (denom == 0.0) return 1.0;
  const double pump = 2.0 * params.epsilon * gamma * params.eta / denom;
  const double seed_term = seed.k(quadrature, omega) / denom;
  const double absolute = kVacuumVariance + (squeezed ? -pump : pump) + seed_term;
  return absolute / kVacuumVariance;
}

inline QuadratureVariancePair output_spectrum_pair(const OpoParams& params,
                                                   const SeedNoiseModel& seed, double omega) {
  const Quadrature anti = params.squeezed == Quadrature::kX ? Quadrature::kP : Quadrature::kX;
  return {output_spectrum(params, seed, omega, params.squeezed),
          output_spectrum(params, seed, omega, anti)};
}

/// Coefficients mapping the input-noise quadratures (x_G, p_G) onto the
/// intracavity quadratures (x_a, p_a) for pump phase `phi`:
///   [x_a]   [c_xx c_xp] [x_G]
///   [p_a] = [c_px c_pp] [p_G]
inline Eigen::Matrix2cd cavity_quadrature_transfer(double phi, double omega,
                                                   const OpoParams& params) {
  const double gamma = params.gamma();
  const double eps = params.epsilon;
  require(eps < gamma, "cavity_quadrature_transfer: pump rate must stay below decay rate");
  const std::complex<double> iw_minus_gamma(-gamma, omega);
  const std::complex<double> denom = eps * eps - iw_minus_gamma * iw_minus_gamma;
  // sin(pi) is not exactly zero in floating point; snap the axis cases.
  double c = std::cos(phi);
  double s = std::sin(phi);
  if (std::abs(s) < 1e-15) s = 0.0;
  if (std::abs(c) < 1e-15) c = 0.0;
  Eigen::Matrix2cd m;
  m(0, 0) = (iw_minus_gamma - eps * c) / denom;
  m(0, 1) = -eps * s / denom;
  m(1, 0) = -eps * s / denom;
  m(1, 1) = (iw_minus_gamma + eps * c) / denom;
  return m;
}

enum class PhaseAveraging { kApprox, kExact };

/// Variance measured at LO angle theta when the phase fluctuates with standard
/// deviation sigma. kApprox shifts the angle by sigma; kExact is the Gaussian
/// average of v_x cos^2 + v_p sin^2.
inline double phase_averaged_variance(const QuadratureVariancePair& pair, double theta,
                                      double sigma, PhaseAveraging mode = PhaseAveraging::kExact) {
  require(sigma >= 0.0, "phase_averaged_variance: sigma must be non-negative");
  if (mode == PhaseAveraging::kApprox) {
    const double c = std::cos(theta + sigma);
    const double s = std::sin(theta + sigma);
    return pair.v_x * c * c + pair.v_p * s * s;
  }
  const double damped = std::exp(-2.0 * sigma * sigma) * std::cos(2.0 * theta);
  return 0.5 * pair.v_x * (1.0 + damped) + 0.5 * pair.v_p * (1.0 - damped);
}

}  // namespace eprsim
