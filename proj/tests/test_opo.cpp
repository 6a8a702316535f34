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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "eprsim/opo.hpp"

namespace eprsim {
namespace {

constexpr double kMhz = kTwoPi * 1e6;

OpoParams reference_opo() {
  const CavityGeometry geom{0.10, 0.0055, 0.320};
  const double gamma = decay_rate(geom);
  return OpoParams::from_total(gamma, pump_rate(350.0, 833.0, gamma), efficiency_budget({0.94, 0.80, 0.91}));
}

// Independent closed form of the squeezed level without seed noise.
double squeezed_closed_form(double gamma, double eps, double eta, double omega) {
  return 1.0 - 4.0 * eps * gamma * eta / ((gamma + eps) * (gamma + eps) + omega * omega);
}

TEST(DecayRate, ReferenceCavity) {
  EXPECT_NEAR(decay_rate(CavityGeometry{0.10, 0.0055, 0.320}) / kMhz, 8.07, 0.05);
}

TEST(DecayRate, LosslessCavityDoesNotDecay) {
  EXPECT_DOUBLE_EQ(decay_rate(CavityGeometry{0.0, 0.0, 0.320}), 0.0);
}

TEST(DecayRate, CouplerOnly) {
  const double expected = (1.0 - std::sqrt(0.8)) / (0.320 / kSpeedOfLight);
  const double got = decay_rate(CavityGeometry{0.20, 0.0, 0.320});
  EXPECT_NEAR(got, expected, 1e-6 * expected);
  EXPECT_NEAR(got / kMhz, 15.7, 0.05);
}

TEST(DecayRate, RejectsBadGeometry) {
  EXPECT_THROW(decay_rate(CavityGeometry{1.0, 0.0, 0.3}), ContractError);
  EXPECT_THROW(decay_rate(CavityGeometry{0.1, 0.0, 0.0}), ContractError);
}

TEST(PumpRate, ReferencePump) {
  EXPECT_NEAR(pump_rate(350.0, 833.0, 8.07 * kMhz) / kMhz, 5.23, 0.1);
}

TEST(PumpRate, Limits) {
  const double gamma = 8.0 * kMhz;
  EXPECT_DOUBLE_EQ(pump_rate(0.0, 833.0, gamma), 0.0);
  EXPECT_DOUBLE_EQ(pump_rate(833.0 * 0.25, 833.0, gamma), 0.5 * gamma);
  EXPECT_THROW(pump_rate(833.0, 833.0, gamma), ContractError);
  EXPECT_THROW(pump_rate(900.0, 833.0, gamma), ContractError);
}

TEST(EfficiencyBudget, Product) {
  EXPECT_NEAR(efficiency_budget({0.94, 0.80, 0.91}), 0.94 * 0.80 * 0.91, 1e-15);
  EXPECT_EQ(std::lround(100.0 * efficiency_budget({0.94, 0.80, 0.91})), 68);
  EXPECT_THROW(efficiency_budget({1.1}), ContractError);
}

TEST(OpoParams, RejectsPumpAtThreshold) {
  EXPECT_THROW(OpoParams::from_total(1.0, 1.0, 0.5), ContractError);
  EXPECT_THROW(OpoParams::from_total(1.0, 0.5, 1.5), ContractError);
}

TEST(OutputSpectrum, UnpumpedIsVacuum) {
  const OpoParams p = OpoParams::from_total(8e6, 0.0, 0.7);
  for (double w : {0.0, 1e6, 5e7}) {
    EXPECT_DOUBLE_EQ(output_spectrum(p, SeedNoiseModel::none(), w, Quadrature::kX), 1.0);
    EXPECT_DOUBLE_EQ(output_spectrum(p, SeedNoiseModel::none(), w, Quadrature::kP), 1.0);
  }
}

TEST(OutputSpectrum, MatchesClosedFormAtThreeMegahertz) {
  const OpoParams p = reference_opo();
  const double got = output_spectrum(p, SeedNoiseModel::none(), 3.0 * kMhz, Quadrature::kX);
  EXPECT_NEAR(got, squeezed_closed_form(p.gamma(), p.epsilon, p.eta, 3.0 * kMhz), 1e-12);
  // Rounded published rates and efficiency.
  const OpoParams rounded = OpoParams::from_total(8.1 * kMhz, 5.2 * kMhz, 0.68);
  EXPECT_NEAR(to_db(output_spectrum(rounded, SeedNoiseModel::none(), 3.0 * kMhz, Quadrature::kX)),
              -4.16, 0.05);
}

TEST(OutputSpectrum, PerfectSqueezingAtThresholdLimit) {
  const OpoParams p = OpoParams::from_total(1.0, 1.0 - 1e-9, 1.0);
  EXPECT_NEAR(output_spectrum(p, SeedNoiseModel::none(), 0.0, Quadrature::kX), 0.0, 1e-8);
}

TEST(OutputSpectrum, ApproachesVacuumAtHighFrequency) {
  const OpoParams p = reference_opo();
  EXPECT_NEAR(output_spectrum(p, SeedNoiseModel::none(), 1e4 * kMhz, Quadrature::kX), 1.0, 1e-5);
  EXPECT_NEAR(output_spectrum(p, SeedNoiseModel::none(), 1e4 * kMhz, Quadrature::kP), 1.0, 1e-5);
}

TEST(OutputSpectrum, SqueezedQuadratureFollowsSetting) {
  OpoParams p = reference_opo();
  p.squeezed = Quadrature::kP;
  EXPECT_LT(output_spectrum(p, SeedNoiseModel::none(), kMhz, Quadrature::kP), 1.0);
  EXPECT_GT(output_spectrum(p, SeedNoiseModel::none(), kMhz, Quadrature::kX), 1.0);
  const auto pair = output_spectrum_pair(p, SeedNoiseModel::none(), kMhz);
  EXPECT_LT(pair.v_x, 1.0);  // the pair is always (squeezed, anti-squeezed)
}

TEST(OutputSpectrum, UncertaintyPreserved) {
  const OpoParams base = reference_opo();
  const SeedNoiseModel seed =
      seed_model_from_shape(ExcessNoiseShape{0.5, 1.0, 0.2, 5.5, 0.6}, base.gamma());
  for (double eta : {0.3, 0.684, 1.0}) {
    OpoParams p = base;
    p.eta = eta;
    for (double f = 0.0; f <= 40.0; f += 0.5) {
      const auto pair = output_spectrum_pair(p, seed, f * kMhz);
      EXPECT_GE(pair.v_x * pair.v_p, 1.0 - 1e-12) << "eta " << eta << " f " << f;
    }
  }
}

TEST(OutputSpectrum, MonotonicInPump) {
  const double gamma = 8.07 * kMhz;
  for (double f : {0.0, 3.0, 10.0}) {
    double sq_prev = 2.0;
    double anti_prev = 0.0;
    for (double frac = 0.0; frac < 0.99; frac += 0.05) {
      const OpoParams p = OpoParams::from_total(gamma, frac * gamma, 0.684);
      const auto pair = output_spectrum_pair(p, SeedNoiseModel::none(), f * kMhz);
      EXPECT_LE(pair.v_x, sq_prev + 1e-15);
      EXPECT_GE(pair.v_p, anti_prev - 1e-15);
      sq_prev = pair.v_x;
      anti_prev = pair.v_p;
    }
  }
}

TEST(SeedNoise, ShotNoiseLimitedSeedHasNoCoefficient) {
  const std::vector<double> omega{0.0, kMhz, 2 * kMhz};
  const std::vector<double> flat(3, 1.0);
  const SeedNoiseModel m = kq_from_seed_spectrum(omega, flat, flat, 8.1 * kMhz);
  for (double w : omega) {
    EXPECT_DOUBLE_EQ(m.k(Quadrature::kX, w), 0.0);
    EXPECT_DOUBLE_EQ(m.k(Quadrature::kP, w), 0.0);
  }
  EXPECT_EQ(m.clipped_count(), 0u);
}

TEST(SeedNoise, WorkedCoefficient) {
  const std::vector<double> omega{3.0 * kMhz};
  const SeedNoiseModel m = kq_from_seed_spectrum(omega, {1.2}, {1.2}, 8.1 * kMhz);
  EXPECT_NEAR(m.k(Quadrature::kX, 3.0 * kMhz) / (kMhz * kMhz), (8.1 * 8.1 + 9.0) * 0.1, 1e-9);
}

TEST(SeedNoise, SubShotValuesAreClippedAndCounted) {
  const SeedNoiseModel m = kq_from_seed_spectrum({0.0, kMhz}, {0.9, 1.1}, {1.0, 1.0}, kMhz);
  EXPECT_EQ(m.clipped_count(), 1u);
  EXPECT_DOUBLE_EQ(m.k(Quadrature::kX, 0.0), 0.0);
}

TEST(SeedNoise, UnpumpedRoundTripIsIdentity) {
  // Inverting a measured unpumped spectrum and feeding it back reproduces it.
  const double gamma = 8.07 * kMhz;
  std::vector<double> omega;
  std::vector<double> s0;
  for (double f = 0.0; f <= 30.0; f += 0.25) {
    omega.push_back(f * kMhz);
    s0.push_back(1.0 + 0.4 / (1.0 + f * f) + 0.05);
  }
  const SeedNoiseModel m = kq_from_seed_spectrum(omega, s0, s0, gamma);
  const OpoParams unpumped = OpoParams::from_total(gamma, 0.0, 0.684);
  for (std::size_t i = 0; i < omega.size(); ++i) {
    EXPECT_NEAR(output_spectrum(unpumped, m, omega[i], Quadrature::kX), s0[i], 1e-12);
  }
}

TEST(CavityTransfer, SqueezingAxisHasNoCrossCoupling) {
  const OpoParams p = OpoParams::from_total(8.0, 5.0, 1.0);
  const double omega = 3.0;
  const auto m = cavity_quadrature_transfer(kPi, omega, p);
  EXPECT_EQ(m(0, 1), std::complex<double>(0.0));
  EXPECT_EQ(m(1, 0), std::complex<double>(0.0));
  const std::complex<double> expected = 1.0 / std::complex<double>(8.0 + 5.0, -omega);
  EXPECT_NEAR(std::abs(m(0, 0) - expected), 0.0, 1e-12);
  // The x coefficient is the small one: x is squeezed for this pump phase.
  EXPECT_LT(std::abs(m(0, 0)), std::abs(m(1, 1)));
}

TEST(CavityTransfer, ZeroPhaseFlipsTheRoles) {
  const OpoParams p = OpoParams::from_total(8.0, 5.0, 1.0);
  const auto at_pi = cavity_quadrature_transfer(kPi, 2.0, p);
  const auto at_zero = cavity_quadrature_transfer(0.0, 2.0, p);
  EXPECT_EQ(at_zero(0, 1), std::complex<double>(0.0));
  EXPECT_NEAR(std::abs(at_zero(0, 0) - at_pi(1, 1)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(at_zero(1, 1) - at_pi(0, 0)), 0.0, 1e-12);
}

TEST(CavityTransfer, QuarterPhaseCouplesQuadratures) {
  const OpoParams p = OpoParams::from_total(8.0, 5.0, 1.0);
  const auto m = cavity_quadrature_transfer(0.5 * kPi, 0.0, p);
  EXPECT_NEAR(std::abs(m(0, 1)), 5.0 / (64.0 - 25.0), 1e-12);
}

TEST(PhaseAveraging, NoJitterIsPlainProjection) {
  const QuadratureVariancePair pair{0.3, 4.0};
  for (double theta : {0.0, 0.3, 1.2}) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (auto mode : {PhaseAveraging::kApprox, PhaseAveraging::kExact}) {
      EXPECT_NEAR(phase_averaged_variance(pair, theta, 0.0, mode), 0.3 * c * c + 4.0 * s * s, 1e-12);
    }
  }
}

TEST(PhaseAveraging, WorkedValues) {
  const QuadratureVariancePair pair{0.1, 2.5};
  const double sigma = deg_to_rad(4.1);
  EXPECT_NEAR(phase_averaged_variance(pair, 0.0, sigma, PhaseAveraging::kApprox), 0.1123, 5e-5);
  EXPECT_NEAR(phase_averaged_variance(pair, 0.0, sigma, PhaseAveraging::kExact), 0.1122, 5e-5);
}

TEST(PhaseAveraging, DiagonalAngleAveragesExactly) {
  const QuadratureVariancePair pair{0.1, 2.5};
  for (double sigma : {0.0, 0.05, 0.3}) {
    EXPECT_NEAR(phase_averaged_variance(pair, 0.25 * kPi, sigma), 1.3, 1e-12);
  }
}

TEST(PhaseAveraging, ApproxAndExactAgreeOnTheAxes) {
  // The shifted-angle form is a small-jitter approximation of the Gaussian
  // average on the quadrature axes; off axis it carries a first-order shift.
  const QuadratureVariancePair pair{0.2, 6.0};
  for (double deg = 0.0; deg <= 10.0; deg += 0.5) {
    const double sigma = deg_to_rad(deg);
    for (double theta : {0.0, 0.5 * kPi}) {
      const double a = phase_averaged_variance(pair, theta, sigma, PhaseAveraging::kApprox);
      const double e = phase_averaged_variance(pair, theta, sigma, PhaseAveraging::kExact);
      EXPECT_LE(std::abs(a - e), 1e-3 * (pair.v_p - pair.v_x)) << deg << " deg";
    }
  }
}

TEST(PhaseAveraging, RejectsNegativeSigma) {
  EXPECT_THROW(phase_averaged_variance({0.1, 2.0}, 0.0, -0.1), ContractError);
}

}  // namespace
}  // namespace eprsim
