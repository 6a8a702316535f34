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
#include <array>
#include <cmath>
#include <utility>

#include "eprsim/error.hpp"
#include "eprsim/gaussian.hpp"
#include "eprsim/units.hpp"

namespace eprsim {

/// Single-mode squeezed state travelling through one path of the network.
/// Path 1 is the direct line, path 2 the delay line. Both are squeezed in x
/// at the source; the pi/2 rotation of path 2 is part of `interfere`.
struct PathState {
  double v_x = 1.0;  // V0 units, before path loss
  double v_p = 1.0;
  double eta = 1.0;
  double phase_offset = 0.0;        // rad, fixed rotation before the coupler
  double phase_jitter_sigma = 0.0;  // rad, zero-mean Gaussian around the offset

  void validate() const {
    require(v_x > 0.0 && v_p > 0.0, "PathState: variances must be positive");
    require(eta >= 0.0 && eta <= 1.0, "PathState: eta must lie in [0, 1]");
    require(phase_jitter_sigma >= 0.0, "PathState: jitter sigma must be non-negative");
  }

  /// Variances after the path loss, before any rotation.
  QuadratureVariancePair after_loss() const { return apply_loss({v_x, v_p}, eta); }
};

struct MeasurementAngles {
  double theta_a = 0.0;
  double theta_b = 0.0;

  static MeasurementAngles set1(double theta) { return {theta, -theta}; }
  static MeasurementAngles set2(double theta) { return {theta, theta - 0.5 * kPi}; }
};

/// Quadrature vector (x1, p1, x2, p2) before, or (xA, pA, xB, pB) after, the coupler.
using Quads = std::array<double, 4>;

/// pi/2 rotation of path 2 followed by a balanced coupler.
inline Quads interfere(const Quads& q) {
  const double k = 1.0 / std::sqrt(2.0);
  return {k * (q[0] - q[3]), k * (q[1] + q[2]), k * (q[0] + q[3]), k * (q[1] - q[2])};
}

/// Matrix form of `interfere`.
inline Matrix4 interfere_matrix() {
  const double k = 1.0 / std::sqrt(2.0);
  Matrix4 t;
  t << k, 0, 0, -k,  //
      0, k, k, 0,    //
      k, 0, 0, k,    //
      0, k, -k, 0;
  return t;
}

/// Homodyne outcomes q_i = x_i cos(theta_i) + p_i sin(theta_i) at stations A and B.
inline std::pair<double, double> measured_quadrature(const Quads& ab,
                                                     const MeasurementAngles& angles) {
  return {ab[0] * std::cos(angles.theta_a) + ab[1] * std::sin(angles.theta_a),
          ab[2] * std::cos(angles.theta_b) + ab[3] * std::sin(angles.theta_b)};
}

/// Weights u with q_A + sign q_B = u . (xA, pA, xB, pB).
inline Eigen::Vector4d combination_weights(const MeasurementAngles& angles, double sign) {
  return {std::cos(angles.theta_a), std::sin(angles.theta_a), sign * std::cos(angles.theta_b),
          sign * std::sin(angles.theta_b)};
}

/// Var(q_A +- q_B) for a two-mode covariance.
inline double combination_variance(const CovarianceMatrix4& cov, const MeasurementAngles& angles,
                                   double sign) {
  const Eigen::Vector4d u = combination_weights(angles, sign);
  return u.dot(cov.entries() * u);
}

/// Cov(q_A, q_B) for ideal aligned paths (offsets and jitter ignored), V0 units.
inline double analytic_cov(const PathState& path1, const PathState& path2,
                           const MeasurementAngles& angles) {
  const auto p1 = path1.after_loss();
  const auto p2 = path2.after_loss();
  return 0.5 * (p1.v_x - p2.v_p) * std::cos(angles.theta_a) * std::cos(angles.theta_b) -
         0.5 * (p2.v_x - p1.v_p) * std::sin(angles.theta_a) * std::sin(angles.theta_b);
}

/// 2x2 covariance of a path after loss and the (jittered) phase rotation,
/// averaged over the Gaussian jitter.
inline Eigen::Matrix2d path_covariance(const PathState& path) {
  path.validate();
  const auto v = path.after_loss();
  const double damp = std::exp(-2.0 * path.phase_jitter_sigma * path.phase_jitter_sigma);
  const double mean_cos2 = 0.5 * (1.0 + damp * std::cos(2.0 * path.phase_offset));
  const double mean_sin2 = 1.0 - mean_cos2;
  const double mean_cs = 0.5 * damp * std::sin(2.0 * path.phase_offset);
  Eigen::Matrix2d c;
  c(0, 0) = v.v_x * mean_cos2 + v.v_p * mean_sin2;
  c(1, 1) = v.v_x * mean_sin2 + v.v_p * mean_cos2;
  c(0, 1) = c(1, 0) = (v.v_x - v.v_p) * mean_cs;
  return c;
}

/// Two-mode covariance of (xA, pA, xB, pB): loss, phase offset and jitter per
/// path, then the coupler.
inline CovarianceMatrix4 build_two_mode_cov(const PathState& path1, const PathState& path2) {
  Matrix4 inputs = Matrix4::Zero();
  inputs.block<2, 2>(0, 0) = path_covariance(path1);
  inputs.block<2, 2>(2, 2) = path_covariance(path2);
  const Matrix4 t = interfere_matrix();
  Matrix4 out = t * inputs * t.transpose();
  return CovarianceMatrix4(0.5 * (out + out.transpose()));
}

struct SumDiffVariance {
  double sum = 0.0;   // Var(q_A + q_B), V0 units
  double diff = 0.0;  // Var(q_A - q_B)
};

/// Set 1: (theta_A, theta_B) = (theta, -theta).
inline SumDiffVariance variance_set1(const PathState& path1, const PathState& path2,
                                     double theta) {
  const auto cov = build_two_mode_cov(path1, path2);
  const auto angles = MeasurementAngles::set1(theta);
  return {combination_variance(cov, angles, +1.0), combination_variance(cov, angles, -1.0)};
}

/// Set 2: (theta_A, theta_B) = (theta, theta - pi/2).
inline SumDiffVariance variance_set2(const PathState& path1, const PathState& path2,
                                     double theta) {
  const auto cov = build_two_mode_cov(path1, path2);
  const auto angles = MeasurementAngles::set2(theta);
  return {combination_variance(cov, angles, +1.0), combination_variance(cov, angles, -1.0)};
}

/// <x_A p_B> produced by fixed phase offsets:
/// 1/2 sum_i eta_i (v_x,i - v_p,i) cos(s_i) sin(s_i), V0 units, no jitter.
inline double offset_xp_covariance(const PathState& path1, const PathState& path2) {
  auto term = [](const PathState& p) {
    return 0.5 * p.eta * (p.v_x - p.v_p) * std::cos(p.phase_offset) * std::sin(p.phase_offset);
  };
  return term(path1) + term(path2);
}

/// Same quantity parametrised by squeezing parameters r_i of pure states.
inline double offset_xp_covariance(double r1, double eta1, double offset1, double r2, double eta2,
                                   double offset2) {
  PathState p1{std::exp(-2.0 * r1), std::exp(2.0 * r1), eta1, offset1, 0.0};
  PathState p2{std::exp(-2.0 * r2), std::exp(2.0 * r2), eta2, offset2, 0.0};
  return offset_xp_covariance(p1, p2);
}

struct XpCovarianceCheck {
  double xa_pa = 0.0;
  double xb_pb = 0.0;
  double xa_pb = 0.0;
  double xb_pa = 0.0;
  bool intra_equal = false;  // <xA pA> == <xB pB>
  bool inter_equal = false;  // <xA pB> == <xB pA>
  bool all_equal = false;    // all four coincide
};

/// Compares intra-mode and inter-mode xp covariances of the constructed state.
inline XpCovarianceCheck intra_inter_cov_equality_check(const PathState& path1,
                                                        const PathState& path2,
                                                        double tol = 1e-12) {
  const auto cov = build_two_mode_cov(path1, path2);
  XpCovarianceCheck out;
  out.xa_pa = cov(kXA, kPA);
  out.xb_pb = cov(kXB, kPB);
  out.xa_pb = cov(kXA, kPB);
  out.xb_pa = cov(kXB, kPA);
  out.intra_equal = std::abs(out.xa_pa - out.xb_pb) <= tol;
  out.inter_equal = std::abs(out.xa_pb - out.xb_pa) <= tol;
  out.all_equal = out.intra_equal && out.inter_equal && std::abs(out.xa_pa - out.xa_pb) <= tol;
  return out;
}

}  // namespace eprsim
