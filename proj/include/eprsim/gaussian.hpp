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
#include <limits>
#include <string>

#include "eprsim/error.hpp"
#include "eprsim/units.hpp"

namespace eprsim {

using Matrix4 = Eigen::Matrix4d;

/// Row/column index of each quadrature in a two-mode covariance matrix.
enum QuadratureIndex : int { kXA = 0, kPA = 1, kXB = 2, kPB = 3 };

/// Symmetric 4x4 covariance of (x_A, p_A, x_B, p_B) in units of the vacuum
/// variance V0, so the two-mode vacuum is the identity.
class CovarianceMatrix4 {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  explicit CovarianceMatrix4(const Matrix4& entries) : entries_(entries) {
    for (int i = 0; i < 4; ++i) {
      require(entries_(i, i) > 0.0, "covariance diagonal must be strictly positive");
      for (int j = i + 1; j < 4; ++j) {
        require(std::abs(entries_(i, j) - entries_(j, i)) <= kSymmetryTolerance,
                "covariance matrix must be symmetric");
      }
    }
  }

  static CovarianceMatrix4 vacuum() { return CovarianceMatrix4(Matrix4::Identity()); }

  const Matrix4& entries() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }

  /// Entries in absolute quadrature units (vacuum variance 1/2).
  Matrix4 absolute() const { return entries_ * kVacuumVariance; }

  /// S * cov * S^T for a linear quadrature map S.
  CovarianceMatrix4 transformed(const Matrix4& s) const {
    Matrix4 out = s * entries_ * s.transpose();
    return CovarianceMatrix4(0.5 * (out + out.transpose()));
  }

  friend bool operator==(const CovarianceMatrix4& a, const CovarianceMatrix4& b) {
    return a.entries_ == b.entries_;
  }

 private:
  Matrix4 entries_;
};

/// Variances of the squeezed (v_x) and anti-squeezed (v_p) quadrature of a
/// single-mode state, in V0 units.
struct QuadratureVariancePair {
  double v_x = 1.0;
  double v_p = 1.0;
};

/// Commutator matrix with [xi_i, xi_j] = i Omega_ij for (x_A, p_A, x_B, p_B).
inline Matrix4 symplectic_form() {
  Matrix4 omega = Matrix4::Zero();
  omega(0, 1) = 1.0;
  omega(1, 0) = -1.0;
  omega(2, 3) = 1.0;
  omega(3, 2) = -1.0;
  return omega;
}

/// Smallest eigenvalue of gamma + (i/2) Omega, rescaled to V0 units.
///
/// With gamma = V0 * entries and V0 = 1/2 the uncertainty relation
/// gamma + (i/2) Omega >= 0 is equivalent to entries + i Omega >= 0, which is
/// the Hermitian matrix diagonalised here. Vacuum gives exactly zero.
inline double min_uncertainty_eigenvalue(const Matrix4& entries) {
  const Eigen::Matrix4cd hermitian =
      entries.cast<std::complex<double>>() +
      std::complex<double>(0.0, 1.0) * symplectic_form().cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(hermitian, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

inline constexpr double kDefaultPhysicalityTolerance = 1e-9;

/// True iff every eigenvalue of gamma + (i/2) Omega is >= -tol (tol in V0 units).
inline bool is_physical(const CovarianceMatrix4& cov, double tol = kDefaultPhysicalityTolerance) {
  return min_uncertainty_eigenvalue(cov.entries()) >= -tol;
}

/// Raw-matrix overload; rejects asymmetric input like the typed constructor.
inline bool is_physical(const Matrix4& entries, double tol = kDefaultPhysicalityTolerance) {
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      require(std::abs(entries(i, j) - entries(j, i)) <= CovarianceMatrix4::kSymmetryTolerance,
              "is_physical: covariance matrix must be symmetric");
    }
  }
  return min_uncertainty_eigenvalue(entries) >= -tol;
}

// ---------------------------------------------------------------------------
// Bounds on unmeasured xp covariances
// ---------------------------------------------------------------------------

/// A two-mode covariance with possibly unknown intra-mode xp terms
/// a = <x_A p_A> and b = <x_B p_B>. Known values sit in `entries`.
struct CovarianceTemplate {
  Matrix4 entries = Matrix4::Identity();
  bool a_unknown = true;
  bool b_unknown = true;

  Matrix4 with(double a, double b) const {
    Matrix4 m = entries;
    if (a_unknown) m(kXA, kPA) = m(kPA, kXA) = a;
    if (b_unknown) m(kXB, kPB) = m(kPB, kXB) = b;
    return m;
  }
  double known_a() const { return entries(kXA, kPA); }
  double known_b() const { return entries(kXB, kPB); }
};

struct Interval {
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
  bool empty() const { return !(lo <= hi); }
  bool contains(double v) const { return !empty() && v >= lo && v <= hi; }
  double width() const { return empty() ? 0.0 : hi - lo; }
};

struct BoundScanResult {
  Interval a;
  Interval b;
  /// False when no (a, b) makes the template physical.
  bool feasible = false;
};

namespace detail {

// Maximises a concave function on [lo, hi] by golden-section search.
template <class F>
std::pair<double, double> golden_max(F&& f, double lo, double hi, double xtol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > xtol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    }
  }
  const double x = 0.5 * (lo + hi);
  return {x, f(x)};
}

// Boundary of {x : f(x) >= level} between an inside point and an outside point.
template <class F>
double bisect_boundary(F&& f, double inside, double outside, double level, double xtol) {
  while (std::abs(outside - inside) > xtol) {
    const double mid = 0.5 * (inside + outside);
    if (f(mid) >= level) {
      inside = mid;
    } else {
      outside = mid;
    }
  }
  return inside;
}

// Feasible interval of a concave function's superlevel set on [lo, hi].
template <class F>
Interval superlevel_interval(F&& f, double lo, double hi, double level, double xtol) {
  const auto [x_star, f_star] = golden_max(f, lo, hi, xtol * 1e-3);
  if (f_star < level) return {};
  Interval out;
  out.lo = f(lo) >= level ? lo : bisect_boundary(f, x_star, lo, level, xtol);
  out.hi = f(hi) >= level ? hi : bisect_boundary(f, x_star, hi, level, xtol);
  return out;
}

// Shrinks an interval to the enclosed grid points k * step.
inline Interval snap_inward(Interval in, double step) {
  if (in.empty()) return in;
  Interval out{std::ceil(in.lo / step - 1e-9) * step, std::floor(in.hi / step + 1e-9) * step};
  if (out.lo == 0.0) out.lo = 0.0;  // drop negative zero
  if (out.hi == 0.0) out.hi = 0.0;
  return out;
}

}  // namespace detail

inline constexpr double kDefaultBoundGridStep = 0.005;

/// Widest ranges of a (over all b) and of b (over all a) keeping the template
/// physical, resolved on a grid of spacing `grid_step` (V0 units).
///
/// The minimum eigenvalue of entries + i Omega is concave in (a, b), so the
/// physical region is convex. The scan walks the grid of one unknown across
/// its feasible band and locates the boundary of the other by bisection.
inline BoundScanResult bound_scan(const CovarianceTemplate& tmpl,
                                  double grid_step = kDefaultBoundGridStep,
                                  double tol = kDefaultPhysicalityTolerance) {
  require(grid_step > 0.0, "bound_scan: grid_step must be positive");
  const double window = 3.0 * tmpl.entries.diagonal().maxCoeff();
  const double xtol = grid_step * 1e-3;
  const double level = -tol;

  auto lambda = [&](double a, double b) { return min_uncertainty_eigenvalue(tmpl.with(a, b)); };

  // Range of `outer` unknown given the best choice of the inner one.
  auto best_over_inner = [&](bool outer_is_a) {
    return [&, outer_is_a](double outer) {
      const bool inner_unknown = outer_is_a ? tmpl.b_unknown : tmpl.a_unknown;
      if (!inner_unknown) {
        return outer_is_a ? lambda(outer, tmpl.known_b()) : lambda(tmpl.known_a(), outer);
      }
      auto inner = [&](double v) { return outer_is_a ? lambda(outer, v) : lambda(v, outer); };
      return detail::golden_max(inner, -window, window, xtol * 1e-3).second;
    };
  };

  // Walk the grid of `scan` variable across its feasible band and collect the
  // feasible range of the other variable.
  auto range_of_other = [&](bool scan_is_a) -> Interval {
    const Interval band = detail::superlevel_interval(best_over_inner(scan_is_a), -window,
                                                      window, level, xtol);
    if (band.empty()) return {};
    Interval out{std::numeric_limits<double>::infinity(),
                 -std::numeric_limits<double>::infinity()};
    const auto k_lo = static_cast<long>(std::ceil(band.lo / grid_step - 1e-9));
    const auto k_hi = static_cast<long>(std::floor(band.hi / grid_step + 1e-9));
    auto visit = [&](double s) {
      auto other = [&](double v) { return scan_is_a ? lambda(s, v) : lambda(v, s); };
      const Interval r = detail::superlevel_interval(other, -window, window, level, xtol);
      if (r.empty()) return;
      out.lo = std::min(out.lo, r.lo);
      out.hi = std::max(out.hi, r.hi);
    };
    for (long k = k_lo; k <= k_hi; ++k) visit(static_cast<double>(k) * grid_step);
    if (k_lo > k_hi) visit(0.5 * (band.lo + band.hi));
    return out;
  };

  BoundScanResult result;
  if (tmpl.a_unknown && tmpl.b_unknown) {
    const Interval a_band = detail::superlevel_interval(best_over_inner(true), -window, window,
                                                        level, xtol);
    if (a_band.empty()) return result;
    result.a = detail::snap_inward(a_band, grid_step);
    result.b = detail::snap_inward(range_of_other(true), grid_step);
    // a range as seen from the b grid; both routes must agree on the hull.
    const Interval a_from_b = detail::snap_inward(range_of_other(false), grid_step);
    if (!a_from_b.empty()) {
      result.a.lo = std::min(result.a.lo, a_from_b.lo);
      result.a.hi = std::max(result.a.hi, a_from_b.hi);
    }
  } else if (tmpl.a_unknown) {
    auto f = [&](double a) { return lambda(a, tmpl.known_b()); };
    result.a = detail::snap_inward(detail::superlevel_interval(f, -window, window, level, xtol),
                                   grid_step);
    result.b = {tmpl.known_b(), tmpl.known_b()};
  } else if (tmpl.b_unknown) {
    auto f = [&](double b) { return lambda(tmpl.known_a(), b); };
    result.b = detail::snap_inward(detail::superlevel_interval(f, -window, window, level, xtol),
                                   grid_step);
    result.a = {tmpl.known_a(), tmpl.known_a()};
  } else {
    const bool ok = lambda(0.0, 0.0) >= level;
    if (ok) {
      result.a = {tmpl.known_a(), tmpl.known_a()};
      result.b = {tmpl.known_b(), tmpl.known_b()};
    }
    result.feasible = ok;
    return result;
  }
  result.feasible = !result.a.empty() && !result.b.empty();
  if (!result.feasible) {
    result.a = {};
    result.b = {};
  }
  return result;
}

// ---------------------------------------------------------------------------
// Entanglement criteria
// ---------------------------------------------------------------------------

/// <Delta(x_A + x_B)^2> + <Delta(p_A - p_B)^2> in V0 units; below 4 certifies
/// inseparability.
inline double duan_criterion(const CovarianceMatrix4& cov) {
  const double sum_x = cov(kXA, kXA) + cov(kXB, kXB) + 2.0 * cov(kXA, kXB);
  const double diff_p = cov(kPA, kPA) + cov(kPB, kPB) - 2.0 * cov(kPA, kPB);
  return sum_x + diff_p;
}

inline constexpr double kDuanThreshold = 4.0;

struct ReidProducts {
  double a_given_b = 0.0;  // V0^2 units
  double b_given_a = 0.0;
  bool steering_a_given_b() const { return a_given_b < 1.0; }
  bool steering_b_given_a() const { return b_given_a < 1.0; }
};

/// Inferred variance <Delta q_i^2> - <q_i q_j>^2 / <Delta q_j^2>.
inline double inferred_variance(double var_i, double var_j, double cov_ij) {
  if (!(std::abs(var_j) > 1e-300)) {
    throw ContractError("inferred_variance: conditioning variance is zero");
  }
  return var_i - cov_ij * cov_ij / var_j;
}

/// Products of inferred x and p variances in both steering directions.
inline ReidProducts reid_criterion(const CovarianceMatrix4& cov) {
  ReidProducts out;
  out.a_given_b = inferred_variance(cov(kXA, kXA), cov(kXB, kXB), cov(kXA, kXB)) *
                  inferred_variance(cov(kPA, kPA), cov(kPB, kPB), cov(kPA, kPB));
  out.b_given_a = inferred_variance(cov(kXB, kXB), cov(kXA, kXA), cov(kXA, kXB)) *
                  inferred_variance(cov(kPB, kPB), cov(kPA, kPA), cov(kPA, kPB));
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian channels and symplectic maps
// ---------------------------------------------------------------------------

/// Pure-loss channel with transmission eta: v -> eta v + (1 - eta) V0.
inline double apply_loss(double variance, double eta) {
  require(eta >= 0.0 && eta <= 1.0, "apply_loss: eta must lie in [0, 1]");
  return eta * variance + (1.0 - eta);
}

inline QuadratureVariancePair apply_loss(const QuadratureVariancePair& pair, double eta) {
  return {apply_loss(pair.v_x, eta), apply_loss(pair.v_p, eta)};
}

/// Loss on both modes of a two-mode state.
inline CovarianceMatrix4 apply_loss(const CovarianceMatrix4& cov, double eta) {
  require(eta >= 0.0 && eta <= 1.0, "apply_loss: eta must lie in [0, 1]");
  return CovarianceMatrix4(eta * cov.entries() + (1.0 - eta) * Matrix4::Identity());
}

/// Independent phase-space rotations of mode A by theta_a and mode B by theta_b.
inline Matrix4 rotation_matrix(double theta_a, double theta_b) {
  Matrix4 s = Matrix4::Zero();
  s(0, 0) = std::cos(theta_a);
  s(0, 1) = -std::sin(theta_a);
  s(1, 0) = std::sin(theta_a);
  s(1, 1) = std::cos(theta_a);
  s(2, 2) = std::cos(theta_b);
  s(2, 3) = -std::sin(theta_b);
  s(3, 2) = std::sin(theta_b);
  s(3, 3) = std::cos(theta_b);
  return s;
}

/// Beam splitter with intensity transmittance t acting on modes A and B.
inline Matrix4 beam_splitter_matrix(double transmittance) {
  require(transmittance >= 0.0 && transmittance <= 1.0,
          "beam_splitter_matrix: transmittance must lie in [0, 1]");
  const double c = std::sqrt(transmittance);
  const double s = std::sqrt(1.0 - transmittance);
  Matrix4 m = Matrix4::Zero();
  m(0, 0) = c;
  m(0, 2) = s;
  m(1, 1) = c;
  m(1, 3) = s;
  m(2, 0) = -s;
  m(2, 2) = c;
  m(3, 1) = -s;
  m(3, 3) = c;
  return m;
}

/// Single-mode squeezing of both modes with parameters r_a and r_b.
inline Matrix4 squeezing_matrix(double r_a, double r_b) {
  Matrix4 m = Matrix4::Zero();
  m(0, 0) = std::exp(-r_a);
  m(1, 1) = std::exp(r_a);
  m(2, 2) = std::exp(-r_b);
  m(3, 3) = std::exp(r_b);
  return m;
}

}  // namespace eprsim
