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
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "eprsim/dsp.hpp"
#include "eprsim/error.hpp"
#include "eprsim/opo.hpp"
#include "eprsim/response.hpp"
#include "eprsim/stats.hpp"
#include "eprsim/units.hpp"

namespace eprsim {

/// Spectra entering the phase-noise fit, all on the same frequency grid and
/// normalised to shot noise (linear, V0 units). Index 0 is the direct path,
/// index 1 the delay path.
struct PhaseFitData {
  std::vector<double> freq_hz;
  std::array<std::vector<double>, 2> squeezed;       // pumped, squeezed quadrature
  std::array<std::vector<double>, 2> anti_squeezed;  // pumped, anti-squeezed quadrature
  /// Blocked-pump spectra taken at the squeezed and anti-squeezed settings.
  std::array<std::vector<double>, 2> unpumped_squeezed;
  std::array<std::vector<double>, 2> unpumped_anti_squeezed;
  /// Optional per-point standard errors in dB (same layout as the spectra).
  std::array<std::vector<double>, 2> squeezed_se_db;
  std::array<std::vector<double>, 2> anti_squeezed_se_db;
  std::array<std::vector<double>, 2> unpumped_squeezed_se_db;
  std::array<std::vector<double>, 2> unpumped_anti_squeezed_se_db;
  /// Shot-noise calibration error shared by all eight spectra; may be empty.
  std::vector<double> calibration_se_db;

  /// True when every spectrum carries per-bin standard errors.
  bool has_errors() const {
    const std::size_t n = freq_hz.size();
    for (int i = 0; i < 2; ++i) {
      for (const auto* se : {&squeezed_se_db[i], &anti_squeezed_se_db[i], &unpumped_squeezed_se_db[i],
                             &unpumped_anti_squeezed_se_db[i]}) {
        if (se->size() != n) return false;
      }
    }
    return true;
  }

  void validate() const {
    const std::size_t n = freq_hz.size();
    require(n > 0, "PhaseFitData: empty frequency grid");
    for (int i = 0; i < 2; ++i) {
      require(squeezed[i].size() == n && anti_squeezed[i].size() == n &&
                  unpumped_squeezed[i].size() == n && unpumped_anti_squeezed[i].size() == n,
              "PhaseFitData: spectra must share the frequency grid");
    }
  }
};

enum class FitPrediction {
  kPointwise,  // model PSD evaluated at the bin frequency
  kResponse,   // exact expectation of the windowed, detrended periodogram
};

struct PhaseFitOptions {
  double f_min_hz = 1.5e6;
  double f_max_hz = 20e6;
  PhaseAveraging averaging = PhaseAveraging::kExact;
  FitPrediction prediction = FitPrediction::kResponse;
  /// Weight residuals by the supplied dB standard errors.
  bool weighted = false;
  /// Known fixed phase offsets of the two paths (rad).
  std::array<double, 2> offsets{0.0, 0.0};
  std::array<double, 2> initial_sigma_deg{2.0, 2.0};
  double confidence = 0.95;
  /// Sample count per trace and rate, needed for kResponse.
  std::size_t n_samples = 225;
  double sample_rate = 250e6;
  bool detrended = true;
};

struct SigmaEstimate {
  double value_deg = 0.0;
  double ci_lo_deg = 0.0;
  double ci_hi_deg = 0.0;
  double se_deg = 0.0;
  std::string ci_method;  // "wald" or "profile"
};

struct FitResult {
  std::array<SigmaEstimate, 2> sigma;
  double residual_norm = 0.0;  // sqrt of the residual sum of squares, dB
  std::vector<double> residuals_db;
  double runs_p_value = 1.0;
  std::size_t n_points = 0;
  int iterations = 0;
  bool converged = false;
  std::string diagnostic;
};

namespace detail {

/// Fitted spectral model: for each path and quadrature, the predicted
/// normalised level for each used bin is a(sigma) R_main + (1 - a(sigma)) R_other.
class PhaseFitModel {
 public:
  PhaseFitModel(const PhaseFitData& data, const OpoParams& opo, const PhaseFitOptions& opt)
      : opt_(opt) {
    data.validate();
    for (std::size_t k = 0; k < data.freq_hz.size(); ++k) {
      if (data.freq_hz[k] >= opt.f_min_hz && data.freq_hz[k] <= opt.f_max_hz) used_.push_back(k);
    }
    if (used_.size() < 3) throw DataError("fit_phase_sigma: fewer than three bins in fit band");

    const bool x_squeezed = opo.squeezed == Quadrature::kX;
    std::vector<double> omega;
    for (double f : data.freq_hz) omega.push_back(kTwoPi * f);
    const auto& u_sq = data.unpumped_squeezed[0];
    const auto& u_anti = data.unpumped_anti_squeezed[0];
    seed_ = x_squeezed ? kq_from_seed_spectrum(omega, u_sq, u_anti, opo.gamma())
                       : kq_from_seed_spectrum(omega, u_anti, u_sq, opo.gamma());
    clipped_ = seed_.clipped_count();

    if (opt.prediction == FitPrediction::kResponse) {
      build_response_bases(data, opo);
    } else {
      build_pointwise_bases(data, opo);
    }
    store_errors(data, opo, data.has_errors());

    for (int path = 0; path < 2; ++path) {
      for (std::size_t j = 0; j < used_.size(); ++j) {
        const std::size_t k = used_[j];
        measured_.push_back(to_db(positive(data.squeezed[path][k])));
        weights_.push_back(weight(data.squeezed_se_db[path], k));
      }
      for (std::size_t j = 0; j < used_.size(); ++j) {
        const std::size_t k = used_[j];
        measured_.push_back(to_db(positive(data.anti_squeezed[path][k])));
        weights_.push_back(weight(data.anti_squeezed_se_db[path], k));
      }
    }
  }

  std::size_t n_values() const { return measured_.size(); }
  /// Frequency bins in the fit band; residuals come in four blocks of this size.
  std::size_t n_bins() const { return used_.size(); }
  std::size_t clipped() const { return clipped_; }
  /// False when the data carried no standard errors and unit dB errors stand in.
  bool errors_supplied() const { return errors_supplied_; }

  /// Residuals (model - measured) in dB, optionally weighted.
  Eigen::VectorXd residuals(double sigma1, double sigma2) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(measured_.size()));
    Eigen::Index idx = 0;
    const std::array<double, 2> sig{sigma1, sigma2};
    for (int path = 0; path < 2; ++path) {
      const double a = squeezed_weight(path, sig[static_cast<std::size_t>(path)]);
      const auto& sq = base_sq_[path];
      const auto& anti = base_anti_[path];
      for (std::size_t j = 0; j < sq.size(); ++j, ++idx) {
        const double model = a * sq[j] + (1.0 - a) * anti[j];
        r(idx) = (to_db(positive(model)) - measured_[static_cast<std::size_t>(idx)]) *
                 weights_[static_cast<std::size_t>(idx)];
      }
      for (std::size_t j = 0; j < sq.size(); ++j, ++idx) {
        const double model = a * anti[j] + (1.0 - a) * sq[j];
        r(idx) = (to_db(positive(model)) - measured_[static_cast<std::size_t>(idx)]) *
                 weights_[static_cast<std::size_t>(idx)];
      }
    }
    return r;
  }

  double rss(double sigma1, double sigma2) const { return residuals(sigma1, sigma2).squaredNorm(); }

  /// Covariance of the four residuals at each fit bin (blocks ordered as the
  /// residual vector) implied by the standard errors of all eight spectra.
  /// The unpumped spectra enter every prediction at their bin, which makes
  /// the four residuals correlated.
  std::vector<Eigen::Matrix4d> residual_covariance(double sigma1, double sigma2) const {
    std::vector<Eigen::Matrix4d> out;
    const double db = 10.0 / std::log(10.0);
    const std::size_t n = used_.size();
    const std::array<double, 2> sig{sigma1, sigma2};
    for (std::size_t j = 0; j < n; ++j) {
      Eigen::Matrix4d grad = Eigen::Matrix4d::Zero();  // residual x (U0s, U0a, U1s, U1a)
      Eigen::Vector4d meas_var;
      Eigen::Vector4d w;
      for (int path = 0; path < 2; ++path) {
        const double a = squeezed_weight(path, sig[static_cast<std::size_t>(path)]);
        const double d_sq0 = path == 0 ? l_sq_[j] : l_sq_[j] - 1.0;
        const double d_anti0 = path == 0 ? l_anti_[j] : l_anti_[j] - 1.0;
        const double d_sq1 = path == 0 ? 0.0 : 1.0;
        const double d_anti1 = path == 0 ? 0.0 : 1.0;
        for (int q = 0; q < 2; ++q) {
          const int row = 2 * path + q;
          const double main_w = q == 0 ? a : 1.0 - a;  // weight of the squeezed base
          const double model = main_w * base_sq_[path][j] + (1.0 - main_w) * base_anti_[path][j];
          const double k = db / positive(model);
          grad(row, 0) = k * main_w * d_sq0;
          grad(row, 1) = k * (1.0 - main_w) * d_anti0;
          grad(row, 2) = k * main_w * d_sq1;
          grad(row, 3) = k * (1.0 - main_w) * d_anti1;
          const std::size_t idx = static_cast<std::size_t>(row) * n + j;
          meas_var(row) = meas_se_db_[idx] * meas_se_db_[idx];
          w(row) = weights_[idx];
        }
      }
      // Independent parts of the unpumped errors, plus one shared calibration
      // shift c (dB) that moves every spectrum, pumped and unpumped, together.
      const double c = cal_se_db_.empty() ? 0.0 : cal_se_db_[j];
      Eigen::Vector4d u_var;
      Eigen::Vector4d shared = Eigen::Vector4d::Constant(-1.0);
      for (int v = 0; v < 4; ++v) {
        const std::size_t idx = static_cast<std::size_t>(v) * n + j;
        const double u_lin = u_value_[idx] / db;
        u_var(v) = std::max(0.0, u_se_db_[idx] * u_se_db_[idx] - c * c) * u_lin * u_lin;
        shared += grad.col(v) * u_lin;
      }
      for (int row = 0; row < 4; ++row) meas_var(row) = std::max(0.0, meas_var(row) - c * c);
      Eigen::Matrix4d cov = grad * u_var.asDiagonal() * grad.transpose();
      cov += c * c * shared * shared.transpose();
      cov.diagonal() += meas_var;
      out.push_back(w.asDiagonal() * cov * w.asDiagonal());
    }
    return out;
  }

 private:
  void store_errors(const PhaseFitData& data, const OpoParams& opo, bool supplied) {
    errors_supplied_ = supplied;
    const double g = opo.gamma();
    const double e = opo.epsilon;
    for (std::size_t k : used_) {
      const double w2 = std::pow(kTwoPi * data.freq_hz[k], 2);
      l_sq_.push_back((g * g + w2) / ((g + e) * (g + e) + w2));
      l_anti_.push_back((g * g + w2) / ((g - e) * (g - e) + w2));
    }
    for (int path = 0; path < 2; ++path) {
      for (const auto* se : {&data.squeezed_se_db[path], &data.anti_squeezed_se_db[path]}) {
        for (std::size_t k : used_) meas_se_db_.push_back(supplied ? (*se)[k] : 1.0);
      }
    }
    // Values and dB errors of U0s, U0a, U1s, U1a.
    for (int path = 0; path < 2; ++path) {
      const auto& sq = data.unpumped_squeezed[path];
      const auto& anti = data.unpumped_anti_squeezed[path];
      for (const auto& [value, se] : {std::pair{&sq, &data.unpumped_squeezed_se_db[path]},
                                      std::pair{&anti, &data.unpumped_anti_squeezed_se_db[path]}}) {
        for (std::size_t k : used_) {
          u_value_.push_back((*value)[k]);
          u_se_db_.push_back(supplied ? (*se)[k] : 1.0);
        }
      }
    }
    if (supplied && data.calibration_se_db.size() == data.freq_hz.size()) {
      for (std::size_t k : used_) cal_se_db_.push_back(data.calibration_se_db[k]);
    }
  }

  /// Pointwise model: tabulated seed coefficients and the unpumped delay-minus-direct
  /// difference evaluated at the bin frequencies.
  void build_pointwise_bases(const PhaseFitData& data, const OpoParams& opo) {
    for (int path = 0; path < 2; ++path) {
      for (std::size_t k : used_) {
        const auto v = output_spectrum_pair(opo, seed_, kTwoPi * data.freq_hz[k]);
        double sq = v.v_x;
        double anti = v.v_p;
        if (path == 1) {
          sq += data.unpumped_squeezed[1][k] - data.unpumped_squeezed[0][k];
          anti += data.unpumped_anti_squeezed[1][k] - data.unpumped_anti_squeezed[0][k];
        }
        base_sq_[path].push_back(std::max(sq, 0.0));
        base_anti_[path].push_back(std::max(anti, 0.0));
      }
    }
  }

  /// Estimator-response model. The OPO part goes through the response exactly.
  /// The seed term (S0 - 1) L(omega) has a slowly varying factor
  /// L = (gamma^2 + omega^2) / ((gamma +- eps)^2 + omega^2), so its response is
  /// L(f_k) times the measured unpumped excess, which has already been through
  /// the same response. The delay excess is the measured difference as is.
  void build_response_bases(const PhaseFitData& data, const OpoParams& opo) {
    const EstimatorResponse response(opt_.n_samples, opt_.sample_rate, opt_.detrended);
    OpoParams bare = opo;
    auto opo_only = [&](bool squeezed_quad) -> PsdFunction {
      return [bare, squeezed_quad](double f) {
        const auto v = output_spectrum_pair(bare, SeedNoiseModel::none(), kTwoPi * std::abs(f));
        return squeezed_quad ? v.v_x : v.v_p;
      };
    };
    const auto grid = response.bin_frequencies();
    const auto r_sq = response.spectrum(opo_only(true));
    const auto r_anti = response.spectrum(opo_only(false));
    const double g = opo.gamma();
    const double e = opo.epsilon;
    for (int path = 0; path < 2; ++path) {
      for (std::size_t k : used_) {
        const std::size_t b = nearest_bin(grid, data.freq_hz[k]);
        const double w2 = std::pow(kTwoPi * data.freq_hz[k], 2);
        const double l_sq = (g * g + w2) / ((g + e) * (g + e) + w2);
        const double l_anti = (g * g + w2) / ((g - e) * (g - e) + w2);
        double sq = r_sq[b] + l_sq * (data.unpumped_squeezed[0][k] - 1.0);
        double anti = r_anti[b] + l_anti * (data.unpumped_anti_squeezed[0][k] - 1.0);
        if (path == 1) {
          sq += data.unpumped_squeezed[1][k] - data.unpumped_squeezed[0][k];
          anti += data.unpumped_anti_squeezed[1][k] - data.unpumped_anti_squeezed[0][k];
        }
        base_sq_[path].push_back(std::max(sq, 0.0));
        base_anti_[path].push_back(std::max(anti, 0.0));
      }
    }
  }

  /// Fraction of the squeezed variance seen when measuring the squeezed quadrature.
  double squeezed_weight(int path, double sigma) const {
    const double offset = opt_.offsets[static_cast<std::size_t>(path)];
    return phase_averaged_variance({1.0, 0.0}, offset, std::abs(sigma), opt_.averaging);
  }

  static double positive(double v) { return std::max(v, 1e-12); }

  double weight(const std::vector<double>& se, std::size_t k) const {
    if (!opt_.weighted || se.empty()) return 1.0;
    require(se.size() > k && se[k] > 0.0, "fit_phase_sigma: weights need positive errors");
    return 1.0 / se[k];
  }

  static std::size_t nearest_bin(const std::vector<double>& grid, double f) {
    std::size_t best = 0;
    for (std::size_t b = 1; b < grid.size(); ++b) {
      if (std::abs(grid[b] - f) < std::abs(grid[best] - f)) best = b;
    }
    return best;
  }

  PhaseFitOptions opt_;
  SeedNoiseModel seed_;
  std::size_t clipped_ = 0;
  std::vector<std::size_t> used_;
  std::array<std::vector<double>, 2> base_sq_;
  std::array<std::vector<double>, 2> base_anti_;
  std::vector<double> measured_;
  std::vector<double> weights_;
  std::vector<double> l_sq_;
  std::vector<double> l_anti_;
  std::vector<double> meas_se_db_;
  std::vector<double> u_value_;
  std::vector<double> u_se_db_;
  std::vector<double> cal_se_db_;
  bool errors_supplied_ = false;
};

struct LmFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const PhaseFitModel* model = nullptr;

  int inputs() const { return 2; }
  int values() const { return static_cast<int>(model->n_values()); }
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    f = model->residuals(x(0), x(1));
    return 0;
  }
};

template <class F>
double golden_min(F&& f, double lo, double hi, double xtol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > xtol) {
    if (f1 > f2) {
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
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline constexpr double kProfileSearchMaxDeg = 30.0;

/// Least-squares fit of the two path phase-noise widths (sigma_1, sigma_2) to
/// the squeezed and anti-squeezed spectra of both paths in dB.
///
/// Seed-noise coefficients come from the unpumped direct-path spectra; the
/// delay path adds the unpumped delay-minus-direct excess. Confidence
/// intervals are Wald intervals from the fit covariance, or profile-likelihood
/// intervals when the estimate sits too close to zero for Wald to be usable.
inline FitResult fit_phase_sigma(const PhaseFitData& data, const OpoParams& opo,
                                 const PhaseFitOptions& opt = {}) {
  require(opt.confidence > 0.0 && opt.confidence < 1.0, "fit_phase_sigma: bad confidence level");
  const detail::PhaseFitModel model(data, opo, opt);
  FitResult result;
  result.n_points = model.n_values();
  if (model.clipped() > 0) {
    result.diagnostic = std::to_string(model.clipped()) +
                        " unpumped bins below shot noise; seed coefficients clipped to zero";
  }

  detail::LmFunctor functor;
  functor.model = &model;
  Eigen::NumericalDiff<detail::LmFunctor, Eigen::Central> numdiff(functor);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<detail::LmFunctor, Eigen::Central>> lm(numdiff);
  lm.parameters.maxfev = 2000;
  lm.parameters.xtol = 1e-12;
  lm.parameters.ftol = 1e-14;
  Eigen::VectorXd x(2);
  x << deg_to_rad(opt.initial_sigma_deg[0]), deg_to_rad(opt.initial_sigma_deg[1]);
  const auto status = lm.minimize(x);
  result.iterations = static_cast<int>(lm.iter);
  result.converged = status == Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall ||
                     status == Eigen::LevenbergMarquardtSpace::RelativeErrorTooSmall ||
                     status == Eigen::LevenbergMarquardtSpace::RelativeErrorAndReductionTooSmall ||
                     status == Eigen::LevenbergMarquardtSpace::CosinusTooSmall ||
                     status == Eigen::LevenbergMarquardtSpace::XtolTooSmall ||
                     status == Eigen::LevenbergMarquardtSpace::FtolTooSmall;
  // The model is even in each sigma.
  const double s1 = std::abs(x(0));
  const double s2 = std::abs(x(1));
  const Eigen::VectorXd res = model.residuals(s1, s2);
  result.residuals_db.assign(res.data(), res.data() + res.size());
  result.residual_norm = res.norm();
  result.runs_p_value = runs_test(result.residuals_db).p_value;
  if (!result.converged) {
    std::string trace = "residual trace:";
    for (double r : result.residuals_db) trace += " " + std::to_string(r);
    result.diagnostic += (result.diagnostic.empty() ? "" : "; ") +
                         std::string("Levenberg-Marquardt did not converge; ") + trace;
  }

  // Jacobian at the optimum.
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(model.n_values()), 2);
  const std::array<double, 2> at{s1, s2};
  for (int p = 0; p < 2; ++p) {
    const double h = std::max(1e-6, 1e-4 * at[static_cast<std::size_t>(p)]);
    std::array<double, 2> up = at;
    std::array<double, 2> dn = at;
    up[static_cast<std::size_t>(p)] += h;
    dn[static_cast<std::size_t>(p)] -= h;
    jac.col(p) = (model.residuals(up[0], up[1]) - model.residuals(dn[0], dn[1])) / (2.0 * h);
  }

  // Sandwich covariance around the least-squares bread. The middle term is
  // the residual covariance propagated from the errors of all eight spectra.
  // Without supplied errors every spectrum gets one common dB error, scaled
  // to the observed residuals: an averaged periodogram has a dB error that
  // depends on the trace count only, not on the level.
  const std::size_t bins = model.n_bins();
  const double m = static_cast<double>(model.n_values());
  const auto propagated = model.residual_covariance(s1, s2);
  const Eigen::Matrix2d info = jac.transpose() * jac;
  const Eigen::FullPivLU<Eigen::Matrix2d> lu(info);
  Eigen::Matrix2d bread = Eigen::Matrix2d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Matrix2d cov = bread;
  if (lu.isInvertible()) {
    bread = lu.inverse();
    Eigen::Matrix2d meat = Eigen::Matrix2d::Zero();
    double total_variance = 0.0;
    for (std::size_t c = 0; c < bins; ++c) {
      Eigen::Matrix<double, 4, 2> jc;
      for (Eigen::Index block = 0; block < 4; ++block) {
        jc.row(block) = jac.row(block * static_cast<Eigen::Index>(bins) + static_cast<Eigen::Index>(c));
      }
      meat += jc.transpose() * propagated[c] * jc;
      total_variance += propagated[c].trace();
    }
    double scale = 1.0;
    if (!model.errors_supplied()) {
      // E[RSS] = tr((I - H) Sigma) for the hat matrix H of the linearised fit.
      const double expected_rss = total_variance - (bread * meat).trace();
      scale = expected_rss > 0.0 ? res.squaredNorm() / expected_rss : 0.0;
    }
    cov = scale * bread * meat * bread;
  }
  const double rss_min = res.squaredNorm();

  // Supplied errors are known to high precision; an error level estimated
  // from the residuals carries m - 2 degrees of freedom.
  const double t_q =
      model.errors_supplied()
          ? boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * opt.confidence)
          : boost::math::quantile(boost::math::students_t(m - 2.0), 0.5 + 0.5 * opt.confidence);

  for (int p = 0; p < 2; ++p) {
    auto& est = result.sigma[static_cast<std::size_t>(p)];
    const double value = at[static_cast<std::size_t>(p)];
    const double se = std::sqrt(cov(p, p));
    est.value_deg = rad_to_deg(value);
    est.se_deg = std::isfinite(se) ? rad_to_deg(se) : std::numeric_limits<double>::infinity();
    if (std::isfinite(se) && value >= 2.0 * se) {
      est.ci_method = "wald";
      est.ci_lo_deg = rad_to_deg(std::max(0.0, value - t_q * se));
      est.ci_hi_deg = rad_to_deg(value + t_q * se);
      continue;
    }
    // Profile likelihood: re-optimise the other width at each trial value. The
    // threshold matches the robust variance for a locally quadratic profile.
    est.ci_method = "profile";
    const double rss_threshold =
        std::isfinite(se) ? rss_min + t_q * t_q * cov(p, p) / bread(p, p)
                          : rss_min * (1.0 + t_q * t_q / (m - 2.0));
    const double max_rad = deg_to_rad(kProfileSearchMaxDeg);
    auto profile_rss = [&](double v) {
      auto other = [&](double w) { return p == 0 ? model.rss(v, w) : model.rss(w, v); };
      const double best = detail::golden_min(other, 0.0, max_rad, 1e-7);
      return other(best);
    };
    auto bound = [&](double inside, double outside) {
      if (profile_rss(outside) <= rss_threshold) return outside;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (inside + outside);
        (profile_rss(mid) <= rss_threshold ? inside : outside) = mid;
      }
      return inside;
    };
    est.ci_lo_deg = rad_to_deg(bound(value, 0.0));
    est.ci_hi_deg = rad_to_deg(bound(value, max_rad));
  }
  return result;
}

}  // namespace eprsim
