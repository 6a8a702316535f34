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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eprsim/dsp.hpp"
#include "eprsim/error.hpp"
#include "eprsim/fit.hpp"
#include "eprsim/gaussian.hpp"
#include "eprsim/network.hpp"
#include "eprsim/signal_model.hpp"
#include "eprsim/stats.hpp"
#include "eprsim/trace_synth.hpp"

namespace eprsim {

/// Angle grids (rad) for the two measurement sets and the analysis frequencies.
struct TomographyPlan {
  std::vector<double> set1_angles;  // (theta_A, theta_B) = (theta, -theta)
  std::vector<double> set2_angles;  // (theta, theta - pi/2)
  std::vector<double> frequencies_hz{3e6, 10e6};

  static std::vector<double> uniform_grid(std::size_t points) {
    require(points >= 2, "TomographyPlan: need at least two grid points");
    std::vector<double> g;
    for (std::size_t i = 0; i < points; ++i) {
      g.push_back(0.5 * kPi * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    return g;
  }

  static TomographyPlan standard(std::size_t points = 13) {
    return {uniform_grid(points), uniform_grid(points), {3e6, 10e6}};
  }

  /// Smallest plan that still allows a covariance reconstruction.
  static TomographyPlan endpoints() { return {{0.0, 0.5 * kPi}, {0.0, 0.5 * kPi}, {3e6, 10e6}}; }

  void validate() const {
    require(!set1_angles.empty() || !set2_angles.empty(), "TomographyPlan: no angles");
    require(!frequencies_hz.empty(), "TomographyPlan: no analysis frequencies");
    for (const auto* grid : {&set1_angles, &set2_angles}) {
      for (double t : *grid) {
        require(t >= -1e-12 && t <= 0.5 * kPi + 1e-12, "TomographyPlan: angles must lie in [0, pi/2]");
      }
    }
    for (double f : frequencies_hz) require(f > 0.0, "TomographyPlan: frequencies must be positive");
  }
};

inline MeasurementAngles plan_angles(int set, double theta) {
  require(set == 1 || set == 2, "measurement set must be 1 or 2");
  return set == 1 ? MeasurementAngles::set1(theta) : MeasurementAngles::set2(theta);
}

/// Processed traces for one angle setting.
struct AngleDataset {
  TraceSet a;
  TraceSet b;
};

/// Processed shot-noise and electronic-noise calibration sets.
struct CalibrationSets {
  TraceSet shot;
  TraceSet electronic;
};

/// Provider of processed datasets, simulated or read from disk.
class DataSource {
 public:
  virtual ~DataSource() = default;
  virtual AngleDataset signal(int set, double theta) = 0;
  virtual CalibrationSets calibration() = 0;
};

/// Tag that keeps random streams of different datasets apart.
inline std::uint32_t dataset_tag(int set, double theta, bool pumped = true) {
  const auto deci_deg = static_cast<std::uint32_t>(std::lround(rad_to_deg(theta) * 10.0));
  return 2u + static_cast<std::uint32_t>(set) * 2048u + deci_deg + (pumped ? 0u : (1u << 20));
}
inline constexpr std::uint32_t kShotTag = 0;
inline constexpr std::uint32_t kElectronicTag = 1;

/// Generates and processes datasets on demand.
class SimulatedSource : public DataSource {
 public:
  SimulatedSource(SignalModel model, SwitchTiming timing, ArtifactModel artifacts,
                  std::uint64_t seed, ProcessingOptions processing = {})
      : model_(std::move(model)),
        timing_(timing),
        artifacts_(std::move(artifacts)),
        seed_(seed),
        processing_(processing) {}

  AngleDataset signal(int set, double theta) override {
    auto [a, b] = synthesize_quadrature_traces(model_, plan_angles(set, theta), timing_, artifacts_,
                                               seed_, dataset_tag(set, theta, model_.pumped),
                                               processing_.threads);
    return {process(std::move(a), processing_), process(std::move(b), processing_)};
  }

  CalibrationSets calibration() override {
    return {process(synthesize_calibration(TraceKind::kShotNoise, timing_, artifacts_, seed_,
                                           kShotTag, processing_.threads),
                    processing_),
            process(synthesize_calibration(TraceKind::kElectronic, timing_, artifacts_, seed_,
                                           kElectronicTag, processing_.threads),
                    processing_)};
  }

  const SignalModel& model() const { return model_; }

 private:
  SignalModel model_;
  SwitchTiming timing_;
  ArtifactModel artifacts_;
  std::uint64_t seed_;
  ProcessingOptions processing_;
};

/// One tomography row: all quantities in V0 units.
struct TomographyRow {
  int set = 1;
  double theta = 0.0;  // rad
  double freq_hz = 0.0;
  Estimate sum;    // Var(q_A + q_B); vacuum 2
  Estimate diff;   // Var(q_A - q_B)
  Estimate var_a;  // Var(q_A); vacuum 1
  Estimate var_b;
  Estimate cov_ab;  // Cov(q_A, q_B)
};

struct TomographyTable {
  std::vector<TomographyRow> rows;

  std::optional<TomographyRow> find(int set, double theta, double freq_hz) const {
    for (const auto& r : rows) {
      if (r.set == set && std::abs(r.theta - theta) < 1e-6 &&
          std::abs(r.freq_hz - freq_hz) < 1e-3) {
        return r;
      }
    }
    return std::nullopt;
  }
};

/// Mode-extracted statistics for one processed dataset at one frequency.
inline TomographyRow analyze_dataset(const AngleDataset& data, const CalibrationSets& cal, int set,
                                     double theta, double freq_hz) {
  if (data.a.n_traces() != data.b.n_traces() || data.a.n_samples() != data.b.n_samples()) {
    throw DataError("analyze_dataset: A and B sets differ in shape");
  }
  const auto ma = mode_values(data.a, freq_hz);
  const auto mb = mode_values(data.b, freq_hz);
  const auto shot = variance_with_jackknife(mode_values(cal.shot, freq_hz));
  const auto el = variance_with_jackknife(mode_values(cal.electronic, freq_hz));
  std::vector<double> plus(ma.size());
  std::vector<double> minus(ma.size());
  for (std::size_t i = 0; i < ma.size(); ++i) {
    plus[i] = ma[i] + mb[i];
    minus[i] = ma[i] - mb[i];
  }
  TomographyRow row;
  row.set = set;
  row.theta = theta;
  row.freq_hz = freq_hz;
  row.sum = normalized_ratio(variance_with_jackknife(plus), shot, el, 2.0);
  row.diff = normalized_ratio(variance_with_jackknife(minus), shot, el, 2.0);
  row.var_a = normalized_ratio(variance_with_jackknife(ma), shot, el, 1.0);
  row.var_b = normalized_ratio(variance_with_jackknife(mb), shot, el, 1.0);
  row.cov_ab = normalized_ratio(covariance_with_jackknife(ma, mb), shot, el, 0.0);
  return row;
}

/// Runs the pipeline for every angle of the plan and tabulates the
/// mode-extracted variances at each analysis frequency.
inline TomographyTable run_tomography(const TomographyPlan& plan, DataSource& source) {
  plan.validate();
  const CalibrationSets cal = source.calibration();
  TomographyTable table;
  for (int set : {1, 2}) {
    const auto& grid = set == 1 ? plan.set1_angles : plan.set2_angles;
    for (double theta : grid) {
      const AngleDataset data = source.signal(set, theta);
      for (double f : plan.frequencies_hz) {
        table.rows.push_back(analyze_dataset(data, cal, set, theta, f));
      }
    }
  }
  return table;
}

/// Set-1 endpoint spectra with and without pump, arranged for fit_phase_sigma.
/// At theta = 0, A+B carries the direct path's squeezed quadrature and A-B the
/// delay path's anti-squeezed one; at pi/2 the paths swap.
inline PhaseFitData measure_fit_spectra(DataSource& pumped, DataSource& unpumped,
                                        const CalibrationSets& cal, unsigned threads = 1) {
  PhaseFitData d;
  auto spectra = [&](DataSource& src, double theta) {
    const AngleDataset ds = src.signal(1, theta);
    return std::pair{
        combined_spectrum(ds.a, ds.b, +1.0, cal.shot, cal.electronic, Window::kRectangular, threads),
        combined_spectrum(ds.a, ds.b, -1.0, cal.shot, cal.electronic, Window::kRectangular, threads)};
  };
  const auto [p0_plus, p0_minus] = spectra(pumped, 0.0);
  const auto [p90_plus, p90_minus] = spectra(pumped, 0.5 * kPi);
  const auto [u0_plus, u0_minus] = spectra(unpumped, 0.0);
  const auto [u90_plus, u90_minus] = spectra(unpumped, 0.5 * kPi);
  d.freq_hz = p0_plus.freq_hz;
  d.squeezed = {p0_plus.variance_rel_shot, p90_plus.variance_rel_shot};
  d.anti_squeezed = {p90_minus.variance_rel_shot, p0_minus.variance_rel_shot};
  d.unpumped_squeezed = {u0_plus.variance_rel_shot, u90_plus.variance_rel_shot};
  d.unpumped_anti_squeezed = {u90_minus.variance_rel_shot, u0_minus.variance_rel_shot};
  d.squeezed_se_db = {p0_plus.stderr_db, p90_plus.stderr_db};
  d.anti_squeezed_se_db = {p90_minus.stderr_db, p0_minus.stderr_db};
  d.unpumped_squeezed_se_db = {u0_plus.stderr_db, u90_plus.stderr_db};
  d.unpumped_anti_squeezed_se_db = {u90_minus.stderr_db, u0_minus.stderr_db};
  d.calibration_se_db = p0_plus.calibration_se_db;
  return d;
}

/// Covariance with the intra-mode xp terms left open, plus standard errors.
struct ReconstructedCov {
  CovarianceTemplate tmpl;  // a and b marked unknown, set to 0 in entries
  Matrix4 se = Matrix4::Zero();
  double freq_hz = 0.0;
};

/// Fills every measurable entry of the two-mode covariance at one frequency
/// from the set-1 and set-2 rows at theta = 0 and pi/2. Diagonal entries
/// seen in several rows are averaged.
inline ReconstructedCov reconstruct_cov(const TomographyTable& table, double freq_hz) {
  constexpr double kHalfPi = 0.5 * kPi;
  auto need = [&](int set, double theta) {
    auto r = table.find(set, theta, freq_hz);
    if (!r) {
      throw DataError("reconstruct_cov: missing set-" + std::to_string(set) + " row at theta=" +
                      std::to_string(rad_to_deg(theta)) + " deg");
    }
    return *r;
  };
  const TomographyRow s1_0 = need(1, 0.0);
  const TomographyRow s1_90 = need(1, kHalfPi);
  const TomographyRow s2_0 = need(2, 0.0);
  const TomographyRow s2_90 = need(2, kHalfPi);

  auto average = [](const Estimate& u, const Estimate& v) {
    return Estimate{0.5 * (u.value + v.value), 0.5 * std::hypot(u.se, v.se)};
  };
  auto negate = [](const Estimate& e) { return Estimate{-e.value, e.se}; };

  // Set 1 at 0: (xA, xB); at pi/2: (pA, -pB).
  // Set 2 at 0: (xA, -pB); at pi/2: (pA, xB).
  const Estimate xa = average(s1_0.var_a, s2_0.var_a);
  const Estimate pa = average(s1_90.var_a, s2_90.var_a);
  const Estimate xb = average(s1_0.var_b, s2_90.var_b);
  const Estimate pb = average(s1_90.var_b, s2_0.var_b);
  const Estimate xa_xb = s1_0.cov_ab;
  const Estimate pa_pb = negate(s1_90.cov_ab);
  const Estimate xa_pb = negate(s2_0.cov_ab);
  const Estimate pa_xb = s2_90.cov_ab;

  ReconstructedCov out;
  out.freq_hz = freq_hz;
  Matrix4& m = out.tmpl.entries;
  m.setZero();
  auto put = [&](int i, int j, const Estimate& e) {
    m(i, j) = m(j, i) = e.value;
    out.se(i, j) = out.se(j, i) = e.se;
  };
  put(kXA, kXA, xa);
  put(kPA, kPA, pa);
  put(kXB, kXB, xb);
  put(kPB, kPB, pb);
  put(kXA, kXB, xa_xb);
  put(kPA, kPB, pa_pb);
  put(kXA, kPB, xa_pb);
  put(kPA, kXB, pa_xb);
  out.tmpl.a_unknown = true;
  out.tmpl.b_unknown = true;
  return out;
}

/// Point estimate for the unmeasured a = <xA pA> and b = <xB pB>: the mean of
/// the measured inter-mode xp covariances.
inline double xp_point_estimate(const CovarianceTemplate& tmpl) {
  return 0.5 * (tmpl.entries(kXA, kPB) + tmpl.entries(kPA, kXB));
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct PhysicalityVerdict {
  std::string label;
  double a = 0.0;
  double b = 0.0;
  bool physical = false;
};

struct Report {
  double duan = 0.0;
  bool duan_entangled = false;
  ReidProducts reid;
  /// Largest suppression below shot noise over the supplied spectra.
  std::optional<double> max_two_mode_squeezing_db;
  BoundScanResult bounds;
  double xp_point = 0.0;
  std::vector<PhysicalityVerdict> physicality;
  bool physical = false;  // at the point estimate
  double efficiency = 1.0;
  std::optional<FitResult> fit;
};

/// Summary of a reconstructed covariance, optional spectra and fit.
inline Report report(const CovarianceTemplate& cov, const std::vector<SpectrumEstimate>& spectra,
                     const std::optional<FitResult>& fit,
                     const std::vector<double>& stage_efficiencies,
                     double grid_step = kDefaultBoundGridStep) {
  Report r;
  r.efficiency = efficiency_budget(stage_efficiencies);
  r.xp_point = xp_point_estimate(cov);
  const double a0 = cov.a_unknown ? r.xp_point : cov.known_a();
  const double b0 = cov.b_unknown ? r.xp_point : cov.known_b();
  // Duan and Reid do not involve a and b.
  const CovarianceMatrix4 at_point(cov.with(a0, b0));
  r.duan = duan_criterion(at_point);
  r.duan_entangled = r.duan < kDuanThreshold;
  r.reid = reid_criterion(at_point);
  r.bounds = bound_scan(cov, grid_step);
  r.physicality.push_back({"point", a0, b0, is_physical(at_point)});
  r.physical = r.physicality.back().physical;
  if (r.bounds.feasible) {
    // Each range endpoint is checked together with the partner value that
    // maximises the smallest uncertainty eigenvalue there.
    const double window = 3.0 * cov.entries.diagonal().maxCoeff();
    const auto add = [&](const std::string& label, double a, double b) {
      r.physicality.push_back({label, a, b, is_physical(cov.with(a, b))});
    };
    auto best_b = [&](double a) {
      if (!cov.b_unknown) return cov.known_b();
      return detail::golden_max([&](double b) { return min_uncertainty_eigenvalue(cov.with(a, b)); },
                                -window, window, 1e-9)
          .first;
    };
    auto best_a = [&](double b) {
      if (!cov.a_unknown) return cov.known_a();
      return detail::golden_max([&](double a) { return min_uncertainty_eigenvalue(cov.with(a, b)); },
                                -window, window, 1e-9)
          .first;
    };
    add("a_lo", r.bounds.a.lo, best_b(r.bounds.a.lo));
    add("a_hi", r.bounds.a.hi, best_b(r.bounds.a.hi));
    add("b_lo", best_a(r.bounds.b.lo), r.bounds.b.lo);
    add("b_hi", best_a(r.bounds.b.hi), r.bounds.b.hi);
  }
  for (const auto& s : spectra) {
    for (double v : s.variance_db) {
      if (!r.max_two_mode_squeezing_db || -v > *r.max_two_mode_squeezing_db) {
        r.max_two_mode_squeezing_db = -v;
      }
    }
  }
  r.fit = fit;
  return r;
}

}  // namespace eprsim
