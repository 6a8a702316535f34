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

// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset. Exit status is nonzero if any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "eprsim/eprsim.hpp"

namespace {

using namespace eprsim;
using Clock = std::chrono::steady_clock;

// Tolerances.
constexpr double kDecayRateMhz = 8.07;
constexpr double kDecayRateTolMhz = 0.05;
constexpr double kPumpRateMhz = 5.23;
constexpr double kPumpRateTolMhz = 0.1;
constexpr double kEfficiency = 0.684;
constexpr double kEfficiencyTol = 5e-4;  // half a unit in the last quoted digit
constexpr double kBoundA[2] = {-1.24, 1.17};
constexpr double kBoundB[2] = {-1.10, 1.21};
constexpr double kBoundTol = 0.02;
constexpr double kBoundRuntimeS = 10.0;
constexpr double kDuan = 1.70;
constexpr double kDuanTol = 0.05;
constexpr double kReid[2] = {0.678, 0.623};
constexpr double kReidTol = 0.03;
constexpr double kSqueezedDb = -4.16;
constexpr double kSqueezedTolDb = 0.05;
constexpr double kDeskDuan[2] = {1.6, 1.9};
constexpr double kSpectrumTolDb = 0.3;
constexpr double kSpectrumBandMhz[2] = {2.0, 15.0};
constexpr double kSlopeExcessDb = 3.0;
constexpr double kLowFrequencyMhz = 2.0;
constexpr double kDeskRuntimeS = 120.0;
constexpr double kSigmaTolDeg = 0.5;
constexpr double kCoverage = 0.90;
constexpr int kFitRepeats = 50;
constexpr int kPhysicalDraws = 1000;
constexpr int kMonteCarloDraws = 100;
constexpr std::size_t kMonteCarloSamples = 20000;
constexpr double kMonteCarloSe = 5.0;
constexpr double kOffsetSe = 3.0;

const char* const kProfile = EPRSIM_SOURCE_DIR "/config/default_profile.json";

int g_failures = 0;

void verdict(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %2d %-32s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string format(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ExperimentConfig default_config() {
  ExperimentConfig cfg = load_config(kProfile);
  cfg.processing.threads = 1;
  return cfg;
}

// Reference two-mode covariance with the intra-mode xp terms open, V0 units.
CovarianceTemplate reference_matrix() {
  CovarianceTemplate t;
  t.entries << 4.36, 0.0, -3.84, 0.36,  //
      0.0, 4.43, 0.45, 3.92,            //
      -3.84, 0.45, 4.17, 0.0,           //
      0.36, 3.92, 0.0, 4.26;
  t.a_unknown = true;
  t.b_unknown = true;
  return t;
}

void cavity_rate() {
  const double mhz = decay_rate(CavityGeometry{0.10, 0.0055, 0.320}) / kTwoPi * 1e-6;
  verdict(1, "cavity decay rate", std::abs(mhz - kDecayRateMhz) <= kDecayRateTolMhz,
          format("gamma/2pi = %.4f MHz (want %.2f +- %.2f)", mhz, kDecayRateMhz, kDecayRateTolMhz));
}

void pump_rate_check() {
  const double gamma = decay_rate(CavityGeometry{0.10, 0.0055, 0.320});
  const double mhz = pump_rate(350.0, 833.0, gamma) / kTwoPi * 1e-6;
  verdict(2, "pump rate", std::abs(mhz - kPumpRateMhz) <= kPumpRateTolMhz,
          format("epsilon/2pi = %.4f MHz (want %.2f +- %.1f)", mhz, kPumpRateMhz, kPumpRateTolMhz));
}

void efficiency() {
  const double eta = efficiency_budget({0.94, 0.80, 0.91});
  const bool pass = std::abs(eta - kEfficiency) <= kEfficiencyTol && std::lround(100.0 * eta) == 68;
  verdict(3, "efficiency budget", pass,
          format("eta = %.5f (want %.3f +- %.4f, 68%%)", eta, kEfficiency, kEfficiencyTol));
}

void bounds() {
  const auto t0 = Clock::now();
  const BoundScanResult r = bound_scan(reference_matrix(), kDefaultBoundGridStep);
  const double dt = seconds_since(t0);
  const bool pass = r.feasible && std::abs(r.a.lo - kBoundA[0]) <= kBoundTol &&
                    std::abs(r.a.hi - kBoundA[1]) <= kBoundTol &&
                    std::abs(r.b.lo - kBoundB[0]) <= kBoundTol &&
                    std::abs(r.b.hi - kBoundB[1]) <= kBoundTol && dt < kBoundRuntimeS;
  verdict(4, "bound scan", pass,
          format("a in [%.3f, %.3f], b in [%.3f, %.3f], %.2f s", r.a.lo, r.a.hi, r.b.lo, r.b.hi, dt));
}

void criteria_arithmetic() {
  const CovarianceMatrix4 cov(reference_matrix().with(0.0, 0.0));
  const double duan = duan_criterion(cov);
  const ReidProducts reid = reid_criterion(cov);
  const bool pass = std::abs(duan - kDuan) <= kDuanTol &&
                    std::abs(reid.a_given_b - kReid[0]) <= kReidTol &&
                    std::abs(reid.b_given_a - kReid[1]) <= kReidTol;
  verdict(5, "Duan and Reid arithmetic", pass,
          format("Duan %.3f V0, Reid %.3f and %.3f V0^2", duan, reid.a_given_b, reid.b_given_a));
}

void analytic_spectrum() {
  // Rounded published parameters; no seed noise, no phase noise.
  const OpoParams p = OpoParams::from_total(kTwoPi * 8.1e6, kTwoPi * 5.2e6, 0.68);
  const double db = to_db(output_spectrum(p, SeedNoiseModel::none(), kTwoPi * 3e6, Quadrature::kX));
  // Same evaluation with rates derived from the cavity and pump inputs.
  const ExperimentConfig cfg = default_config();
  const double derived =
      to_db(output_spectrum(cfg.opo(), SeedNoiseModel::none(), kTwoPi * 3e6, Quadrature::kX));
  verdict(6, "analytic squeezing at 3 MHz", std::abs(db - kSqueezedDb) <= kSqueezedTolDb,
          format("%.3f dB (want %.2f +- %.2f); derived rates give %.3f dB", db, kSqueezedDb,
                 kSqueezedTolDb, derived));
}

// Keeps the processed set-1 endpoint datasets seen while a tomography runs.
class RecordingSource : public DataSource {
 public:
  explicit RecordingSource(DataSource& inner) : inner_(inner) {}
  AngleDataset signal(int set, double theta) override {
    AngleDataset d = inner_.signal(set, theta);
    if (set == 1 && (theta == 0.0 || std::abs(theta - 0.5 * kPi) < 1e-12)) kept[theta == 0.0 ? 0 : 1] = d;
    return d;
  }
  CalibrationSets calibration() override {
    cal = inner_.calibration();
    return cal;
  }
  std::array<AngleDataset, 2> kept;
  CalibrationSets cal;

 private:
  DataSource& inner_;
};

void desk_experiment() {
  ExperimentConfig cfg = default_config();
  const SignalModel model = cfg.signal_model();
  const auto t0 = Clock::now();
  SimulatedSource sim(model, cfg.timing, cfg.artifacts, cfg.master_seed, cfg.processing);
  RecordingSource source(sim);
  const TomographyTable table = run_tomography(cfg.plan, source);
  const ReconstructedCov rc = reconstruct_cov(table, 3e6);
  const Report rep = report(rc.tmpl, {}, std::nullopt, cfg.stage_efficiencies);

  // Set-1 endpoint spectra and their pointwise predictions.
  struct Channel {
    const char* name;
    int dataset;
    double sign;
    int path;
    double extra_angle;
  };
  const Channel channels[] = {{"direct squeezed", 0, +1.0, 0, 0.0},
                              {"delay anti-squeezed", 0, -1.0, 1, 0.5 * kPi},
                              {"delay squeezed", 1, +1.0, 1, 0.0},
                              {"direct anti-squeezed", 1, -1.0, 0, 0.5 * kPi}};
  double worst = 0.0;
  std::string worst_where;
  SpectrumEstimate direct_squeezed;
  for (const auto& ch : channels) {
    const auto& ds = source.kept[static_cast<std::size_t>(ch.dataset)];
    const SpectrumEstimate s =
        combined_spectrum(ds.a, ds.b, ch.sign, source.cal.shot, source.cal.electronic);
    if (ch.dataset == 0 && ch.sign > 0) direct_squeezed = s;
    const auto& ph = model.phase[static_cast<std::size_t>(ch.path)];
    for (std::size_t k = 0; k < s.freq_hz.size(); ++k) {
      const double f_mhz = s.freq_hz[k] * 1e-6;
      if (f_mhz < kSpectrumBandMhz[0] || f_mhz > kSpectrumBandMhz[1]) continue;
      const double predicted = phase_averaged_variance(model.path_pair(ch.path, kTwoPi * s.freq_hz[k]),
                                                       ph.offset + ch.extra_angle, ph.jitter_sigma);
      const double dev = std::abs(s.variance_db[k] - to_db(predicted));
      if (dev > worst) {
        worst = dev;
        worst_where = format("%s at %.2f MHz", ch.name, f_mhz);
      }
    }
  }
  const double runtime = seconds_since(t0);

  // Ablation: same data without slope removal.
  ExperimentConfig raw_cfg = cfg;
  raw_cfg.processing.remove_slope = false;
  SimulatedSource raw(model, raw_cfg.timing, raw_cfg.artifacts, cfg.master_seed, raw_cfg.processing);
  const CalibrationSets raw_cal = raw.calibration();
  const AngleDataset raw_ds = raw.signal(1, 0.0);
  const SpectrumEstimate unsloped =
      combined_spectrum(raw_ds.a, raw_ds.b, +1.0, raw_cal.shot, raw_cal.electronic);
  double excess = -1e9;
  double excess_f = 0.0;
  for (std::size_t k = 0; k < unsloped.freq_hz.size(); ++k) {
    if (unsloped.freq_hz[k] * 1e-6 >= kLowFrequencyMhz) break;
    const double d = unsloped.variance_db[k] - direct_squeezed.variance_db[k];
    if (d > excess) {
      excess = d;
      excess_f = unsloped.freq_hz[k] * 1e-6;
    }
  }

  const double oracle = duan_criterion(model.two_mode_cov(kTwoPi * 3e6));
  verdict(7, "desk experiment (a) Duan", rep.duan >= kDeskDuan[0] && rep.duan <= kDeskDuan[1],
          format("Duan at 3 MHz %.3f V0 (want [%.1f, %.1f]; pointwise model %.3f)", rep.duan,
                 kDeskDuan[0], kDeskDuan[1], oracle));
  verdict(7, "desk experiment (b) spectra", worst <= kSpectrumTolDb,
          format("max |measured - model| %.3f dB over %.0f-%.0f MHz (%s)", worst, kSpectrumBandMhz[0],
                 kSpectrumBandMhz[1], worst_where.c_str()));
  verdict(7, "desk experiment (c) slope", excess >= kSlopeExcessDb,
          format("skipping slope removal adds %.2f dB at %.2f MHz", excess, excess_f));
  verdict(7, "desk experiment (d) runtime", runtime < kDeskRuntimeS,
          format("%.1f s single-threaded for %zu datasets of %zu traces", runtime,
                 cfg.plan.set1_angles.size() + cfg.plan.set2_angles.size(), cfg.timing.traces_per_set));
}

// Noise-free spectra: expected estimator output for the model.
PhaseFitData expected_fit_spectra(const ExperimentConfig& cfg) {
  const SignalModel pumped = cfg.signal_model(true);
  const SignalModel unpumped = cfg.signal_model(false);
  const EstimatorResponse resp(cfg.timing.n_samples(), cfg.timing.sample_rate, cfg.processing.remove_slope);
  auto spectrum = [&](const SignalModel& m, int path, double extra) {
    const auto& ph = m.phase[static_cast<std::size_t>(path)];
    return resp.spectrum([&](double f) {
      return phase_averaged_variance(m.path_pair(path, kTwoPi * std::abs(f)), ph.offset + extra,
                                     ph.jitter_sigma);
    });
  };
  PhaseFitData d;
  d.freq_hz = resp.bin_frequencies();
  for (int i = 0; i < 2; ++i) {
    const auto k = static_cast<std::size_t>(i);
    d.squeezed[k] = spectrum(pumped, i, 0.0);
    d.anti_squeezed[k] = spectrum(pumped, i, 0.5 * kPi);
    d.unpumped_squeezed[k] = spectrum(unpumped, i, 0.0);
    d.unpumped_anti_squeezed[k] = spectrum(unpumped, i, 0.5 * kPi);
  }
  return d;
}

void phase_fit_round_trip() {
  const ExperimentConfig cfg = default_config();
  const std::array<double, 2> truth{rad_to_deg(cfg.phase[0].jitter_sigma),
                                    rad_to_deg(cfg.phase[1].jitter_sigma)};

  const FitResult clean = fit_phase_sigma(expected_fit_spectra(cfg), cfg.opo(), cfg.fit_options());
  bool clean_ok = clean.converged;
  for (int p = 0; p < 2; ++p) {
    clean_ok = clean_ok && std::abs(clean.sigma[static_cast<std::size_t>(p)].value_deg -
                                    truth[static_cast<std::size_t>(p)]) <= kSigmaTolDeg;
  }

  std::array<int, 2> covered{0, 0};
  std::array<int, 2> within{0, 0};
  std::array<double, 2> sum{0.0, 0.0};
  int converged = 0;
  const auto t0 = Clock::now();
  for (int r = 0; r < kFitRepeats; ++r) {
    const std::uint64_t seed = cfg.master_seed + 1000u + static_cast<std::uint64_t>(r);
    SimulatedSource pumped(cfg.signal_model(true), cfg.timing, cfg.artifacts, seed, cfg.processing);
    SimulatedSource unpumped(cfg.signal_model(false), cfg.timing, cfg.artifacts, seed, cfg.processing);
    const PhaseFitData data = measure_fit_spectra(pumped, unpumped, pumped.calibration());
    const FitResult fit = fit_phase_sigma(data, cfg.opo(), cfg.fit_options());
    converged += fit.converged ? 1 : 0;
    for (std::size_t p = 0; p < 2; ++p) {
      const auto& s = fit.sigma[p];
      covered[p] += (s.ci_lo_deg <= truth[p] && truth[p] <= s.ci_hi_deg) ? 1 : 0;
      within[p] += std::abs(s.value_deg - truth[p]) <= kSigmaTolDeg ? 1 : 0;
      sum[p] += s.value_deg;
    }
    std::printf("       repeat %2d: sigma %.2f [%.2f, %.2f]  %.2f [%.2f, %.2f]\n", r,
                fit.sigma[0].value_deg, fit.sigma[0].ci_lo_deg, fit.sigma[0].ci_hi_deg,
                fit.sigma[1].value_deg, fit.sigma[1].ci_lo_deg, fit.sigma[1].ci_hi_deg);
  }
  const double n = kFitRepeats;
  const std::array<double, 2> mean{sum[0] / n, sum[1] / n};
  const bool pass = clean_ok && converged == kFitRepeats &&
                    std::abs(mean[0] - truth[0]) <= kSigmaTolDeg &&
                    std::abs(mean[1] - truth[1]) <= kSigmaTolDeg && covered[0] >= kCoverage * n &&
                    covered[1] >= kCoverage * n;
  verdict(8, "phase-fit round trip", pass,
          format("noise-free %.2f/%.2f deg; mean of %d fits %.2f/%.2f deg (truth %.1f/%.1f); "
                 "CI coverage %d/%d and %d/%d; single fits within %.1f deg: %d and %d; %.0f s",
                 clean.sigma[0].value_deg, clean.sigma[1].value_deg, kFitRepeats, mean[0], mean[1],
                 truth[0], truth[1], covered[0], kFitRepeats, covered[1], kFitRepeats, kSigmaTolDeg,
                 within[0], within[1], seconds_since(t0)));
}

// Random physical single-mode input: squeezed then thermalised.
PathState random_path(RandomStream& rng) {
  const double r = 1.5 * rng.uniform();
  const double thermal = 1.0 + 0.5 * rng.uniform();
  return {std::exp(-2.0 * r) * thermal, std::exp(2.0 * r) * thermal, rng.uniform(),
          kPi * (2.0 * rng.uniform() - 1.0), 0.3 * rng.uniform()};
}

bool property_physical() {
  int ok = 0;
  for (int i = 0; i < kPhysicalDraws; ++i) {
    RandomStream rng(91, static_cast<std::uint64_t>(i));
    ok += is_physical(build_two_mode_cov(random_path(rng), random_path(rng))) ? 1 : 0;
  }
  verdict(9, "property: physicality", ok == kPhysicalDraws,
          format("%d/%d network-built states physical", ok, kPhysicalDraws));
  return ok == kPhysicalDraws;
}

bool property_monte_carlo() {
  int ok = 0;
  double worst = 0.0;
  for (int i = 0; i < kMonteCarloDraws; ++i) {
    RandomStream rng(92, static_cast<std::uint64_t>(i));
    PathState p1 = random_path(rng);
    PathState p2 = random_path(rng);
    p1.phase_offset = p2.phase_offset = 0.0;
    p1.phase_jitter_sigma = p2.phase_jitter_sigma = 0.0;
    const MeasurementAngles angles{kPi * rng.uniform(), kPi * rng.uniform()};
    const auto v1 = p1.after_loss();
    const auto v2 = p2.after_loss();
    std::vector<double> qa(kMonteCarloSamples);
    std::vector<double> qb(kMonteCarloSamples);
    RandomStream samples(93, static_cast<std::uint64_t>(i));
    for (std::size_t s = 0; s < kMonteCarloSamples; ++s) {
      const Quads in{std::sqrt(v1.v_x) * samples.normal(), std::sqrt(v1.v_p) * samples.normal(),
                     std::sqrt(v2.v_x) * samples.normal(), std::sqrt(v2.v_p) * samples.normal()};
      std::tie(qa[s], qb[s]) = measured_quadrature(interfere(in), angles);
    }
    const Estimate mc = covariance_with_jackknife(qa, qb);
    const double z = std::abs(mc.value - analytic_cov(p1, p2, angles)) / mc.se;
    worst = std::max(worst, z);
    ok += z <= kMonteCarloSe ? 1 : 0;
  }
  verdict(9, "property: Monte Carlo covariance", ok == kMonteCarloDraws,
          format("%d/%d draws within %.0f SE (worst %.2f SE)", ok, kMonteCarloDraws, kMonteCarloSe, worst));
  return ok == kMonteCarloDraws;
}

bool property_slope_idempotent() {
  ExperimentConfig cfg = default_config();
  cfg.timing.traces_per_set = 500;
  auto [a, b] = synthesize_quadrature_traces(cfg.signal_model(), MeasurementAngles::set1(0.3), cfg.timing,
                                             cfg.artifacts, 94, 7);
  const TraceSet once = slope_remove(std::move(a));
  const TraceSet twice = slope_remove(once);
  double scale = 0.0;
  double diff = 0.0;
  for (std::size_t i = 0; i < once.data().size(); ++i) {
    scale = std::max(scale, std::abs(once.data()[i]));
    diff = std::max(diff, std::abs(once.data()[i] - twice.data()[i]));
  }
  const bool pass = diff <= 1e-12 * scale;
  verdict(9, "property: slope removal idempotent", pass,
          format("max change on second pass %.2e (scale %.2f)", diff, scale));
  return pass;
}

bool property_determinism() {
  ExperimentConfig cfg = default_config();
  cfg.timing.traces_per_set = 2000;
  const SignalModel model = cfg.signal_model();
  auto run = [&](unsigned threads) {
    auto [a, b] = synthesize_quadrature_traces(model, MeasurementAngles::set2(0.4), cfg.timing,
                                               cfg.artifacts, 95, 11, threads);
    ProcessingOptions opt = cfg.processing;
    opt.threads = threads;
    const TraceSet shot =
        process(synthesize_calibration(TraceKind::kShotNoise, cfg.timing, cfg.artifacts, 95, 0,
                                       threads),
                opt);
    const TraceSet el =
        process(synthesize_calibration(TraceKind::kElectronic, cfg.timing, cfg.artifacts, 95, 1,
                                       threads),
                opt);
    a = process(std::move(a), opt);
    b = process(std::move(b), opt);
    const SpectrumEstimate s = combined_spectrum(a, b, +1.0, shot, el, Window::kRectangular, threads);
    std::vector<double> bytes = a.data();
    bytes.insert(bytes.end(), b.data().begin(), b.data().end());
    bytes.insert(bytes.end(), s.variance_rel_shot.begin(), s.variance_rel_shot.end());
    bytes.insert(bytes.end(), s.stderr_rel_shot.begin(), s.stderr_rel_shot.end());
    return bytes;
  };
  const auto one = run(1);
  bool pass = true;
  for (unsigned threads : {2u, 3u, 8u}) {
    const auto other = run(threads);
    pass = pass && other.size() == one.size() &&
           std::memcmp(other.data(), one.data(), one.size() * sizeof(double)) == 0;
  }
  verdict(9, "property: thread determinism", pass,
          format("traces and spectra byte-equal for 1, 2, 3 and 8 threads (%zu values)", one.size()));
  return pass;
}

void properties() {
  property_physical();
  property_monte_carlo();
  property_slope_idempotent();
  property_determinism();
}

void offset_covariance() {
  ExperimentConfig cfg = default_config();
  cfg.plan = TomographyPlan::endpoints();
  cfg.plan.frequencies_hz = {3e6};
  const double f = 3e6;
  const EstimatorResponse resp(cfg.timing.n_samples(), cfg.timing.sample_rate, cfg.processing.remove_slope);

  auto run = [&](std::array<PhaseNoise, 2> phase, std::uint64_t seed) {
    SignalModel model = cfg.signal_model();
    model.phase = phase;
    SimulatedSource source(model, cfg.timing, cfg.artifacts, seed, cfg.processing);
    const ReconstructedCov rc = reconstruct_cov(run_tomography(cfg.plan, source), f);
    // Path states at the mode's effective variances.
    auto mode = [&](int path, bool squeezed) {
      return resp.mode_variance(
          [&](double hz) {
            const auto v = model.path_pair(path, kTwoPi * std::abs(hz));
            return squeezed ? v.v_x : v.v_p;
          },
          f);
    };
    const PathState p1{mode(0, true), mode(0, false), 1.0, phase[0].offset, phase[0].jitter_sigma};
    const PathState p2{mode(1, true), mode(1, false), 1.0, phase[1].offset, phase[1].jitter_sigma};
    return std::pair{rc, offset_xp_covariance(p1, p2)};
  };

  const double offset = cfg.phase[0].offset;
  const auto [with_offset, closed_form] = run({PhaseNoise{offset, 0.0}, PhaseNoise{offset, 0.0}}, 96);
  const double xa_pb = with_offset.tmpl.entries(kXA, kPB);
  const double se1 = with_offset.se(kXA, kPB);
  const bool match = std::abs(xa_pb - closed_form) <= kOffsetSe * se1;
  verdict(10, "offset xp covariance", match,
          format("<xA pB> %.4f +- %.4f V0 vs closed form %.4f (%.2f SE)", xa_pb, se1, closed_form,
                 std::abs(xa_pb - closed_form) / se1));

  const auto [jitter_only, zero] =
      run({PhaseNoise{0.0, cfg.phase[0].jitter_sigma}, PhaseNoise{0.0, cfg.phase[1].jitter_sigma}}, 97);
  const double z1 = std::abs(jitter_only.tmpl.entries(kXA, kPB)) / jitter_only.se(kXA, kPB);
  const double z2 = std::abs(jitter_only.tmpl.entries(kPA, kXB)) / jitter_only.se(kPA, kXB);
  verdict(10, "zero-mean jitter cross terms", z1 <= kOffsetSe && z2 <= kOffsetSe && zero == 0.0,
          format("<xA pB> %.4f +- %.4f, <pA xB> %.4f +- %.4f V0 (%.2f and %.2f SE)",
                 jitter_only.tmpl.entries(kXA, kPB), jitter_only.se(kXA, kPB),
                 jitter_only.tmpl.entries(kPA, kXB), jitter_only.se(kPA, kXB), z1, z2));
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<void()>> criteria{
      {1, cavity_rate},     {2, pump_rate_check},      {3, efficiency},
      {4, bounds},          {5, criteria_arithmetic},  {6, analytic_spectrum},
      {7, desk_experiment}, {8, phase_fit_round_trip}, {9, properties},
      {10, offset_covariance}};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  try {
    for (const auto& [id, run] : criteria) {
      if (selected.empty() || selected.contains(id)) run();
    }
  } catch (const std::exception& e) {
    std::printf("[FAIL] aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%s: %d failing check(s)\n", g_failures == 0 ? "ALL PASS" : "FAILURES", g_failures);
  return g_failures == 0 ? 0 : 1;
}
