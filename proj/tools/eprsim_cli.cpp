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

// eprsim: simulate -> process -> analyze -> fit -> report.
//
// Directory layout under --out:
//   config.json      copy of the configuration used by `simulate`
//   raw/             synthesized trace sets (.bin + .json sidecar)
//   processed/       conditioned trace sets
//   spectra/         per-path spectra CSV
//   tomography.csv, covariance_<f>MHz.json, fit.json, report.{json,txt}
//   figures/         plot-ready CSV tables

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eprsim/eprsim.hpp"

namespace fs = std::filesystem;
using namespace eprsim;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> threads;
  std::string angle_set = "all";
  std::vector<double> freq_mhz;
};

struct Context {
  ExperimentConfig cfg;
  fs::path out;
  fs::path config_path;
};

Context resolve(const CommonOptions& o, bool need_explicit_config) {
  Context ctx;
  fs::path cfg_path = o.config;
  if (cfg_path.empty()) {
    if (need_explicit_config || o.out.empty()) throw ConfigError("--config is required");
    cfg_path = fs::path(o.out) / "config.json";
    if (!fs::exists(cfg_path)) throw ConfigError("no --config given and none found in " + o.out);
  }
  ctx.config_path = cfg_path;
  ctx.cfg = load_config(cfg_path);
  ctx.out = o.out.empty() ? ctx.cfg.output_dir : fs::path(o.out);
  if (o.seed) ctx.cfg.master_seed = *o.seed;
  if (o.threads) ctx.cfg.processing.threads = std::max(1u, *o.threads);
  if (o.angle_set == "1") ctx.cfg.plan.set2_angles.clear();
  if (o.angle_set == "2") ctx.cfg.plan.set1_angles.clear();
  if (!o.freq_mhz.empty()) {
    ctx.cfg.plan.frequencies_hz.clear();
    for (double f : o.freq_mhz) ctx.cfg.plan.frequencies_hz.push_back(f * 1e6);
  }
  try {
    ctx.cfg.validate();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  return ctx;
}

void log(const std::string& msg) { std::cerr << "[eprsim] " << msg << "\n"; }

std::string freq_label(double f_hz) { return io::fmt(f_hz * 1e-6, 6); }

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

void write_pair(const fs::path& dir, int set, double theta, bool pumped,
                std::pair<TraceSet, TraceSet> ab) {
  io::write_trace_set(ab.first, dir / io::dataset_stem(set, theta, pumped, 'a'));
  io::write_trace_set(ab.second, dir / io::dataset_stem(set, theta, pumped, 'b'));
}

int cmd_simulate(const CommonOptions& o) {
  const Context ctx = resolve(o, true);
  const auto& c = ctx.cfg;
  const fs::path raw = ctx.out / "raw";
  fs::create_directories(raw);
  io::write_text(ctx.out / "config.json", io::read_text(ctx.config_path));
  const unsigned threads = c.processing.threads;

  io::write_trace_set(synthesize_calibration(TraceKind::kShotNoise, c.timing, c.artifacts,
                                             c.master_seed, kShotTag, threads),
                      raw / "shot");
  io::write_trace_set(synthesize_calibration(TraceKind::kElectronic, c.timing, c.artifacts,
                                             c.master_seed, kElectronicTag, threads),
                      raw / "electronic");

  const SignalModel pumped = c.signal_model(true);
  for (int set : {1, 2}) {
    for (double theta : set == 1 ? c.plan.set1_angles : c.plan.set2_angles) {
      log("simulate set " + std::to_string(set) + " theta " + io::fmt(rad_to_deg(theta), 6) + " deg");
      write_pair(raw, set, theta, true,
                 synthesize_quadrature_traces(pumped, plan_angles(set, theta), c.timing, c.artifacts,
                                              c.master_seed, dataset_tag(set, theta, true), threads));
    }
  }
  // Blocked-pump reference at the two set-1 endpoints feeds the phase fit.
  const SignalModel unpumped = c.signal_model(false);
  for (double theta : {0.0, 0.5 * kPi}) {
    log("simulate unpumped set 1 theta " + io::fmt(rad_to_deg(theta), 6) + " deg");
    write_pair(raw, 1, theta, false,
               synthesize_quadrature_traces(unpumped, plan_angles(1, theta), c.timing, c.artifacts,
                                            c.master_seed, dataset_tag(1, theta, false), threads));
  }
  log("traces written to " + raw.string());
  return 0;
}

// ---------------------------------------------------------------------------
// process
// ---------------------------------------------------------------------------

struct SpectrumSpec {
  const char* file;
  bool pumped;
  double theta;
  double sign;
};

// Set 1: at theta = 0, A+B is the direct squeezed quadrature and A-B the delay
// anti-squeezed one; at pi/2 the roles of the paths swap.
const std::vector<SpectrumSpec>& spectrum_specs() {
  static const std::vector<SpectrumSpec> specs{
      {"direct_squeezed", true, 0.0, +1.0},
      {"delay_anti_squeezed", true, 0.0, -1.0},
      {"delay_squeezed", true, 0.5 * kPi, +1.0},
      {"direct_anti_squeezed", true, 0.5 * kPi, -1.0},
      {"direct_unpumped_squeezed", false, 0.0, +1.0},
      {"delay_unpumped_anti_squeezed", false, 0.0, -1.0},
      {"delay_unpumped_squeezed", false, 0.5 * kPi, +1.0},
      {"direct_unpumped_anti_squeezed", false, 0.5 * kPi, -1.0}};
  return specs;
}

int cmd_process(const CommonOptions& o) {
  const Context ctx = resolve(o, false);
  const fs::path raw = ctx.out / "raw";
  const fs::path processed = ctx.out / "processed";
  if (!fs::is_directory(raw)) throw DataError("no raw trace directory: " + raw.string());
  std::vector<std::string> stems;
  for (const auto& e : fs::directory_iterator(raw)) {
    if (e.path().extension() == ".json") stems.push_back(e.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  if (stems.empty()) throw DataError("no trace sets in " + raw.string());
  fs::create_directories(processed);
  for (const auto& stem : stems) {
    log("process " + stem);
    io::write_trace_set(process(io::read_trace_set(raw / stem), ctx.cfg.processing),
                        processed / stem);
  }

  if (!io::dataset_exists(processed, "shot") || !io::dataset_exists(processed, "electronic")) {
    throw DataError("calibration sets missing from " + raw.string());
  }
  const TraceSet shot = io::read_trace_set(processed / "shot");
  const TraceSet el = io::read_trace_set(processed / "electronic");
  const fs::path spectra = ctx.out / "spectra";
  for (const auto& s : spectrum_specs()) {
    const auto a = io::dataset_stem(1, s.theta, s.pumped, 'a');
    const auto b = io::dataset_stem(1, s.theta, s.pumped, 'b');
    if (!io::dataset_exists(processed, a) || !io::dataset_exists(processed, b)) {
      log(std::string("skip spectrum ") + s.file + " (dataset not simulated)");
      continue;
    }
    const auto spec = combined_spectrum(io::read_trace_set(processed / a),
                                        io::read_trace_set(processed / b), s.sign, shot, el,
                                        Window::kRectangular, ctx.cfg.processing.threads);
    io::write_text(spectra / (std::string(s.file) + ".csv"), io::spectrum_csv(spec));
  }
  log("processed sets in " + processed.string() + ", spectra in " + spectra.string());
  return 0;
}

// ---------------------------------------------------------------------------
// analyze / report
// ---------------------------------------------------------------------------

std::map<std::string, SpectrumEstimate> load_spectra(const fs::path& out) {
  std::map<std::string, SpectrumEstimate> m;
  for (const auto& s : spectrum_specs()) {
    const fs::path p = out / "spectra" / (std::string(s.file) + ".csv");
    if (fs::exists(p)) m[s.file] = io::spectrum_from_csv(io::read_text(p));
  }
  return m;
}

std::optional<FitResult> load_fit(const fs::path& out) {
  const fs::path p = out / "fit.json";
  if (!fs::exists(p)) return std::nullopt;
  return io::fit_from_json(io::read_json(p));
}

/// Reports at each analysis frequency from the stored covariance files.
void write_reports(const Context& ctx) {
  const auto spectra_map = load_spectra(ctx.out);
  std::vector<SpectrumEstimate> two_mode;
  for (const char* name : {"direct_squeezed", "delay_squeezed"}) {
    if (auto it = spectra_map.find(name); it != spectra_map.end()) two_mode.push_back(it->second);
  }
  const auto fit = load_fit(ctx.out);
  nlohmann::json all = nlohmann::json::array();
  std::string text;
  for (double f : ctx.cfg.plan.frequencies_hz) {
    const fs::path cov_path = ctx.out / ("covariance_" + freq_label(f) + "MHz.json");
    if (!fs::exists(cov_path)) continue;
    const auto cov = io::covariance_from_json(io::read_json(cov_path));
    const Report r = report(cov, two_mode, fit, ctx.cfg.stage_efficiencies);
    auto j = io::report_to_json(r);
    j["freq_MHz"] = f * 1e-6;
    all.push_back(j);
    text += "== " + freq_label(f) + " MHz ==\n" + io::report_text(r) + "\n";
  }
  if (all.empty()) throw DataError("no covariance files to report on in " + ctx.out.string());
  io::write_text(ctx.out / "report.json", all.dump(2) + "\n");
  io::write_text(ctx.out / "report.txt", text);
  std::cout << text;
}

int cmd_analyze(const CommonOptions& o) {
  const Context ctx = resolve(o, false);
  io::DirectorySource source(ctx.out / "processed");
  const TomographyTable table = run_tomography(ctx.cfg.plan, source);
  io::write_text(ctx.out / "tomography.csv", io::tomography_csv(table));
  int written = 0;
  for (double f : ctx.cfg.plan.frequencies_hz) {
    try {
      const auto rc = reconstruct_cov(table, f);
      auto j = io::covariance_to_json(rc.tmpl);
      j["freq_MHz"] = f * 1e-6;
      j["stderr"] = nlohmann::json::array();
      for (int i = 0; i < 4; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int k = 0; k < 4; ++k) row.push_back(rc.se(i, k));
        j["stderr"].push_back(row);
      }
      io::write_text(ctx.out / ("covariance_" + freq_label(f) + "MHz.json"), j.dump(2) + "\n");
      ++written;
    } catch (const DataError& e) {
      log(std::string("no covariance at ") + freq_label(f) + " MHz: " + e.what());
    }
  }
  log("tomography table written to " + (ctx.out / "tomography.csv").string());
  if (written > 0) write_reports(ctx);
  return 0;
}

PhaseFitData load_fit_data(const fs::path& out) {
  const auto m = load_spectra(out);
  auto get = [&](const std::string& name) -> const SpectrumEstimate& {
    auto it = m.find(name);
    if (it == m.end()) throw DataError("missing spectrum spectra/" + name + ".csv");
    return it->second;
  };
  PhaseFitData d;
  d.freq_hz = get("direct_squeezed").freq_hz;
  const char* paths[2] = {"direct", "delay"};
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string p = paths[i];
    const auto& sq = get(p + "_squeezed");
    const auto& anti = get(p + "_anti_squeezed");
    const auto& ux = get(p + "_unpumped_squeezed");
    const auto& up = get(p + "_unpumped_anti_squeezed");
    for (const auto* s : {&sq, &anti, &ux, &up}) {
      if (s->freq_hz != d.freq_hz) throw DataError("spectra do not share one frequency grid");
    }
    d.squeezed[i] = sq.variance_rel_shot;
    d.anti_squeezed[i] = anti.variance_rel_shot;
    d.unpumped_squeezed[i] = ux.variance_rel_shot;
    d.unpumped_anti_squeezed[i] = up.variance_rel_shot;
    d.squeezed_se_db[i] = sq.stderr_db;
    d.anti_squeezed_se_db[i] = anti.stderr_db;
    d.unpumped_squeezed_se_db[i] = ux.stderr_db;
    d.unpumped_anti_squeezed_se_db[i] = up.stderr_db;
    if (i == 0) d.calibration_se_db = sq.calibration_se_db;
  }
  return d;
}

int cmd_fit(const CommonOptions& o) {
  const Context ctx = resolve(o, false);
  const PhaseFitData data = load_fit_data(ctx.out);
  const FitResult fit = fit_phase_sigma(data, ctx.cfg.opo(), ctx.cfg.fit_options());
  io::write_text(ctx.out / "fit.json", io::fit_to_json(fit).dump(2) + "\n");
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& s = fit.sigma[i];
    std::cout << (i == 0 ? "sigma_direct" : "sigma_delay") << " = " << io::fmt(s.value_deg, 4)
              << " deg  [" << io::fmt(s.ci_lo_deg, 4) << ", " << io::fmt(s.ci_hi_deg, 4) << "] ("
              << s.ci_method << ")\n";
  }
  if (!fit.converged) log("fit did not converge: " + fit.diagnostic);
  return 0;
}

SignalModel model_with_fit(const ExperimentConfig& cfg, const std::optional<FitResult>& fit) {
  SignalModel m = cfg.signal_model(true);
  if (fit) {
    for (std::size_t i = 0; i < 2; ++i) m.phase[i].jitter_sigma = deg_to_rad(fit->sigma[i].value_deg);
  }
  return m;
}

void write_tomography_curves(const Context& ctx, const SignalModel& model) {
  std::ostringstream ss;
  ss << "set,theta_deg,freq_MHz,series,kind,value_dB,stderr_dB\n";
  const fs::path tomo = ctx.out / "tomography.csv";
  if (fs::exists(tomo)) {
    const double k = 10.0 / std::log(10.0);
    for (const auto& r : io::tomography_from_csv(io::read_text(tomo)).rows) {
      for (const auto& [name, est] : {std::pair{"sum", r.sum}, std::pair{"diff", r.diff}}) {
        ss << r.set << "," << io::fmt(rad_to_deg(r.theta), 6) << "," << freq_label(r.freq_hz) << ","
           << name << ",measured," << io::fmt(to_db(est.value / 2.0)) << ","
           << io::fmt(k * est.se / est.value) << "\n";
      }
    }
  }
  for (double f : ctx.cfg.plan.frequencies_hz) {
    for (int set : {1, 2}) {
      for (int deg = 0; deg <= 90; ++deg) {
        const double theta = deg_to_rad(deg);
        for (double sign : {1.0, -1.0}) {
          const double v = model.combination_variance_at(kTwoPi * f, plan_angles(set, theta), sign);
          ss << set << "," << deg << "," << freq_label(f) << "," << (sign > 0 ? "sum" : "diff")
             << ",model," << io::fmt(to_db(v / 2.0)) << ",0\n";
        }
      }
    }
  }
  io::write_text(ctx.out / "figures" / "tomography_curves.csv", ss.str());
}

void write_spectra_vs_model(const Context& ctx, const SignalModel& model) {
  std::ostringstream ss;
  ss << "freq_MHz,path,series,kind,value_dB,stderr_dB\n";
  std::vector<double> freqs;
  for (const auto& [name, s] : load_spectra(ctx.out)) {
    const bool delay = name.rfind("delay", 0) == 0;
    const std::string series = name.substr(name.find('_') + 1);
    for (std::size_t k = 0; k < s.freq_hz.size(); ++k) {
      ss << io::fmt(s.freq_hz[k] * 1e-6) << "," << (delay ? "delay" : "direct") << "," << series
         << ",measured," << io::fmt(s.variance_db[k]) << "," << io::fmt(s.stderr_db[k]) << "\n";
      if (freqs.size() < s.freq_hz.size()) freqs.push_back(s.freq_hz[k]);
    }
  }
  if (freqs.empty()) {
    for (double f = 0.5e6; f <= 40e6; f += 0.5e6) freqs.push_back(f);
  }
  // Model curves: fitted noise, shot-noise-limited seed without delay excess,
  // and perfect phase control.
  SignalModel clean = model;
  clean.seed = SeedNoiseModel::none();
  clean.delay_excess = {};
  SignalModel ideal = clean;
  for (auto& ph : ideal.phase) ph = {};
  const std::pair<const char*, const SignalModel*> variants[] = {
      {"model_fit", &model}, {"model_clean_seed", &clean}, {"model_perfect_phase", &ideal}};
  for (double f : freqs) {
    for (int path : {0, 1}) {
      for (const auto& [kind, m] : variants) {
        const auto pair = m->path_pair(path, kTwoPi * f);
        const auto& ph = m->phase[static_cast<std::size_t>(path)];
        const double sq = phase_averaged_variance(pair, ph.offset, ph.jitter_sigma);
        const double anti = phase_averaged_variance(pair, ph.offset + 0.5 * kPi, ph.jitter_sigma);
        for (const auto& [series, v] : {std::pair{"squeezed", sq}, std::pair{"anti_squeezed", anti}}) {
          ss << io::fmt(f * 1e-6) << "," << (path == 0 ? "direct" : "delay") << "," << series << ","
             << kind << "," << io::fmt(to_db(v)) << ",0\n";
        }
      }
    }
  }
  io::write_text(ctx.out / "figures" / "spectra_vs_model.csv", ss.str());
}

void write_processing_steps(const Context& ctx) {
  const fs::path raw = ctx.out / "raw";
  const std::string stem_a = io::dataset_stem(1, 0.0, true, 'a');
  const std::string stem_b = io::dataset_stem(1, 0.0, true, 'b');
  if (!io::dataset_exists(raw, stem_a) || !io::dataset_exists(raw, stem_b)) {
    log("skip processing figure (set 1 theta 0 not simulated)");
    return;
  }
  const TraceSet raw_a = io::read_trace_set(raw / stem_a);
  const TraceSet raw_b = io::read_trace_set(raw / stem_b);
  ProcessingOptions slope_only = ctx.cfg.processing;
  slope_only.remove_ripple = false;
  const std::pair<const char*, std::pair<TraceSet, TraceSet>> stages[] = {
      {"raw", {raw_a, raw_b}},
      {"slope_removed", {process(raw_a, slope_only), process(raw_b, slope_only)}},
      {"processed", {process(raw_a, ctx.cfg.processing), process(raw_b, ctx.cfg.processing)}}};
  std::ostringstream ss;
  ss << "stage,time_ns,q02_5,q25,q50,q75,q97_5,ensemble_mean,trace_a,trace_b\n";
  for (const auto& [stage, ab] : stages) {
    const auto h = temporal_histogram(ab.first);
    const auto mean_trace = ensemble_mean(ab.first);
    const auto ta = ab.first.trace(0);
    const auto tb = ab.second.trace(0);
    for (std::size_t t = 0; t < h.time_s.size(); ++t) {
      ss << stage << "," << io::fmt(h.time_s[t] * 1e9);
      for (const auto& q : h.quantiles) ss << "," << io::fmt(q[t]);
      ss << "," << io::fmt(mean_trace[t]) << "," << io::fmt(ta[t]) << "," << io::fmt(tb[t]) << "\n";
    }
  }
  io::write_text(ctx.out / "figures" / "processing_steps.csv", ss.str());
}

int cmd_report(const CommonOptions& o) {
  const Context ctx = resolve(o, false);
  write_reports(ctx);
  const SignalModel model = model_with_fit(ctx.cfg, load_fit(ctx.out));
  write_tomography_curves(ctx, model);
  write_spectra_vs_model(ctx, model);
  write_processing_steps(ctx);
  log("figure tables written to " + (ctx.out / "figures").string());
  return 0;
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Experiment configuration file");
  cmd->add_option("--seed", o.seed, "Override the master seed");
  cmd->add_option("--out", o.out, "Artifact directory (defaults to the config output_dir)");
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--angle-set", o.angle_set, "Restrict to measurement set 1, 2 or all")
      ->check(CLI::IsMember({"1", "2", "all"}));
  cmd->add_option("--freq", o.freq_mhz, "Analysis frequencies in MHz")->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporally multiplexed two-mode squeezing: simulation and analysis"};
  app.require_subcommand(1);
  CommonOptions opt;
  auto* sim = app.add_subcommand("simulate", "Synthesize trace sets and calibration sets");
  auto* proc = app.add_subcommand("process", "Condition trace sets and compute spectra");
  auto* ana = app.add_subcommand("analyze", "Tomography table, covariance matrices and report");
  auto* fit = app.add_subcommand("fit", "Fit the phase-noise widths to the spectra");
  auto* rep = app.add_subcommand("report", "Consolidated report and figure tables");
  for (auto* cmd : {sim, proc, ana, fit, rep}) add_common(cmd, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate(opt);
    if (proc->parsed()) return cmd_process(opt);
    if (ana->parsed()) return cmd_analyze(opt);
    if (fit->parsed()) return cmd_fit(opt);
    if (rep->parsed()) return cmd_report(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ContractError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
