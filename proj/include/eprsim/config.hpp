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

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "eprsim/dsp.hpp"
#include "eprsim/error.hpp"
#include "eprsim/fit.hpp"
#include "eprsim/io.hpp"
#include "eprsim/opo.hpp"
#include "eprsim/signal_model.hpp"
#include "eprsim/tomography.hpp"
#include "eprsim/trace.hpp"
#include "eprsim/units.hpp"

namespace eprsim {

inline constexpr int kConfigSchemaVersion = 1;

/// Everything needed to run one experiment. Config files use MHz, degrees, ns
/// and dB; the fields below are in SI units and radians.
struct ExperimentConfig {
  CavityGeometry cavity;
  double pump_power_mw = 350.0;
  double threshold_power_mw = 833.0;
  std::vector<double> stage_efficiencies{0.94, 0.80, 0.91};
  Quadrature squeezed = Quadrature::kX;
  ExcessNoiseShape seed_excess;
  /// Optional tabulated seed spectrum (frequency_MHz, variance_shot_normalized);
  /// overrides `seed_excess`. Relative paths resolve against the config file.
  std::optional<std::filesystem::path> seed_csv;
  std::array<PhaseNoise, 2> phase{};
  ExcessNoiseShape delay_excess;
  SwitchTiming timing;
  ArtifactModel artifacts;
  TomographyPlan plan = TomographyPlan::standard();
  ProcessingOptions processing;
  PhaseFitOptions fit;
  bool fit_known_offsets = true;
  std::uint64_t master_seed = 1;
  std::filesystem::path output_dir = "out";

  double gamma() const { return decay_rate(cavity); }
  double epsilon() const {
    return pump_rate(pump_power_mw, threshold_power_mw, gamma());
  }
  double eta() const { return efficiency_budget(stage_efficiencies); }

  OpoParams opo() const {
    OpoParams p = OpoParams::from_total(gamma(), epsilon(), eta());
    p.squeezed = squeezed;
    return p;
  }

  SeedNoiseModel seed_model() const {
    if (!seed_csv) return seed_model_from_shape(seed_excess, gamma());
    const auto [f_mhz, s0] = io::seed_spectrum_from_csv(io::read_text(*seed_csv));
    std::vector<double> omega;
    for (double f : f_mhz) omega.push_back(mhz_to_rad_per_s(f));
    return kq_from_seed_spectrum(omega, s0, s0, gamma());
  }

  SignalModel signal_model(bool pumped = true) const {
    SignalModel m;
    m.opo = opo();
    m.seed = seed_model();
    m.delay_excess = delay_excess;
    m.phase = phase;
    m.pumped = pumped;
    return m;
  }

  PhaseFitOptions fit_options() const {
    PhaseFitOptions o = fit;
    o.n_samples = timing.n_samples();
    o.sample_rate = timing.sample_rate;
    o.detrended = processing.remove_slope;
    o.offsets = fit_known_offsets ? std::array<double, 2>{phase[0].offset, phase[1].offset}
                                  : std::array<double, 2>{0.0, 0.0};
    return o;
  }

  /// Checks every module-level invariant the configuration feeds into.
  void validate() const {
    cavity.validate();
    (void)opo();  // pump below threshold
    opo().validate();
    timing.validate();
    artifacts.validate();
    plan.validate();
    for (const auto& ph : phase) {
      require(ph.jitter_sigma >= 0.0, "config: phase jitter must be non-negative");
    }
    require(fit.f_min_hz < fit.f_max_hz, "config: fit band is empty");
    require(fit.confidence > 0.0 && fit.confidence < 1.0, "config: fit confidence must lie in (0, 1)");
    for (double f : plan.frequencies_hz) {
      require(f < 0.5 * timing.sample_rate, "config: analysis frequency at or above Nyquist");
    }
    (void)seed_model();
  }
};

namespace config_detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

inline ExcessNoiseShape read_shape(const json& j, const std::string& where) {
  check_keys(j, where,
             {"low_amplitude", "low_corner_mhz", "bump_amplitude", "bump_center_mhz",
              "bump_width_mhz"});
  ExcessNoiseShape s;
  read(j, "low_amplitude", s.low_amplitude);
  read(j, "low_corner_mhz", s.low_corner_mhz);
  read(j, "bump_amplitude", s.bump_amplitude);
  read(j, "bump_center_mhz", s.bump_center_mhz);
  read(j, "bump_width_mhz", s.bump_width_mhz);
  if (s.low_amplitude < 0.0 || s.bump_amplitude < 0.0 || s.low_corner_mhz <= 0.0 ||
      s.bump_width_mhz <= 0.0) {
    throw ConfigError(where + ": amplitudes must be >= 0 and widths > 0");
  }
  return s;
}

inline std::vector<double> read_angles(const json& j, const std::string& where) {
  if (j.is_number_unsigned()) return TomographyPlan::uniform_grid(j.get<std::size_t>());
  if (!j.is_array()) throw ConfigError(where + ": expected a point count or a list of degrees");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(deg_to_rad(v.get<double>()));
  return out;
}

}  // namespace config_detail

/// Parses a configuration document. Comments are allowed; unknown keys are
/// rejected. `base_dir` resolves relative paths inside the document.
inline ExperimentConfig parse_config(const std::string& text,
                                     const std::filesystem::path& base_dir = {}) {
  using config_detail::check_keys;
  using config_detail::read;
  using nlohmann::json;
  ExperimentConfig c;
  try {
    const json j = json::parse(text, nullptr, true, true);
    check_keys(j, "config",
               {"schema_version", "master_seed", "output_dir", "threads", "cavity", "pump",
                "efficiency_stages", "squeezed_quadrature", "seed_noise", "paths",
                "delay_excess_noise", "timing", "artifacts", "tomography", "processing", "fit"});
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kConfigSchemaVersion) {
      throw ConfigError("config: schema_version must be " + std::to_string(kConfigSchemaVersion));
    }
    read(j, "master_seed", c.master_seed);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    read(j, "threads", c.processing.threads);

    if (j.contains("cavity")) {
      const auto& k = j.at("cavity");
      check_keys(k, "cavity", {"coupler_transmission", "intracavity_loss", "round_trip_length_m"});
      read(k, "coupler_transmission", c.cavity.coupler_transmission);
      read(k, "intracavity_loss", c.cavity.intracavity_loss);
      read(k, "round_trip_length_m", c.cavity.round_trip_length);
    }
    if (j.contains("pump")) {
      const auto& k = j.at("pump");
      check_keys(k, "pump", {"power_mw", "threshold_mw"});
      read(k, "power_mw", c.pump_power_mw);
      read(k, "threshold_mw", c.threshold_power_mw);
    }
    read(j, "efficiency_stages", c.stage_efficiencies);
    if (j.contains("squeezed_quadrature")) {
      const auto q = j.at("squeezed_quadrature").get<std::string>();
      if (q == "x") {
        c.squeezed = Quadrature::kX;
      } else if (q == "p") {
        c.squeezed = Quadrature::kP;
      } else {
        throw ConfigError("squeezed_quadrature: expected \"x\" or \"p\"");
      }
    }
    if (j.contains("seed_noise")) {
      const auto& k = j.at("seed_noise");
      check_keys(k, "seed_noise", {"shape", "csv"});
      if (k.contains("shape")) c.seed_excess = config_detail::read_shape(k.at("shape"), "seed_noise.shape");
      if (k.contains("csv")) {
        std::filesystem::path p = k.at("csv").get<std::string>();
        c.seed_csv = p.is_relative() ? base_dir / p : p;
      }
    }
    if (j.contains("paths")) {
      const auto& k = j.at("paths");
      if (!k.is_array() || k.size() != 2) throw ConfigError("paths: expected two entries");
      for (std::size_t i = 0; i < 2; ++i) {
        const auto& p = k.at(i);
        check_keys(p, "paths[" + std::to_string(i) + "]", {"name", "offset_deg", "jitter_deg"});
        double off = 0.0;
        double jit = 0.0;
        read(p, "offset_deg", off);
        read(p, "jitter_deg", jit);
        c.phase[i] = {deg_to_rad(off), deg_to_rad(jit)};
      }
    }
    if (j.contains("delay_excess_noise")) {
      c.delay_excess = config_detail::read_shape(j.at("delay_excess_noise"), "delay_excess_noise");
    }
    if (j.contains("timing")) {
      const auto& k = j.at("timing");
      check_keys(k, "timing",
                 {"switch_frequency_mhz", "window_length_ns", "extract_length_ns", "traces_per_set",
                  "sample_rate_msps"});
      double v = 0.0;
      if (k.contains("switch_frequency_mhz")) {
        read(k, "switch_frequency_mhz", v);
        c.timing.switch_frequency = v * 1e6;
      }
      if (k.contains("window_length_ns")) {
        read(k, "window_length_ns", v);
        c.timing.window_length = v * 1e-9;
      }
      if (k.contains("extract_length_ns")) {
        read(k, "extract_length_ns", v);
        c.timing.extract_length = v * 1e-9;
      }
      read(k, "traces_per_set", c.timing.traces_per_set);
      if (k.contains("sample_rate_msps")) {
        read(k, "sample_rate_msps", v);
        c.timing.sample_rate = v * 1e6;
      }
    }
    if (j.contains("artifacts")) {
      const auto& k = j.at("artifacts");
      check_keys(k, "artifacts",
                 {"coherent_offset", "slope_per_us", "slope_jitter_per_us", "ripple", "ripple_table",
                  "electronic_noise_db"});
      auto& a = c.artifacts;
      read(k, "coherent_offset", a.coherent_offset);
      double v = 0.0;
      if (k.contains("slope_per_us")) {
        read(k, "slope_per_us", v);
        a.slope_decay = v * 1e6;
      }
      if (k.contains("slope_jitter_per_us")) {
        read(k, "slope_jitter_per_us", v);
        a.slope_jitter_sigma = v * 1e6;
      }
      if (k.contains("ripple")) {
        a.ripple.clear();
        for (const auto& r : k.at("ripple")) {
          check_keys(r, "artifacts.ripple[]", {"amplitude", "frequency_mhz", "decay_ns", "phase_deg"});
          RippleComponent rc;
          read(r, "amplitude", rc.amplitude);
          read(r, "frequency_mhz", rc.frequency_mhz);
          read(r, "decay_ns", rc.decay_ns);
          double ph = 0.0;
          read(r, "phase_deg", ph);
          rc.phase_rad = deg_to_rad(ph);
          a.ripple.push_back(rc);
        }
      }
      read(k, "ripple_table", a.ripple_table);
      read(k, "electronic_noise_db", a.electronic_noise_db);
    }
    if (j.contains("tomography")) {
      const auto& k = j.at("tomography");
      check_keys(k, "tomography", {"set1_angles_deg", "set2_angles_deg", "frequencies_mhz"});
      if (k.contains("set1_angles_deg")) {
        c.plan.set1_angles = config_detail::read_angles(k.at("set1_angles_deg"), "set1_angles_deg");
      }
      if (k.contains("set2_angles_deg")) {
        c.plan.set2_angles = config_detail::read_angles(k.at("set2_angles_deg"), "set2_angles_deg");
      }
      if (k.contains("frequencies_mhz")) {
        c.plan.frequencies_hz.clear();
        for (const auto& f : k.at("frequencies_mhz")) c.plan.frequencies_hz.push_back(f.get<double>() * 1e6);
      }
    }
    if (j.contains("processing")) {
      const auto& k = j.at("processing");
      check_keys(k, "processing", {"remove_slope", "remove_ripple"});
      read(k, "remove_slope", c.processing.remove_slope);
      read(k, "remove_ripple", c.processing.remove_ripple);
    }
    if (j.contains("fit")) {
      const auto& k = j.at("fit");
      check_keys(k, "fit",
                 {"f_min_mhz", "f_max_mhz", "initial_sigma_deg", "known_offsets", "weighted",
                  "averaging", "prediction", "confidence"});
      double v = 0.0;
      if (k.contains("f_min_mhz")) {
        read(k, "f_min_mhz", v);
        c.fit.f_min_hz = v * 1e6;
      }
      if (k.contains("f_max_mhz")) {
        read(k, "f_max_mhz", v);
        c.fit.f_max_hz = v * 1e6;
      }
      read(k, "initial_sigma_deg", c.fit.initial_sigma_deg);
      read(k, "known_offsets", c.fit_known_offsets);
      read(k, "weighted", c.fit.weighted);
      read(k, "confidence", c.fit.confidence);
      if (k.contains("averaging")) {
        const auto s = k.at("averaging").get<std::string>();
        if (s == "exact") {
          c.fit.averaging = PhaseAveraging::kExact;
        } else if (s == "approx") {
          c.fit.averaging = PhaseAveraging::kApprox;
        } else {
          throw ConfigError("fit.averaging: expected \"exact\" or \"approx\"");
        }
      }
      if (k.contains("prediction")) {
        const auto s = k.at("prediction").get<std::string>();
        if (s == "response") {
          c.fit.prediction = FitPrediction::kResponse;
        } else if (s == "pointwise") {
          c.fit.prediction = FitPrediction::kPointwise;
        } else {
          throw ConfigError("fit.prediction: expected \"response\" or \"pointwise\"");
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text, path.parent_path());
}

}  // namespace eprsim
