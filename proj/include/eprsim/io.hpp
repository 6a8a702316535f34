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

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "eprsim/dsp.hpp"
#include "eprsim/error.hpp"
#include "eprsim/fit.hpp"
#include "eprsim/gaussian.hpp"
#include "eprsim/tomography.hpp"
#include "eprsim/trace.hpp"

namespace eprsim::io {

using nlohmann::json;
namespace fs = std::filesystem;

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path), nullptr, true, true);
  } catch (const json::exception& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

/// Fixed-precision number formatting so outputs are byte-stable.
inline std::string fmt(double v, int precision = 9) {
  std::ostringstream ss;
  ss << std::setprecision(precision) << v;
  return ss.str();
}

// ---------------------------------------------------------------------------
// Covariance matrices
// ---------------------------------------------------------------------------

inline const std::vector<std::string> kQuadratureOrder{"xA", "pA", "xB", "pB"};

inline json covariance_to_json(const CovarianceTemplate& tmpl) {
  json entries = json::array();
  for (int i = 0; i < 4; ++i) {
    json row = json::array();
    for (int j = 0; j < 4; ++j) {
      const bool is_a = (i == kXA && j == kPA) || (i == kPA && j == kXA);
      const bool is_b = (i == kXB && j == kPB) || (i == kPB && j == kXB);
      if ((is_a && tmpl.a_unknown) || (is_b && tmpl.b_unknown)) {
        row.push_back(nullptr);
      } else {
        row.push_back(tmpl.entries(i, j));
      }
    }
    entries.push_back(row);
  }
  return {{"order", kQuadratureOrder}, {"v0", kVacuumVariance}, {"entries", entries}};
}

inline json covariance_to_json(const CovarianceMatrix4& cov) {
  CovarianceTemplate t{cov.entries(), false, false};
  return covariance_to_json(t);
}

/// Reads a covariance; null entries are allowed only at the a and b positions.
inline CovarianceTemplate covariance_from_json(const json& j) {
  try {
    if (j.at("order").get<std::vector<std::string>>() != kQuadratureOrder) {
      throw DataError("covariance JSON: order must be [xA, pA, xB, pB]");
    }
    if (std::abs(j.at("v0").get<double>() - kVacuumVariance) > 1e-12) {
      throw DataError("covariance JSON: v0 must be 0.5");
    }
    const json& e = j.at("entries");
    if (!e.is_array() || e.size() != 4) throw DataError("covariance JSON: need 4x4 entries");
    CovarianceTemplate t;
    t.a_unknown = false;
    t.b_unknown = false;
    for (int i = 0; i < 4; ++i) {
      const json& row = e.at(static_cast<std::size_t>(i));
      if (!row.is_array() || row.size() != 4) throw DataError("covariance JSON: need 4x4 entries");
      for (int k = 0; k < 4; ++k) {
        const json& v = row.at(static_cast<std::size_t>(k));
        if (v.is_null()) {
          const bool is_a = (i == kXA && k == kPA) || (i == kPA && k == kXA);
          const bool is_b = (i == kXB && k == kPB) || (i == kPB && k == kXB);
          if (is_a) {
            t.a_unknown = true;
          } else if (is_b) {
            t.b_unknown = true;
          } else {
            throw DataError("covariance JSON: only <xA pA> and <xB pB> may be null");
          }
          t.entries(i, k) = 0.0;
        } else {
          t.entries(i, k) = v.get<double>();
        }
      }
    }
    for (int i = 0; i < 4; ++i) {
      for (int k = i + 1; k < 4; ++k) {
        if (std::abs(t.entries(i, k) - t.entries(k, i)) > CovarianceMatrix4::kSymmetryTolerance) {
          throw DataError("covariance JSON: matrix is not symmetric");
        }
      }
    }
    return t;
  } catch (const json::exception& ex) {
    throw DataError(std::string("covariance JSON: ") + ex.what());
  }
}

// ---------------------------------------------------------------------------
// Trace sets: little-endian float64 blob plus JSON sidecar
// ---------------------------------------------------------------------------

inline json timing_to_json(const SwitchTiming& t) {
  return {{"switch_frequency_hz", t.switch_frequency},
          {"window_length_s", t.window_length},
          {"extract_length_s", t.extract_length},
          {"traces_per_set", t.traces_per_set},
          {"sample_rate_hz", t.sample_rate}};
}

inline SwitchTiming timing_from_json(const json& j) {
  SwitchTiming t;
  t.switch_frequency = j.at("switch_frequency_hz").get<double>();
  t.window_length = j.at("window_length_s").get<double>();
  t.extract_length = j.at("extract_length_s").get<double>();
  t.traces_per_set = j.at("traces_per_set").get<std::size_t>();
  t.sample_rate = j.at("sample_rate_hz").get<double>();
  return t;
}

inline void write_trace_set(const TraceSet& set, const fs::path& stem) {
  const json header = {{"kind", to_string(set.kind())},
                       {"sample_rate", set.sample_rate()},
                       {"n_traces", set.n_traces()},
                       {"n_samples", set.n_samples()},
                       {"timing", timing_to_json(set.timing)},
                       {"seed", set.seed},
                       {"processing",
                        {{"slope_removed", set.flags.slope_removed},
                         {"ripple_removed", set.flags.ripple_removed},
                         {"electronic_subtracted", set.flags.electronic_subtracted}}},
                       {"format", "float64-le"}};
  write_text(fs::path(stem.string() + ".json"), header.dump(2) + "\n");
  std::string blob(set.data().size() * sizeof(double), '\0');
  for (std::size_t i = 0; i < set.data().size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(set.data()[i]);
    if constexpr (std::endian::native == std::endian::big) {
      std::uint64_t swapped = 0;
      for (int b = 0; b < 8; ++b) swapped |= ((bits >> (8 * b)) & 0xFFu) << (8 * (7 - b));
      bits = swapped;
    }
    std::memcpy(blob.data() + i * sizeof(double), &bits, sizeof(bits));
  }
  write_text(fs::path(stem.string() + ".bin"), blob);
}

inline TraceSet read_trace_set(const fs::path& stem) {
  const json h = read_json(fs::path(stem.string() + ".json"));
  try {
    TraceSet set(h.at("n_traces").get<std::size_t>(), h.at("n_samples").get<std::size_t>(),
                 h.at("sample_rate").get<double>(), trace_kind_from_string(h.at("kind")));
    set.timing = timing_from_json(h.at("timing"));
    set.seed = h.at("seed").get<std::uint64_t>();
    const json& p = h.at("processing");
    set.flags.slope_removed = p.at("slope_removed").get<bool>();
    set.flags.ripple_removed = p.at("ripple_removed").get<bool>();
    set.flags.electronic_subtracted = p.at("electronic_subtracted").get<bool>();
    const std::string blob = read_text(fs::path(stem.string() + ".bin"));
    if (blob.size() != set.data().size() * sizeof(double)) {
      throw DataError("trace blob size does not match header: " + stem.string());
    }
    for (std::size_t i = 0; i < set.data().size(); ++i) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, blob.data() + i * sizeof(double), sizeof(bits));
      if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t swapped = 0;
        for (int b = 0; b < 8; ++b) swapped |= ((bits >> (8 * b)) & 0xFFu) << (8 * (7 - b));
        bits = swapped;
      }
      set.data()[i] = std::bit_cast<double>(bits);
    }
    return set;
  } catch (const json::exception& e) {
    throw DataError("trace header " + stem.string() + ": " + e.what());
  }
}

/// Small-set CSV export: one row per trace.
inline std::string trace_set_csv(const TraceSet& set) {
  std::ostringstream ss;
  ss << "trace";
  for (std::size_t t = 0; t < set.n_samples(); ++t) ss << ",s" << t;
  ss << "\n";
  for (std::size_t i = 0; i < set.n_traces(); ++i) {
    ss << i;
    for (double v : set.trace(i)) ss << "," << fmt(v, 17);
    ss << "\n";
  }
  return ss.str();
}

// ---------------------------------------------------------------------------
// Spectra, tables, fit results
// ---------------------------------------------------------------------------

inline std::string spectrum_csv(const SpectrumEstimate& s) {
  std::ostringstream ss;
  ss << "freq_MHz,value_dB,stderr_dB,value_linear,stderr_linear,calibration_stderr_dB\n";
  const bool cal = s.calibration_se_db.size() == s.freq_hz.size();
  for (std::size_t k = 0; k < s.freq_hz.size(); ++k) {
    ss << fmt(s.freq_hz[k] * 1e-6) << "," << fmt(s.variance_db[k]) << "," << fmt(s.stderr_db[k])
       << "," << fmt(s.variance_rel_shot[k]) << "," << fmt(s.stderr_rel_shot[k]) << ","
       << fmt(cal ? s.calibration_se_db[k] : 0.0) << "\n";
  }
  return ss.str();
}

inline SpectrumEstimate spectrum_from_csv(const std::string& text) {
  SpectrumEstimate s;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("spectrum CSV: empty file");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(row, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError("spectrum CSV: bad number '" + cell + "'");
      }
    }
    if (v.size() < 5) throw DataError("spectrum CSV: expected 5 columns");
    s.freq_hz.push_back(v[0] * 1e6);
    s.variance_db.push_back(v[1]);
    s.stderr_db.push_back(v[2]);
    s.variance_rel_shot.push_back(v[3]);
    s.stderr_rel_shot.push_back(v[4]);
    if (v.size() >= 6) s.calibration_se_db.push_back(v[5]);
  }
  if (s.calibration_se_db.size() != s.freq_hz.size()) s.calibration_se_db.clear();
  return s;
}

/// Two-column seed spectrum (frequency_MHz, variance_shot_normalized).
inline std::pair<std::vector<double>, std::vector<double>> seed_spectrum_from_csv(
    const std::string& text) {
  std::vector<double> f_mhz;
  std::vector<double> value;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError("seed CSV: expected two columns");
    try {
      f_mhz.push_back(std::stod(line.substr(0, comma)));
      value.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      if (f_mhz.empty() && value.empty()) continue;  // header line
      throw DataError("seed CSV: bad number in '" + line + "'");
    }
  }
  if (f_mhz.empty()) throw DataError("seed CSV: no data rows");
  return {f_mhz, value};
}

inline std::string tomography_csv(const TomographyTable& table) {
  std::ostringstream ss;
  ss << "set,theta_deg,freq_MHz,sum_dB,diff_dB,sum_stderr_dB,diff_stderr_dB,sum_V0,diff_V0,"
        "varA_V0,varB_V0,covAB_V0,covAB_stderr_V0\n";
  const double k = 10.0 / std::log(10.0);
  for (const auto& r : table.rows) {
    ss << r.set << "," << fmt(rad_to_deg(r.theta), 6) << "," << fmt(r.freq_hz * 1e-6, 6) << ","
       << fmt(to_db(r.sum.value / 2.0)) << "," << fmt(to_db(r.diff.value / 2.0)) << ","
       << fmt(k * r.sum.se / r.sum.value) << "," << fmt(k * r.diff.se / r.diff.value) << ","
       << fmt(r.sum.value) << "," << fmt(r.diff.value) << "," << fmt(r.var_a.value) << ","
       << fmt(r.var_b.value) << "," << fmt(r.cov_ab.value) << "," << fmt(r.cov_ab.se) << "\n";
  }
  return ss.str();
}

inline TomographyTable tomography_from_csv(const std::string& text) {
  TomographyTable table;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  const double k = 10.0 / std::log(10.0);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 13) throw DataError("tomography CSV: expected 13 columns");
    TomographyRow r;
    r.set = static_cast<int>(v[0]);
    r.theta = deg_to_rad(v[1]);
    r.freq_hz = v[2] * 1e6;
    r.sum = {v[7], v[5] * v[7] / k};
    r.diff = {v[8], v[6] * v[8] / k};
    r.var_a = {v[9], 0.0};
    r.var_b = {v[10], 0.0};
    r.cov_ab = {v[11], v[12]};
    table.rows.push_back(r);
  }
  return table;
}

inline json fit_to_json(const FitResult& fit) {
  json sig = json::array();
  for (const auto& s : fit.sigma) {
    sig.push_back({{"value_deg", s.value_deg},
                   {"ci95_lo_deg", s.ci_lo_deg},
                   {"ci95_hi_deg", s.ci_hi_deg},
                   {"se_deg", s.se_deg},
                   {"ci_method", s.ci_method}});
  }
  return {{"sigma_direct", sig[0]},
          {"sigma_delay", sig[1]},
          {"residual_norm_db", fit.residual_norm},
          {"n_points", fit.n_points},
          {"runs_test_p_value", fit.runs_p_value},
          {"iterations", fit.iterations},
          {"converged", fit.converged},
          {"diagnostic", fit.diagnostic}};
}

inline FitResult fit_from_json(const json& j) {
  try {
    FitResult f;
    const char* keys[2] = {"sigma_direct", "sigma_delay"};
    for (std::size_t i = 0; i < 2; ++i) {
      const json& s = j.at(keys[i]);
      f.sigma[i] = {s.at("value_deg").get<double>(), s.at("ci95_lo_deg").get<double>(),
                    s.at("ci95_hi_deg").get<double>(), s.at("se_deg").get<double>(),
                    s.at("ci_method").get<std::string>()};
    }
    f.residual_norm = j.at("residual_norm_db").get<double>();
    f.n_points = j.at("n_points").get<std::size_t>();
    f.runs_p_value = j.at("runs_test_p_value").get<double>();
    f.iterations = j.at("iterations").get<int>();
    f.converged = j.at("converged").get<bool>();
    f.diagnostic = j.at("diagnostic").get<std::string>();
    return f;
  } catch (const json::exception& e) {
    throw DataError(std::string("fit JSON: ") + e.what());
  }
}

inline json report_to_json(const Report& r) {
  json phys = json::array();
  for (const auto& v : r.physicality) {
    phys.push_back({{"at", v.label}, {"a", v.a}, {"b", v.b}, {"physical", v.physical}});
  }
  json out = {
      {"duan_V0", r.duan},
      {"duan_entangled", r.duan_entangled},
      {"reid_A_given_B_V0sq", r.reid.a_given_b},
      {"reid_B_given_A_V0sq", r.reid.b_given_a},
      {"reid_steering_A_given_B", r.reid.steering_a_given_b()},
      {"reid_steering_B_given_A", r.reid.steering_b_given_a()},
      {"max_two_mode_squeezing_dB",
       r.max_two_mode_squeezing_db ? json(*r.max_two_mode_squeezing_db) : json(nullptr)},
      {"physical_at_point_estimate", r.physical},
      {"xp_point_estimate_V0", r.xp_point},
      {"bounds_feasible", r.bounds.feasible},
      {"a_range", r.bounds.feasible ? json{r.bounds.a.lo, r.bounds.a.hi} : json(nullptr)},
      {"b_range", r.bounds.feasible ? json{r.bounds.b.lo, r.bounds.b.hi} : json(nullptr)},
      {"physicality_checks", phys},
      {"efficiency", r.efficiency}};
  if (r.fit) out["fit"] = fit_to_json(*r.fit);
  return out;
}

inline std::string report_text(const Report& r) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(3);
  ss << "Duan sum:                 " << r.duan << " V0 ("
     << (r.duan_entangled ? "inseparable" : "not certified") << ", threshold 4)\n";
  ss << "Reid product A|B:         " << r.reid.a_given_b << " V0^2 ("
     << (r.reid.steering_a_given_b() ? "steering" : "no steering") << ")\n";
  ss << "Reid product B|A:         " << r.reid.b_given_a << " V0^2 ("
     << (r.reid.steering_b_given_a() ? "steering" : "no steering") << ")\n";
  if (r.max_two_mode_squeezing_db) {
    ss << "Max two-mode squeezing:   " << *r.max_two_mode_squeezing_db << " dB\n";
  }
  if (r.bounds.feasible) {
    ss << "a range:                  [" << r.bounds.a.lo << ", " << r.bounds.a.hi << "]\n";
    ss << "b range:                  [" << r.bounds.b.lo << ", " << r.bounds.b.hi << "]\n";
  } else {
    ss << "a, b ranges:              none (no physical completion)\n";
  }
  ss << "xp point estimate:        " << r.xp_point << " V0\n";
  for (const auto& v : r.physicality) {
    ss << "physical at " << std::left << std::setw(14) << v.label << std::right << "(a=" << v.a
       << ", b=" << v.b << "): " << (v.physical ? "yes" : "no") << "\n";
  }
  ss << "Efficiency budget:        " << r.efficiency << "\n";
  if (r.fit) {
    const char* names[2] = {"direct", "delay "};
    for (int i = 0; i < 2; ++i) {
      const auto& s = r.fit->sigma[static_cast<std::size_t>(i)];
      ss << "Phase noise " << names[i] << ":       " << s.value_deg << " deg  (95% CI "
         << s.ci_lo_deg << " .. " << s.ci_hi_deg << ", " << s.ci_method << ")\n";
    }
  }
  return ss.str();
}

// ---------------------------------------------------------------------------
// Dataset directories
// ---------------------------------------------------------------------------

/// File stem of one station of an angle dataset, e.g. "s1_t0450_a" for set 1
/// at 45.0 degrees; unpumped datasets start with "u".
inline std::string dataset_stem(int set, double theta, bool pumped, char station) {
  const long deci = std::lround(rad_to_deg(theta) * 10.0);
  std::ostringstream ss;
  ss << (pumped ? 's' : 'u') << set << "_t" << std::setw(4) << std::setfill('0') << deci << '_'
     << station;
  return ss.str();
}

inline bool dataset_exists(const fs::path& dir, const std::string& stem) {
  return fs::exists(dir / (stem + ".json")) && fs::exists(dir / (stem + ".bin"));
}

/// Reads datasets written by write_trace_set from one directory.
class DirectorySource : public DataSource {
 public:
  explicit DirectorySource(fs::path dir, bool pumped = true)
      : dir_(std::move(dir)), pumped_(pumped) {}

  AngleDataset signal(int set, double theta) override {
    const auto a = dataset_stem(set, theta, pumped_, 'a');
    const auto b = dataset_stem(set, theta, pumped_, 'b');
    if (!dataset_exists(dir_, a) || !dataset_exists(dir_, b)) {
      throw DataError("missing angle dataset " + (dir_ / a).string());
    }
    return {read_trace_set(dir_ / a), read_trace_set(dir_ / b)};
  }

  CalibrationSets calibration() override {
    for (const char* name : {"shot", "electronic"}) {
      if (!dataset_exists(dir_, name)) throw DataError("missing calibration set " + (dir_ / name).string());
    }
    return {read_trace_set(dir_ / "shot"), read_trace_set(dir_ / "electronic")};
  }

 private:
  fs::path dir_;
  bool pumped_;
};

}  // namespace eprsim::io
