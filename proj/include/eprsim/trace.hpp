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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eprsim/error.hpp"
#include "eprsim/units.hpp"

namespace eprsim {

/// Switching cycle and acquisition window.
struct SwitchTiming {
  double switch_frequency = 5e5;   // Hz
  double window_length = 1e-6;     // s
  double extract_length = 900e-9;  // s
  std::size_t traces_per_set = 16000;
  double sample_rate = 250e6;  // Hz

  std::size_t n_samples() const {
    return static_cast<std::size_t>(std::lround(extract_length * sample_rate));
  }
  double dt() const { return 1.0 / sample_rate; }

  void validate() const {
    require(switch_frequency > 0.0 && sample_rate > 0.0,
            "SwitchTiming: frequencies must be positive");
    require(extract_length > 0.0 && extract_length <= window_length * (1.0 + 1e-12),
            "SwitchTiming: extract length must be positive and fit in the window");
    require(std::abs(window_length * 2.0 * switch_frequency - 1.0) < 1e-9,
            "SwitchTiming: window length must be half the switching period");
    require(traces_per_set >= 3, "SwitchTiming: need at least three traces per set");
    require(n_samples() >= 3, "SwitchTiming: need at least three samples per trace");
  }
};

/// Damped sinusoid a * exp(-t / tau) * sin(2 pi f t + phase).
struct RippleComponent {
  double amplitude = 0.0;
  double frequency_mhz = 1.0;
  double decay_ns = 300.0;
  double phase_rad = 0.0;
};

/// Deterministic and random detector artifacts, in units of the per-sample
/// shot-noise standard deviation.
struct ArtifactModel {
  double coherent_offset = 0.0;
  double slope_decay = 0.0;         // mean slope, units per second
  double slope_jitter_sigma = 0.0;  // per-trace slope spread, units per second
  std::vector<RippleComponent> ripple;
  /// Tabulated waveform; overrides `ripple` when non-empty.
  std::vector<double> ripple_table;
  double electronic_noise_db = -20.0;

  double electronic_variance() const { return from_db(electronic_noise_db); }

  /// Ripple waveform sampled at n points with spacing dt.
  std::vector<double> ripple_waveform(std::size_t n, double dt) const {
    std::vector<double> w(n, 0.0);
    if (!ripple_table.empty()) {
      require(ripple_table.size() >= n, "ArtifactModel: ripple table shorter than trace");
      for (std::size_t i = 0; i < n; ++i) w[i] = ripple_table[i];
      return w;
    }
    for (const auto& c : ripple) {
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        w[i] += c.amplitude * std::exp(-t / (c.decay_ns * 1e-9)) *
                std::sin(kTwoPi * c.frequency_mhz * 1e6 * t + c.phase_rad);
      }
    }
    return w;
  }

  bool is_clean() const {
    return coherent_offset == 0.0 && slope_decay == 0.0 && slope_jitter_sigma == 0.0 &&
           ripple.empty() && ripple_table.empty();
  }

  static ArtifactModel none() {
    ArtifactModel m;
    m.electronic_noise_db = -300.0;
    return m;
  }

  void validate() const {
    require(electronic_noise_db < 0.0, "ArtifactModel: electronic noise must be below shot noise");
    require(slope_jitter_sigma >= 0.0, "ArtifactModel: slope jitter must be non-negative");
    for (const auto& c : ripple) {
      require(c.decay_ns > 0.0, "ArtifactModel: ripple decay must be positive");
    }
  }
};

enum class TraceKind { kSignal, kShotNoise, kElectronic };

inline std::string to_string(TraceKind k) {
  switch (k) {
    case TraceKind::kSignal:
      return "signal";
    case TraceKind::kShotNoise:
      return "shot_noise";
    case TraceKind::kElectronic:
      return "electronic";
  }
  return "signal";
}

inline TraceKind trace_kind_from_string(const std::string& s) {
  if (s == "signal") return TraceKind::kSignal;
  if (s == "shot_noise") return TraceKind::kShotNoise;
  if (s == "electronic") return TraceKind::kElectronic;
  throw DataError("unknown trace kind: " + s);
}

/// Which processing steps a trace set has been through.
struct ProcessingFlags {
  bool slope_removed = false;
  bool ripple_removed = false;
  bool electronic_subtracted = false;
  friend bool operator==(const ProcessingFlags&, const ProcessingFlags&) = default;
};

/// Ensemble of equally long time traces, stored row-major.
class TraceSet {
 public:
  TraceSet() = default;
  TraceSet(std::size_t n_traces, std::size_t n_samples, double sample_rate, TraceKind kind)
      : samples_(n_traces * n_samples, 0.0),
        n_traces_(n_traces),
        n_samples_(n_samples),
        sample_rate_(sample_rate),
        kind_(kind) {
    require(sample_rate > 0.0, "TraceSet: sample rate must be positive");
  }

  std::size_t n_traces() const { return n_traces_; }
  std::size_t n_samples() const { return n_samples_; }
  double sample_rate() const { return sample_rate_; }
  double dt() const { return 1.0 / sample_rate_; }
  TraceKind kind() const { return kind_; }

  std::span<double> trace(std::size_t i) {
    return {samples_.data() + i * n_samples_, n_samples_};
  }
  std::span<const double> trace(std::size_t i) const {
    return {samples_.data() + i * n_samples_, n_samples_};
  }
  std::vector<double>& data() { return samples_; }
  const std::vector<double>& data() const { return samples_; }

  SwitchTiming timing;
  ProcessingFlags flags;
  std::uint64_t seed = 0;

  friend bool operator==(const TraceSet& a, const TraceSet& b) {
    return a.n_traces_ == b.n_traces_ && a.n_samples_ == b.n_samples_ &&
           a.sample_rate_ == b.sample_rate_ && a.kind_ == b.kind_ && a.flags == b.flags &&
           a.samples_ == b.samples_;
  }

 private:
  std::vector<double> samples_;
  std::size_t n_traces_ = 0;
  std::size_t n_samples_ = 0;
  double sample_rate_ = 1.0;
  TraceKind kind_ = TraceKind::kSignal;
};

/// Samplewise a + sign * b of two aligned sets.
inline TraceSet combine(const TraceSet& a, const TraceSet& b, double sign) {
  if (a.n_traces() != b.n_traces() || a.n_samples() != b.n_samples()) {
    throw DataError("combine: trace sets differ in shape");
  }
  TraceSet out(a.n_traces(), a.n_samples(), a.sample_rate(), a.kind());
  out.timing = a.timing;
  out.flags = a.flags;
  out.seed = a.seed;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    out.data()[i] = a.data()[i] + sign * b.data()[i];
  }
  return out;
}

}  // namespace eprsim
