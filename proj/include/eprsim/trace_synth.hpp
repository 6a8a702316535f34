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

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "eprsim/error.hpp"
#include "eprsim/network.hpp"
#include "eprsim/parallel.hpp"
#include "eprsim/rng.hpp"
#include "eprsim/signal_model.hpp"
#include "eprsim/trace.hpp"

namespace eprsim {

/// PSD as a function of frequency in Hz. Normalised per sample: a flat value c
/// yields white noise of variance c.
using PsdFunction = std::function<double(double)>;

/// Tabulated PSD with linear interpolation and constant extension at the ends.
struct TabulatedPsd {
  std::vector<double> freq_hz;
  std::vector<double> value;

  double operator()(double f) const {
    require(!freq_hz.empty() && freq_hz.size() == value.size(),
            "TabulatedPsd: grid and values must be non-empty and equally long");
    if (f <= freq_hz.front()) return value.front();
    if (f >= freq_hz.back()) return value.back();
    const auto it = std::upper_bound(freq_hz.begin(), freq_hz.end(), f);
    const auto hi = static_cast<std::size_t>(it - freq_hz.begin());
    const double t = (f - freq_hz[hi - 1]) / (freq_hz[hi] - freq_hz[hi - 1]);
    return value[hi - 1] + t * (value[hi] - value[hi - 1]);
  }
};

/// Circulant embedding length used for n output samples.
inline std::size_t embedding_length(std::size_t n_samples) {
  return std::bit_ceil(std::max<std::size_t>(2 * n_samples, 8));
}

/// Draws pairs of independent stationary Gaussian traces with given PSDs.
///
/// Each trace gets a Hermitian random spectrum on an embedding of length M >= 2n;
/// two such spectra are packed into one complex inverse FFT as A + iB and the
/// first n samples are kept.
class ColoredNoiseShaper {
 public:
  ColoredNoiseShaper(const PsdFunction& psd_a, const PsdFunction& psd_b, std::size_t n_samples,
                     double sample_rate)
      : n_(n_samples), m_(embedding_length(n_samples)) {
    require(n_samples > 0, "ColoredNoiseShaper: n_samples must be positive");
    require(sample_rate > 0.0, "ColoredNoiseShaper: sample rate must be positive");
    const std::size_t half = m_ / 2;
    amp_a_.resize(half + 1);
    amp_b_.resize(half + 1);
    const double md = static_cast<double>(m_);
    for (std::size_t k = 0; k <= half; ++k) {
      const double f = static_cast<double>(k) * sample_rate / md;
      const double sa = psd_a(f);
      const double sb = psd_b(f);
      require(sa >= 0.0 && sb >= 0.0, "colored noise: target PSD must be non-negative");
      // Edge bins are real and carry the full variance in one normal draw.
      const double scale = (k == 0 || k == half) ? md : 0.5 * md;
      amp_a_[k] = std::sqrt(scale * sa);
      amp_b_[k] = std::sqrt(scale * sb);
    }
    spectrum_.resize(m_);
    time_.resize(m_);
  }

  std::size_t n_samples() const { return n_; }
  std::size_t embedding() const { return m_; }

  void generate(RandomStream& rng, std::span<double> a, std::span<double> b) {
    require(a.size() == n_ && b.size() == n_, "ColoredNoiseShaper: output size mismatch");
    const std::size_t half = m_ / 2;
    using C = std::complex<double>;
    const C i_unit(0.0, 1.0);
    spectrum_[0] = C(amp_a_[0] * rng.normal(), amp_b_[0] * rng.normal());
    spectrum_[half] = C(amp_a_[half] * rng.normal(), amp_b_[half] * rng.normal());
    for (std::size_t k = 1; k < half; ++k) {
      const C ak(amp_a_[k] * rng.normal(), amp_a_[k] * rng.normal());
      const C bk(amp_b_[k] * rng.normal(), amp_b_[k] * rng.normal());
      spectrum_[k] = ak + i_unit * bk;
      spectrum_[m_ - k] = std::conj(ak) + i_unit * std::conj(bk);
    }
    fft_.inv(time_, spectrum_);
    for (std::size_t t = 0; t < n_; ++t) {
      a[t] = time_[t].real();
      b[t] = time_[t].imag();
    }
  }

 private:
  std::size_t n_;
  std::size_t m_;
  std::vector<double> amp_a_;
  std::vector<double> amp_b_;
  std::vector<std::complex<double>> spectrum_;
  std::vector<std::complex<double>> time_;
  Eigen::FFT<double> fft_;
};

/// One Gaussian trace whose ensemble periodogram approaches `psd`.
inline std::vector<double> colored_noise(const PsdFunction& psd, std::size_t n_samples,
                                         double sample_rate, RandomStream& rng) {
  ColoredNoiseShaper shaper(psd, [](double) { return 0.0; }, n_samples, sample_rate);
  std::vector<double> a(n_samples);
  std::vector<double> b(n_samples);
  shaper.generate(rng, a, b);
  return a;
}

/// Random-stream channels used by the synthesizer. Each dataset owns a block
/// of 16 channels so datasets drawn from one master seed never overlap.
enum SynthChannel : std::uint32_t {
  kChanPath1 = 0,
  kChanPath2 = 1,
  kChanPhase = 2,
  kChanSlopeA = 3,
  kChanSlopeB = 4,
  kChanElectronicA = 5,
  kChanElectronicB = 6,
  kChanShot = 7,
};

inline std::uint32_t synth_channel(std::uint32_t dataset_tag, SynthChannel c) {
  return dataset_tag * 16u + static_cast<std::uint32_t>(c);
}

namespace detail {

inline void add_detector_artifacts(std::span<double> trace, const ArtifactModel& artifacts,
                                   std::span<const double> ripple, double dt,
                                   RandomStream& slope_rng, RandomStream& electronic_rng,
                                   double electronic_sigma) {
  const double slope =
      artifacts.slope_decay + artifacts.slope_jitter_sigma * slope_rng.normal();
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const double time = static_cast<double>(t) * dt;
    trace[t] += artifacts.coherent_offset + slope * time + ripple[t] +
                electronic_sigma * electronic_rng.normal();
  }
}

}  // namespace detail

/// Homodyne traces at stations A and B for one angle setting.
///
/// Per trace: draw the path phases, synthesise (x1, p1, x2, p2) as coloured
/// noise with the model spectra, rotate each path, interfere, project on the
/// LO angles, then add detector artifacts. Deterministic in
/// (master_seed, dataset_tag, trace index) and independent of `threads`.
inline std::pair<TraceSet, TraceSet> synthesize_quadrature_traces(
    const SignalModel& model, const MeasurementAngles& angles, const SwitchTiming& timing,
    const ArtifactModel& artifacts, std::uint64_t master_seed, std::uint32_t dataset_tag = 0,
    unsigned threads = 1) {
  timing.validate();
  artifacts.validate();
  model.opo.validate();
  const std::size_t n = timing.n_samples();
  const std::size_t count = timing.traces_per_set;
  const double fs = timing.sample_rate;

  auto path_psd = [&](int index, bool p_quadrature) -> PsdFunction {
    return [&model, index, p_quadrature](double f_hz) {
      const auto v = model.path_pair(index, kTwoPi * f_hz);
      return p_quadrature ? v.v_p : v.v_x;
    };
  };
  const ColoredNoiseShaper shaper1(path_psd(0, false), path_psd(0, true), n, fs);
  const ColoredNoiseShaper shaper2(path_psd(1, false), path_psd(1, true), n, fs);

  TraceSet set_a(count, n, fs, TraceKind::kSignal);
  TraceSet set_b(count, n, fs, TraceKind::kSignal);
  for (auto* s : {&set_a, &set_b}) {
    s->timing = timing;
    s->seed = master_seed;
  }

  const std::vector<double> ripple = artifacts.ripple_waveform(n, timing.dt());
  const double electronic_sigma = std::sqrt(artifacts.electronic_variance());
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const double ca = std::cos(angles.theta_a);
  const double sa = std::sin(angles.theta_a);
  const double cb = std::cos(angles.theta_b);
  const double sb = std::sin(angles.theta_b);

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  parallel_for(workers, workers, [&](std::size_t w) {
    ColoredNoiseShaper s1 = shaper1;
    ColoredNoiseShaper s2 = shaper2;
    std::vector<double> x1(n), p1(n), x2(n), p2(n);
    const std::size_t begin = count * w / workers;
    const std::size_t end = count * (w + 1) / workers;
    for (std::size_t j = begin; j < end; ++j) {
      RandomStream rng1(master_seed, j, synth_channel(dataset_tag, kChanPath1));
      RandomStream rng2(master_seed, j, synth_channel(dataset_tag, kChanPath2));
      RandomStream rng_phase(master_seed, j, synth_channel(dataset_tag, kChanPhase));
      s1.generate(rng1, x1, p1);
      s2.generate(rng2, x2, p2);
      const double phi1 = model.phase[0].offset + model.phase[0].jitter_sigma * rng_phase.normal();
      const double phi2 = model.phase[1].offset + model.phase[1].jitter_sigma * rng_phase.normal();
      const double c1 = std::cos(phi1), s1r = std::sin(phi1);
      const double c2 = std::cos(phi2), s2r = std::sin(phi2);
      auto qa = set_a.trace(j);
      auto qb = set_b.trace(j);
      for (std::size_t t = 0; t < n; ++t) {
        const double x1r = x1[t] * c1 - p1[t] * s1r;
        const double p1r = x1[t] * s1r + p1[t] * c1;
        const double x2r = x2[t] * c2 - p2[t] * s2r;
        const double p2r = x2[t] * s2r + p2[t] * c2;
        const double xa = inv_sqrt2 * (x1r - p2r);
        const double pa = inv_sqrt2 * (p1r + x2r);
        const double xb = inv_sqrt2 * (x1r + p2r);
        const double pb = inv_sqrt2 * (p1r - x2r);
        qa[t] = xa * ca + pa * sa;
        qb[t] = xb * cb + pb * sb;
      }
      RandomStream slope_a(master_seed, j, synth_channel(dataset_tag, kChanSlopeA));
      RandomStream slope_b(master_seed, j, synth_channel(dataset_tag, kChanSlopeB));
      RandomStream el_a(master_seed, j, synth_channel(dataset_tag, kChanElectronicA));
      RandomStream el_b(master_seed, j, synth_channel(dataset_tag, kChanElectronicB));
      detail::add_detector_artifacts(qa, artifacts, ripple, timing.dt(), slope_a, el_a,
                                     electronic_sigma);
      detail::add_detector_artifacts(qb, artifacts, ripple, timing.dt(), slope_b, el_b,
                                     electronic_sigma);
    }
  });
  return {std::move(set_a), std::move(set_b)};
}

/// Calibration set: unit-variance white shot noise plus the electronic floor,
/// or the electronic floor alone. Slope and ripple artifacts are not added.
inline TraceSet synthesize_calibration(TraceKind kind, const SwitchTiming& timing,
                                       const ArtifactModel& artifacts, std::uint64_t master_seed,
                                       std::uint32_t dataset_tag = 0, unsigned threads = 1) {
  require(kind != TraceKind::kSignal, "synthesize_calibration: kind must be a calibration kind");
  timing.validate();
  artifacts.validate();
  const std::size_t n = timing.n_samples();
  TraceSet set(timing.traces_per_set, n, timing.sample_rate, kind);
  set.timing = timing;
  set.seed = master_seed;
  const double electronic_sigma = std::sqrt(artifacts.electronic_variance());
  const bool shot = kind == TraceKind::kShotNoise;
  parallel_for(set.n_traces(), threads, [&](std::size_t j) {
    RandomStream rng_shot(master_seed, j, synth_channel(dataset_tag, kChanShot));
    RandomStream rng_el(master_seed, j, synth_channel(dataset_tag, kChanElectronicA));
    auto tr = set.trace(j);
    for (std::size_t t = 0; t < n; ++t) {
      const double vacuum = shot ? rng_shot.normal() : 0.0;
      tr[t] = vacuum + electronic_sigma * rng_el.normal();
    }
  });
  return set;
}

}  // namespace eprsim
