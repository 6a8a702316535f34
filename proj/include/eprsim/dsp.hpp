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
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "eprsim/error.hpp"
#include "eprsim/parallel.hpp"
#include "eprsim/stats.hpp"
#include "eprsim/trace.hpp"
#include "eprsim/units.hpp"

namespace eprsim {

// ---------------------------------------------------------------------------
// Trace conditioning
// ---------------------------------------------------------------------------

/// Subtracts the least-squares line from one trace in place.
inline void detrend_in_place(std::span<double> trace) {
  const std::size_t n = trace.size();
  const double t_mean = 0.5 * static_cast<double>(n - 1);
  double stt = 0.0;
  double sy = 0.0;
  double sty = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double tc = static_cast<double>(i) - t_mean;
    stt += tc * tc;
    sy += trace[i];
    sty += tc * trace[i];
  }
  const double level = sy / static_cast<double>(n);
  const double slope = sty / stt;
  for (std::size_t i = 0; i < n; ++i) {
    trace[i] -= level + slope * (static_cast<double>(i) - t_mean);
  }
}

/// Removes a per-trace ordinary-least-squares line.
inline TraceSet slope_remove(TraceSet set, unsigned threads = 1) {
  require(set.n_samples() >= 3, "slope_remove: need at least three samples per trace");
  parallel_for(set.n_traces(), threads, [&](std::size_t i) { detrend_in_place(set.trace(i)); });
  set.flags.slope_removed = true;
  return set;
}

/// Ensemble-mean trace, summed pairwise per sample.
inline std::vector<double> ensemble_mean(const TraceSet& set) {
  require(set.n_traces() > 0, "ensemble_mean: empty trace set");
  std::vector<double> column(set.n_traces());
  std::vector<double> out(set.n_samples());
  for (std::size_t t = 0; t < set.n_samples(); ++t) {
    for (std::size_t i = 0; i < set.n_traces(); ++i) column[i] = set.trace(i)[t];
    out[t] = mean(column);
  }
  return out;
}

/// Subtracts the ensemble-mean trace without checking earlier steps.
inline TraceSet subtract_ensemble_mean(TraceSet set) {
  const std::vector<double> m = ensemble_mean(set);
  for (std::size_t i = 0; i < set.n_traces(); ++i) {
    auto tr = set.trace(i);
    for (std::size_t t = 0; t < tr.size(); ++t) tr[t] -= m[t];
  }
  set.flags.ripple_removed = true;
  return set;
}

/// Removes the switch-synchronous waveform shared by all traces.
inline TraceSet ripple_remove(TraceSet set) {
  require(set.flags.slope_removed, "ripple_remove: slope removal must come first");
  return subtract_ensemble_mean(std::move(set));
}

struct ProcessingOptions {
  bool remove_slope = true;
  bool remove_ripple = true;
  unsigned threads = 1;
};

/// Conditioning chain applied to every raw set (signal and calibration alike).
inline TraceSet process(TraceSet set, const ProcessingOptions& opt = {}) {
  if (opt.remove_slope) set = slope_remove(std::move(set), opt.threads);
  if (opt.remove_ripple) set = subtract_ensemble_mean(std::move(set));
  return set;
}

// ---------------------------------------------------------------------------
// Temporal histogram
// ---------------------------------------------------------------------------

struct TemporalHistogram {
  std::vector<double> time_s;
  std::vector<double> quantile_levels;
  /// quantiles[q][t]: value of quantile level q at sample t.
  std::vector<std::vector<double>> quantiles;
  double value_min = 0.0;
  double value_max = 0.0;
  std::size_t value_bins = 0;
  /// counts[t * value_bins + b]
  std::vector<std::size_t> counts;
};

inline TemporalHistogram temporal_histogram(const TraceSet& set,
                                            std::vector<double> levels = {0.025, 0.25, 0.5, 0.75,
                                                                          0.975},
                                            std::size_t value_bins = 64) {
  require(set.n_traces() > 0, "temporal_histogram: empty trace set");
  require(value_bins > 0, "temporal_histogram: need at least one value bin");
  for (double q : levels) require(q >= 0.0 && q <= 1.0, "temporal_histogram: bad quantile");
  TemporalHistogram h;
  h.quantile_levels = levels;
  h.value_bins = value_bins;
  const auto [lo, hi] = std::minmax_element(set.data().begin(), set.data().end());
  h.value_min = *lo;
  h.value_max = *hi;
  const double width = h.value_max > h.value_min ? h.value_max - h.value_min : 1.0;
  h.quantiles.assign(levels.size(), std::vector<double>(set.n_samples()));
  h.counts.assign(set.n_samples() * value_bins, 0);
  std::vector<double> column(set.n_traces());
  for (std::size_t t = 0; t < set.n_samples(); ++t) {
    h.time_s.push_back(static_cast<double>(t) * set.dt());
    for (std::size_t i = 0; i < set.n_traces(); ++i) column[i] = set.trace(i)[t];
    for (double v : column) {
      auto b = static_cast<std::size_t>((v - h.value_min) / width * static_cast<double>(value_bins));
      h.counts[t * value_bins + std::min(b, value_bins - 1)]++;
    }
    std::sort(column.begin(), column.end());
    for (std::size_t q = 0; q < levels.size(); ++q) {
      // Linear interpolation between order statistics.
      const double pos = levels[q] * static_cast<double>(column.size() - 1);
      const auto k = static_cast<std::size_t>(pos);
      const double frac = pos - static_cast<double>(k);
      const double next = column[std::min(k + 1, column.size() - 1)];
      h.quantiles[q][t] = column[k] + frac * (next - column[k]);
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

enum class Window { kRectangular, kHann };

inline std::vector<double> window_weights(Window w, std::size_t n) {
  std::vector<double> out(n, 1.0);
  if (w == Window::kHann) {
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n)));
    }
  }
  return out;
}

/// Ensemble-averaged one-sided periodogram, bins 0..n/2. Normalised so white
/// noise of variance v gives v in every bin.
struct PeriodogramAverage {
  std::vector<double> freq_hz;
  std::vector<double> mean;
  std::vector<double> se;  // standard error of the mean per bin
  std::size_t n_traces = 0;
};

inline PeriodogramAverage average_periodogram(const TraceSet& set, Window window = Window::kRectangular,
                                              unsigned threads = 1) {
  const std::size_t n = set.n_samples();
  const std::size_t count = set.n_traces();
  require(count >= 2 && n >= 2, "average_periodogram: need at least two traces and samples");
  const std::size_t bins = n / 2 + 1;
  const std::vector<double> w = window_weights(window, n);
  double w2 = 0.0;
  for (double v : w) w2 += v * v;

  // Fixed chunking keeps the summation order independent of the thread count.
  constexpr std::size_t kChunk = 256;
  const std::size_t n_chunks = (count + kChunk - 1) / kChunk;
  std::vector<double> chunk_sum(n_chunks * bins, 0.0);
  std::vector<double> chunk_sq(n_chunks * bins, 0.0);
  parallel_for(n_chunks, threads, [&](std::size_t c) {
    Eigen::FFT<double> fft;
    std::vector<double> buf(n);
    std::vector<std::complex<double>> spec;
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(count, begin + kChunk);
    for (std::size_t i = begin; i < end; ++i) {
      const auto tr = set.trace(i);
      for (std::size_t t = 0; t < n; ++t) buf[t] = tr[t] * w[t];
      fft.fwd(spec, buf);
      for (std::size_t k = 0; k < bins; ++k) {
        const double p = std::norm(spec[k]) / w2;
        chunk_sum[c * bins + k] += p;
        chunk_sq[c * bins + k] += p * p;
      }
    }
  });

  PeriodogramAverage out;
  out.n_traces = count;
  out.freq_hz.resize(bins);
  out.mean.resize(bins);
  out.se.resize(bins);
  std::vector<double> col(n_chunks);
  std::vector<double> col_sq(n_chunks);
  const double nd = static_cast<double>(count);
  for (std::size_t k = 0; k < bins; ++k) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      col[c] = chunk_sum[c * bins + k];
      col_sq[c] = chunk_sq[c * bins + k];
    }
    const double m = pairwise_sum(col) / nd;
    const double var = std::max(0.0, (pairwise_sum(col_sq) / nd - m * m) * nd / (nd - 1.0));
    out.freq_hz[k] = static_cast<double>(k) * set.sample_rate() / static_cast<double>(n);
    out.mean[k] = m;
    out.se[k] = std::sqrt(var / nd);
  }
  return out;
}

struct SpectrumEstimate {
  std::vector<double> freq_hz;
  std::vector<double> variance_rel_shot;  // linear ratio to the shot-noise level
  std::vector<double> stderr_rel_shot;
  std::vector<double> variance_db;
  std::vector<double> stderr_db;
  // Part of stderr_db due to the shot-noise calibration alone. It is shared
  // by every spectrum normalised with the same shot-noise set.
  std::vector<double> calibration_se_db;
};

/// Electronic-subtracted, shot-noise-normalised spectrum of a processed set,
/// bins 1..n/2.
/// `electronic_weight` counts the detectors whose floors add into the set
/// and `shot_scale` the vacuum level of the quantity (2 for q_A +- q_B).
inline SpectrumEstimate normalized_spectrum(const PeriodogramAverage& signal,
                                            const PeriodogramAverage& shot,
                                            const PeriodogramAverage& electronic,
                                            double electronic_weight, double shot_scale) {
  if (signal.mean.size() != shot.mean.size() || signal.mean.size() != electronic.mean.size()) {
    throw DataError("normalized_spectrum: spectra have different lengths");
  }
  SpectrumEstimate out;
  // The DC bin carries the removed offsets and is not reported.
  for (std::size_t k = 1; k < signal.mean.size(); ++k) {
    out.freq_hz.push_back(signal.freq_hz[k]);
    const Estimate r = normalized_ratio({signal.mean[k], signal.se[k]},
                                        {shot.mean[k], shot.se[k]},
                                        {electronic.mean[k], electronic.se[k]}, electronic_weight);
    const Estimate cal = normalized_ratio({signal.mean[k], 0.0}, {shot.mean[k], shot.se[k]},
                                          {electronic.mean[k], 0.0}, electronic_weight);
    const double ratio = r.value / shot_scale;
    const double se = r.se / shot_scale;
    out.variance_rel_shot.push_back(ratio);
    out.stderr_rel_shot.push_back(se);
    out.variance_db.push_back(ratio > 0.0 ? to_db(ratio) : -300.0);
    out.stderr_db.push_back(ratio > 0.0 ? 10.0 / std::log(10.0) * se / ratio : 0.0);
    out.calibration_se_db.push_back(r.value > 0.0 ? 10.0 / std::log(10.0) * cal.se / r.value : 0.0);
  }
  return out;
}

/// Spectrum of q_A + sign q_B relative to the two-detector vacuum level.
/// All sets must have gone through the same conditioning.
inline SpectrumEstimate combined_spectrum(const TraceSet& set_a, const TraceSet& set_b,
                                          double sign, const TraceSet& shot,
                                          const TraceSet& electronic,
                                          Window window = Window::kRectangular,
                                          unsigned threads = 1) {
  if (set_a.n_traces() != set_b.n_traces() || set_a.n_samples() != set_b.n_samples()) {
    throw DataError("combined_spectrum: A and B sets differ in shape");
  }
  if (shot.n_samples() != set_a.n_samples() || electronic.n_samples() != set_a.n_samples()) {
    throw DataError("combined_spectrum: calibration trace length differs from signal");
  }
  const TraceSet sum = combine(set_a, set_b, sign);
  return normalized_spectrum(average_periodogram(sum, window, threads),
                             average_periodogram(shot, window, threads),
                             average_periodogram(electronic, window, threads), 2.0, 2.0);
}

// ---------------------------------------------------------------------------
// Mode extraction
// ---------------------------------------------------------------------------

/// Per-trace value sum_t trace(t) sin(2 pi f0 t) dt.
inline std::vector<double> mode_values(const TraceSet& set, double f0_hz) {
  require(f0_hz > 0.0, "mode_values: f0 must be positive");
  if (f0_hz >= 0.5 * set.sample_rate()) {
    throw ContractError("mode_values: f0 must lie below the Nyquist frequency");
  }
  const std::size_t n = set.n_samples();
  std::vector<double> kernel(n);
  for (std::size_t t = 0; t < n; ++t) {
    kernel[t] = std::sin(kTwoPi * f0_hz * static_cast<double>(t) * set.dt()) * set.dt();
  }
  std::vector<double> out(set.n_traces());
  for (std::size_t i = 0; i < set.n_traces(); ++i) {
    const auto tr = set.trace(i);
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) acc += tr[t] * kernel[t];
    out[i] = acc;
  }
  return out;
}

struct ModeExtraction {
  std::vector<double> values;
  Estimate raw_variance;
  Estimate variance;  // V0 units
};

/// Mode variance of `set` normalised by calibration sets processed identically.
/// electronic_weight is 2 for q_A +- q_B and 1 for one detector.
inline ModeExtraction mode_extract(const TraceSet& set, double f0_hz, const TraceSet& shot,
                                   const TraceSet& electronic, double electronic_weight = 2.0) {
  ModeExtraction out;
  out.values = mode_values(set, f0_hz);
  out.raw_variance = variance_with_jackknife(out.values);
  const auto shot_var = variance_with_jackknife(mode_values(shot, f0_hz));
  const auto el_var = variance_with_jackknife(mode_values(electronic, f0_hz));
  out.variance = normalized_ratio(out.raw_variance, shot_var, el_var, electronic_weight);
  return out;
}

/// Convenience: mode variance of q_A + sign q_B.
inline ModeExtraction mode_extract_combined(const TraceSet& set_a, const TraceSet& set_b,
                                            double sign, double f0_hz, const TraceSet& shot,
                                            const TraceSet& electronic) {
  return mode_extract(combine(set_a, set_b, sign), f0_hz, shot, electronic, 2.0);
}

}  // namespace eprsim
