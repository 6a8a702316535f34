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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "eprsim/dsp.hpp"
#include "eprsim/trace_synth.hpp"

namespace eprsim {
namespace {

constexpr double kFs = 250e6;

TraceSet filled(std::size_t count, std::size_t n, const std::function<double(std::size_t, std::size_t)>& f) {
  TraceSet s(count, n, kFs, TraceKind::kSignal);
  for (std::size_t i = 0; i < count; ++i) {
    auto tr = s.trace(i);
    for (std::size_t t = 0; t < n; ++t) tr[t] = f(i, t);
  }
  return s;
}

SwitchTiming small_timing(std::size_t traces) {
  SwitchTiming t;
  t.traces_per_set = traces;
  return t;
}

TEST(SlopeRemove, StraightLinesVanish) {
  auto set = filled(5, 225, [](std::size_t i, std::size_t t) { return 3.0 - 0.01 * i * t + i; });
  set = slope_remove(std::move(set));
  for (double v : set.data()) EXPECT_NEAR(v, 0.0, 1e-12);
  EXPECT_TRUE(set.flags.slope_removed);
}

TEST(SlopeRemove, BalancedCosineSurvives) {
  const std::size_t n = 225;
  auto wave = [n](std::size_t t) { return std::cos(kTwoPi * 9.0 * static_cast<double>(t) / n); };
  auto set = filled(1, n, [&](std::size_t, std::size_t t) { return wave(t) + 0.4 * t; });
  set = slope_remove(std::move(set));
  // Whole cycles leave only a small projection on the line, of order 3/n.
  for (std::size_t t = 0; t < n; ++t) EXPECT_NEAR(set.trace(0)[t], wave(t), 4.0 / n);
}

TEST(SlopeRemove, Idempotent) {
  RandomStream rng(3, 0);
  auto set = filled(20, 100, [&](std::size_t, std::size_t t) { return rng.normal() + 0.1 * t; });
  const auto once = slope_remove(set);
  const auto twice = slope_remove(once);
  for (std::size_t i = 0; i < once.data().size(); ++i) {
    EXPECT_NEAR(once.data()[i], twice.data()[i], 1e-12);
  }
}

TEST(RippleRemove, RequiresSlopeRemovalFirst) {
  auto set = filled(3, 10, [](std::size_t, std::size_t) { return 1.0; });
  EXPECT_THROW(ripple_remove(set), ContractError);
}

TEST(RippleRemove, IdenticalTracesBecomeZero) {
  auto set = filled(8, 50, [](std::size_t, std::size_t t) { return std::sin(0.3 * t) + 0.02 * t; });
  set = ripple_remove(slope_remove(std::move(set)));
  for (double v : set.data()) EXPECT_NEAR(v, 0.0, 1e-12);
  EXPECT_TRUE(set.flags.ripple_removed);
}

TEST(RippleRemove, SharedWaveformRemovedNoiseKept) {
  const std::size_t count = 4000;
  RandomStream rng(4, 0);
  auto set = filled(count, 64, [&](std::size_t, std::size_t t) {
    return 5.0 * std::exp(-0.05 * t) * std::sin(0.4 * t) + rng.normal();
  });
  const auto out = subtract_ensemble_mean(set);
  for (double v : ensemble_mean(out)) EXPECT_NEAR(v, 0.0, 1e-12);
  // Removing an estimated mean costs a fraction 1/N of the variance.
  EXPECT_NEAR(sample_variance(out.data()), 1.0 - 1.0 / count, 0.02);
}

TEST(Processing, StepsCommute) {
  RandomStream rng(5, 0);
  auto set = filled(30, 80, [&](std::size_t i, std::size_t t) {
    return rng.normal() + 0.05 * static_cast<double>(i) * t + std::cos(0.2 * t);
  });
  const auto forward = process(set);
  const auto reverse = slope_remove(subtract_ensemble_mean(set));
  for (std::size_t k = 0; k < set.data().size(); ++k) {
    EXPECT_NEAR(forward.data()[k], reverse.data()[k], 1e-12);
  }
}

TEST(TemporalHistogram, SingleTraceQuantilesAreTheTrace) {
  auto set = filled(1, 20, [](std::size_t, std::size_t t) { return 0.5 * t - 3.0; });
  const auto h = temporal_histogram(set);
  for (std::size_t t = 0; t < 20; ++t) {
    for (const auto& q : h.quantiles) EXPECT_DOUBLE_EQ(q[t], 0.5 * t - 3.0);
    std::size_t total = 0;
    for (std::size_t b = 0; b < h.value_bins; ++b) total += h.counts[t * h.value_bins + b];
    EXPECT_EQ(total, 1u);
  }
  EXPECT_DOUBLE_EQ(h.value_min, -3.0);
  EXPECT_DOUBLE_EQ(h.value_max, 6.5);
}

TEST(TemporalHistogram, MedianOfGaussianColumns) {
  RandomStream rng(6, 0);
  auto set = filled(4001, 4, [&](std::size_t, std::size_t t) {
    return static_cast<double>(t) + rng.normal();
  });
  const auto h = temporal_histogram(set, {0.1587, 0.5, 0.8413});
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_NEAR(h.quantiles[1][t], t, 0.06);
    EXPECT_NEAR(h.quantiles[2][t] - h.quantiles[0][t], 2.0, 0.12);
  }
}

TEST(Periodogram, WhiteNoiseLevelAndBinGrid) {
  RandomStream rng(7, 0);
  auto set = filled(3000, 100, [&](std::size_t, std::size_t) { return 1.7 * rng.normal(); });
  for (Window w : {Window::kRectangular, Window::kHann}) {
    const auto avg = average_periodogram(set, w);
    ASSERT_EQ(avg.mean.size(), 51u);
    EXPECT_DOUBLE_EQ(avg.freq_hz[1], kFs / 100.0);
    for (std::size_t k = 1; k + 1 < avg.mean.size(); ++k) {
      EXPECT_NEAR(avg.mean[k], 1.7 * 1.7, 5.0 * avg.se[k]) << k;
    }
  }
}

TEST(Periodogram, SinusoidLandsInItsBin) {
  const std::size_t n = 100;
  auto set = filled(4, n, [&](std::size_t, std::size_t t) {
    return std::cos(kTwoPi * 10.0 * static_cast<double>(t) / n);
  });
  const auto avg = average_periodogram(set);
  // A unit cosine on a bin: |X_k|^2 / n = n / 4.
  EXPECT_NEAR(avg.mean[10], n / 4.0, 1e-9);
  EXPECT_NEAR(avg.mean[11], 0.0, 1e-9);
  EXPECT_NEAR(avg.se[10], 0.0, 1e-9);
}

TEST(Periodogram, ThreadCountDoesNotChangeBits) {
  RandomStream rng(8, 0);
  auto set = filled(1000, 64, [&](std::size_t, std::size_t) { return rng.normal(); });
  const auto a = average_periodogram(set, Window::kRectangular, 1);
  const auto b = average_periodogram(set, Window::kRectangular, 3);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.se, b.se);
}

struct Calibration {
  TraceSet shot;
  TraceSet electronic;
};

Calibration calibration(double electronic_db, std::size_t traces, std::uint64_t seed) {
  ArtifactModel art;
  art.electronic_noise_db = electronic_db;
  const auto timing = small_timing(traces);
  return {synthesize_calibration(TraceKind::kShotNoise, timing, art, seed, 0),
          synthesize_calibration(TraceKind::kElectronic, timing, art, seed, 1)};
}

TEST(Spectrum, VacuumPairReadsZeroDecibels) {
  for (double el_db : {-20.0, -8.0}) {
    const auto cal = calibration(el_db, 3000, 40);
    const auto a = calibration(el_db, 3000, 41).shot;
    const auto b = calibration(el_db, 3000, 42).shot;
    const auto s = combined_spectrum(a, b, -1.0, cal.shot, cal.electronic);
    ASSERT_EQ(s.freq_hz.size(), cal.shot.n_samples() / 2);
    for (std::size_t k = 0; k < s.freq_hz.size(); ++k) {
      EXPECT_NEAR(s.variance_db[k], 0.0, 5.0 * s.stderr_db[k]) << el_db << " dB floor, bin " << k;
      EXPECT_LE(s.calibration_se_db[k], s.stderr_db[k]);
      EXPECT_GT(s.calibration_se_db[k], 0.0);
    }
  }
}

TEST(Spectrum, MismatchedLengthsAreRejected) {
  const auto cal = calibration(-20.0, 10, 1);
  TraceSet shorter(10, 100, kFs, TraceKind::kSignal);
  EXPECT_THROW(combined_spectrum(shorter, shorter, 1.0, cal.shot, cal.electronic), DataError);
  TraceSet other(9, 100, kFs, TraceKind::kSignal);
  EXPECT_THROW(combine(shorter, other, 1.0), DataError);
}

TEST(ModeExtract, ShotNoiseNormalisesToOne) {
  const auto cal = calibration(-20.0, 4000, 50);
  const auto signal = calibration(-20.0, 4000, 51).shot;
  const auto m = mode_extract(signal, 3e6, cal.shot, cal.electronic, 1.0);
  EXPECT_NEAR(m.variance.value, 1.0, 4.0 * m.variance.se);
  EXPECT_EQ(m.values.size(), 4000u);
}

TEST(ModeExtract, DeterministicSinusoidHasNoSpread) {
  const auto cal = calibration(-20.0, 100, 52);
  const auto timing = small_timing(100);
  TraceSet s(100, timing.n_samples(), kFs, TraceKind::kSignal);
  for (std::size_t i = 0; i < 100; ++i) {
    auto tr = s.trace(i);
    for (std::size_t t = 0; t < tr.size(); ++t) tr[t] = std::sin(kTwoPi * 3e6 * t / kFs);
  }
  const auto m = mode_extract(s, 3e6, cal.shot, cal.electronic, 1.0);
  EXPECT_NEAR(m.raw_variance.value, 0.0, 1e-20);
}

TEST(ModeExtract, RejectsFrequencyAboveNyquist) {
  TraceSet s(3, 10, kFs, TraceKind::kSignal);
  EXPECT_THROW(mode_values(s, 0.5 * kFs), ContractError);
  EXPECT_THROW(mode_values(s, 0.0), ContractError);
}

TEST(ModeExtract, CombinedModeMatchesSpectrumForFlatNoise) {
  // For white input the mode variance and the spectrum read the same level.
  const auto cal = calibration(-20.0, 4000, 60);
  const auto a = calibration(-20.0, 4000, 61).shot;
  const auto b = calibration(-20.0, 4000, 62).shot;
  const auto m = mode_extract_combined(a, b, +1.0, 3e6, cal.shot, cal.electronic);
  EXPECT_NEAR(m.variance.value, 2.0, 4.0 * m.variance.se);
}

}  // namespace
}  // namespace eprsim
