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

#include <array>

#include "eprsim/network.hpp"
#include "eprsim/opo.hpp"

namespace eprsim {

/// Phase noise of one path: fixed offset plus zero-mean Gaussian jitter (rad).
struct PhaseNoise {
  double offset = 0.0;
  double jitter_sigma = 0.0;
};

/// Frequency-resolved description of the two paths feeding the coupler.
///
/// Both paths carry the same OPO output; the delay path adds a pump-independent
/// excess spectrum after the loss. `eta` of the OPO is the full detection
/// efficiency, so the paths themselves are lossless here.
struct SignalModel {
  OpoParams opo;
  SeedNoiseModel seed;
  ExcessNoiseShape delay_excess;
  std::array<PhaseNoise, 2> phase{};
  bool pumped = true;

  /// Squeezed/anti-squeezed variances of path `index` (0 direct, 1 delay) at omega.
  QuadratureVariancePair path_pair(int index, double omega) const {
    OpoParams p = opo;
    if (!pumped) p.epsilon = 0.0;
    QuadratureVariancePair v = output_spectrum_pair(p, seed, omega);
    if (index == 1) {
      const double extra = delay_excess(rad_per_s_to_mhz(omega));
      v.v_x += extra;
      v.v_p += extra;
    }
    return v;
  }

  PathState path_state(int index, double omega) const {
    const auto v = path_pair(index, omega);
    const auto& ph = phase[static_cast<std::size_t>(index)];
    return {v.v_x, v.v_p, 1.0, ph.offset, ph.jitter_sigma};
  }

  CovarianceMatrix4 two_mode_cov(double omega) const {
    return build_two_mode_cov(path_state(0, omega), path_state(1, omega));
  }

  /// Var(q_A +- q_B) at omega for given angles, V0 units.
  double combination_variance_at(double omega, const MeasurementAngles& angles,
                                 double sign) const {
    return combination_variance(two_mode_cov(omega), angles, sign);
  }
};

}  // namespace eprsim
