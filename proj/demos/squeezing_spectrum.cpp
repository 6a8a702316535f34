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

// Squeezed and anti-squeezed output spectra of the OPO with the default cavity,
// pump and detection efficiency, with and without phase noise.

#include <cstdio>

#include "eprsim/eprsim.hpp"

int main() {
  using namespace eprsim;
  const double gamma = decay_rate(CavityGeometry{});
  const double eps = pump_rate(350.0, 833.0, gamma);
  const double eta = efficiency_budget({0.94, 0.80, 0.91});
  const OpoParams opo = OpoParams::from_total(gamma, eps, eta);
  std::printf("gamma/2pi = %.3f MHz, eps/2pi = %.3f MHz, eta = %.3f\n",
              rad_per_s_to_mhz(gamma), rad_per_s_to_mhz(eps), eta);
  std::printf("%8s %10s %10s %12s %12s\n", "f[MHz]", "sq[dB]", "anti[dB]", "sq,1.9deg", "sq,4.1deg");
  for (double f = 1.0; f <= 20.0; f += 1.0) {
    const auto pair = output_spectrum_pair(opo, SeedNoiseModel::none(), mhz_to_rad_per_s(f));
    std::printf("%8.1f %10.3f %10.3f %12.3f %12.3f\n", f, to_db(pair.v_x), to_db(pair.v_p),
                to_db(phase_averaged_variance(pair, 0.0, deg_to_rad(1.9))),
                to_db(phase_averaged_variance(pair, 0.0, deg_to_rad(4.1))));
  }
  return 0;
}
