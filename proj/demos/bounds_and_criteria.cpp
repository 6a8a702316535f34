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

// Entanglement criteria and admissible ranges of the unmeasured <xA pA>, <xB pB>
// for a measured two-mode covariance matrix (V0 units, a and b unknown).

#include <cstdio>

#include "eprsim/eprsim.hpp"

int main() {
  using namespace eprsim;
  CovarianceTemplate cov;
  cov.entries << 4.36, 0.0, -3.84, 0.36,  //
      0.0, 4.43, 0.45, 3.92,               //
      -3.84, 0.45, 4.17, 0.0,              //
      0.36, 3.92, 0.0, 4.26;
  cov.a_unknown = true;
  cov.b_unknown = true;

  const Report r = report(cov, {}, std::nullopt, {0.94, 0.80, 0.91});
  std::printf("%s", io::report_text(r).c_str());
  return 0;
}
