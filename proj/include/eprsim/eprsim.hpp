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

#include "eprsim/units.hpp"
#include "eprsim/error.hpp"
#include "eprsim/gaussian.hpp"
#include "eprsim/opo.hpp"
#include "eprsim/network.hpp"
#include "eprsim/rng.hpp"
#include "eprsim/stats.hpp"
#include "eprsim/parallel.hpp"
#include "eprsim/trace.hpp"
#include "eprsim/signal_model.hpp"
#include "eprsim/trace_synth.hpp"
#include "eprsim/dsp.hpp"
#include "eprsim/response.hpp"
#include "eprsim/fit.hpp"
#include "eprsim/tomography.hpp"
#include "eprsim/io.hpp"
#include "eprsim/config.hpp"
