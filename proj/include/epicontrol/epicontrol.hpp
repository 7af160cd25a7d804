// Copyright 2026 The Epicontrol Authors
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

// Umbrella header for everything except the HTTP server.

#ifndef EPICONTROL_EPICONTROL_HPP
#define EPICONTROL_EPICONTROL_HPP

#include "epicontrol/control/config.hpp"
#include "epicontrol/control/generator.hpp"
#include "epicontrol/control/ingest.hpp"
#include "epicontrol/control/loop.hpp"
#include "epicontrol/control/metrics.hpp"
#include "epicontrol/core/dynamics.hpp"
#include "epicontrol/core/observation.hpp"
#include "epicontrol/core/simulate.hpp"
#include "epicontrol/core/types.hpp"
#include "epicontrol/errors.hpp"
#include "epicontrol/inference/particle_filter.hpp"
#include "epicontrol/inference/resampling.hpp"
#include "epicontrol/inference/smc2.hpp"
#include "epicontrol/io/json.hpp"
#include "epicontrol/planning/convergence.hpp"
#include "epicontrol/planning/qlearning.hpp"
#include "epicontrol/planning/rollout.hpp"
#include "epicontrol/planning/threshold.hpp"
#include "epicontrol/random.hpp"
#include "epicontrol/reward.hpp"
#include "epicontrol/service/session.hpp"

#endif
