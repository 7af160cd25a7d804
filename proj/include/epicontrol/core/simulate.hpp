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

#ifndef EPICONTROL_CORE_SIMULATE_HPP
#define EPICONTROL_CORE_SIMULATE_HPP

#include <span>
#include <vector>

#include "epicontrol/core/dynamics.hpp"
#include "epicontrol/core/observation.hpp"
#include "epicontrol/core/types.hpp"

namespace epicontrol {

struct Trajectory {
  /// States on days initial.day + 1 .. initial.day + days.
  std::vector<CompartmentState> states;
  std::vector<Observation> observations;
};

/// Runs `days` transitions from `initial`, observing each new state.
/// `actions[i]` governs the transition into day initial.day + i + 1.
inline Trajectory simulate(const CompartmentState& initial, const ModelParams& params,
                           std::span<const ActionLevel> actions, const VaccinationStream& vax, int days,
                           RandomStream& rng, Propagation mode = Propagation::kStochastic) {
  if (days < 1) {
    throw Error{"simulate requires days >= 1"};
  }
  if (actions.size() < static_cast<std::size_t>(days)) {
    throw Error{"action sequence shorter than the simulated horizon"};
  }
  Trajectory out;
  out.states.reserve(days);
  out.observations.reserve(days);
  CompartmentState x = initial;
  for (int i = 0; i < days; ++i) {
    x = step(x, params, actions[i], vax, rng, mode);
    out.observations.push_back(observe(x, params, rng, mode));
    out.states.push_back(x);
  }
  return out;
}

}  // namespace epicontrol

#endif
