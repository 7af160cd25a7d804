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

#ifndef EPICONTROL_PLANNING_ROLLOUT_HPP
#define EPICONTROL_PLANNING_ROLLOUT_HPP

#include <cstdint>
#include <vector>

#include "epicontrol/core/dynamics.hpp"
#include "epicontrol/core/observation.hpp"
#include "epicontrol/core/types.hpp"
#include "epicontrol/random.hpp"
#include "epicontrol/reward.hpp"

namespace epicontrol {

/// Where a look-ahead simulation starts: a posterior draw anchored to the
/// real observation and the real streak history at the decision time.
struct RolloutStart {
  ModelParams theta;
  CompartmentState state;
  std::int64_t observed = 0;
  StreakCounter streak;
};

struct RolloutRecord {
  double discounted_return = 0.0;
  /// Latent ICU load on each simulated day after the start.
  std::vector<std::int64_t> icu_load;
};

/// Discounted return of a feedback policy `policy(y) -> ActionLevel` over
/// `horizon` days. Day 0 is scored on the anchored observation; each later
/// day on the simulated one.
template <class Policy>
RolloutRecord policy_rollout(const RolloutStart& start, Policy&& policy, int horizon, const RewardConfig& cfg,
                             const VaccinationStream& vax, RandomStream& rng,
                             Propagation mode = Propagation::kStochastic, bool record_path = false) {
  RolloutRecord out;
  if (record_path) {
    out.icu_load.reserve(horizon);
  }
  CompartmentState x = start.state;
  std::int64_t y = start.observed;
  StreakCounter streak = start.streak;
  double discount = 1.0;
  for (int day = 0; day < horizon; ++day) {
    const ActionLevel a = policy(y);
    streak = update_streak(streak, a);
    out.discounted_return += discount * reward(y, a, streak.ell, cfg);
    discount *= cfg.gamma;
    if (day + 1 < horizon || record_path) {
      x = step(x, start.theta, a, vax, rng, mode);
      y = observe(x, start.theta, rng, mode).y;
      if (record_path) {
        out.icu_load.push_back(x.icu_load());
      }
    }
  }
  return out;
}

}  // namespace epicontrol

#endif
