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

#ifndef EPICONTROL_REWARD_HPP
#define EPICONTROL_REWARD_HPP

#include <array>
#include <cmath>
#include <cstdint>

#include "epicontrol/core/types.hpp"

namespace epicontrol {

struct RewardConfig {
  double kappa_icu = 1.0;
  double kappa_soec = 0.2;
  /// ICU occupancy above which the crash penalty replaces the additive reward.
  std::int64_t crash_threshold = 6000;
  /// Magnitude of the crash penalty; the reward on a crash day is -crash_penalty.
  double crash_penalty = 1e5;
  double gamma = 0.95;
  /// Natural log in the level-2 cost; base-10 when false.
  bool natural_log = true;

  void validate() const {
    if (kappa_icu < 0.0 || kappa_soec < 0.0) {
      throw ConfigError{"reward weights must be nonnegative"};
    }
    if (!(crash_penalty > 0.0) || crash_threshold < 0) {
      throw ConfigError{"crash penalty must be positive and the threshold nonnegative"};
    }
    if (!(gamma >= 0.0 && gamma < 1.0)) {
      throw ConfigError{"discount must lie in [0, 1)"};
    }
  }
};

/// Socio-economic cost of holding `a` for a streak of `ell` days.
inline double intervention_cost(ActionLevel a, std::int64_t ell, bool natural_log = true) {
  const double days = static_cast<double>(ell);
  switch (a.value()) {
    case 1:
      return 0.0;
    case 2:
      return 50.0 * (natural_log ? std::log1p(days) : std::log10(1.0 + days));
    case 3:
      return 200.0 * days;
    case 4:
      return 800.0 * days;
    default:
      throw InvalidAction{"unknown action level"};
  }
}

inline double reward(std::int64_t y, ActionLevel a, std::int64_t ell, const RewardConfig& cfg) {
  if (y > cfg.crash_threshold) {
    return -cfg.crash_penalty;
  }
  return -cfg.kappa_icu * static_cast<double>(y) - cfg.kappa_soec * intervention_cost(a, ell, cfg.natural_log);
}

/// Consecutive-stringency counter.
/**
 * For every level L the counter keeps the number of consecutive days, up to
 * and including today, on which the deployed action was at least L. The
 * streak `ell` of today's action a is the run length for level a, and zero
 * when a is the lowest level.
 */
struct StreakCounter {
  ActionLevel current{1};
  std::int64_t ell = 0;
  std::array<std::int64_t, kNumActions> runs{};

  bool operator==(const StreakCounter&) const = default;
};

[[nodiscard]] inline StreakCounter update_streak(const StreakCounter& counter, ActionLevel next) {
  StreakCounter out = counter;
  out.current = next;
  for (int level = 1; level <= kNumActions; ++level) {
    auto& run = out.runs[level - 1];
    run = next.value() >= level ? run + 1 : 0;
  }
  out.ell = next.value() == 1 ? 0 : out.runs[next.index()];
  return out;
}

}  // namespace epicontrol

#endif
