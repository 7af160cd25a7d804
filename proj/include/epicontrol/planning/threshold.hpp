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

#ifndef EPICONTROL_PLANNING_THRESHOLD_HPP
#define EPICONTROL_PLANNING_THRESHOLD_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "epicontrol/core/types.hpp"
#include "epicontrol/inference/smc2.hpp"
#include "epicontrol/planning/rollout.hpp"
#include "epicontrol/random.hpp"
#include "epicontrol/reward.hpp"

namespace epicontrol {

/// ICU thresholds 0 < tau1 < tau2 < tau3 separating the four action levels.
struct ThresholdTriple {
  std::array<std::int64_t, 3> tau{};

  ThresholdTriple() = default;

  ThresholdTriple(std::int64_t t1, std::int64_t t2, std::int64_t t3) : tau{t1, t2, t3} {
    if (!(0 < t1 && t1 < t2 && t2 < t3)) {
      throw ConfigError{"thresholds must satisfy 0 < tau1 < tau2 < tau3"};
    }
  }

  bool operator==(const ThresholdTriple&) const = default;
};

/// Left-closed bins: level 1 below tau1, level 4 at or above tau3.
inline ActionLevel threshold_policy(std::int64_t y, const ThresholdTriple& phi) {
  int level = 1;
  for (auto t : phi.tau) {
    level += y >= t ? 1 : 0;
  }
  return ActionLevel{level};
}

using TripleIndex = std::array<int, 3>;

/// Candidate thresholds: a geometric axis rounded to integers.
struct ThresholdGrid {
  std::vector<std::int64_t> axis;
  /// Neighborhood half-width, in axis indices, for refinement searches.
  int margin = 2;

  static ThresholdGrid geometric(int points = 30, double lo = 10.0, double hi = 8000.0, int margin = 2) {
    if (points < 3 || !(lo > 0.0) || !(hi > lo)) {
      throw ConfigError{"threshold grid needs >= 3 points on a positive increasing range"};
    }
    ThresholdGrid grid;
    grid.margin = margin;
    const double ratio = std::pow(hi / lo, 1.0 / (points - 1));
    for (int i = 0; i < points; ++i) {
      const double v = i == points - 1 ? hi : lo * std::pow(ratio, i);
      const auto rounded = static_cast<std::int64_t>(std::llround(v));
      if (grid.axis.empty() || rounded > grid.axis.back()) {
        grid.axis.push_back(rounded);
      }
    }
    return grid;
  }

  [[nodiscard]] ThresholdTriple triple(const TripleIndex& idx) const {
    return {axis[idx[0]], axis[idx[1]], axis[idx[2]]};
  }

  /// Every strictly increasing index triple, lexicographically ordered.
  [[nodiscard]] std::vector<TripleIndex> all_candidates() const {
    std::vector<TripleIndex> out;
    const int n = static_cast<int>(axis.size());
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        for (int k = j + 1; k < n; ++k) {
          out.push_back({i, j, k});
        }
      }
    }
    return out;
  }

  /// Strictly increasing triples within `margin` indices of `center` per threshold.
  [[nodiscard]] std::vector<TripleIndex> neighborhood(const TripleIndex& center) const {
    std::vector<TripleIndex> out;
    const int n = static_cast<int>(axis.size());
    auto range = [&](int c) { return std::pair{std::max(0, c - margin), std::min(n - 1, c + margin)}; };
    const auto [lo0, hi0] = range(center[0]);
    const auto [lo1, hi1] = range(center[1]);
    const auto [lo2, hi2] = range(center[2]);
    for (int i = lo0; i <= hi0; ++i) {
      for (int j = std::max(lo1, i + 1); j <= hi1; ++j) {
        for (int k = std::max(lo2, j + 1); k <= hi2; ++k) {
          out.push_back({i, j, k});
        }
      }
    }
    return out;
  }
};

/// Discounted return of the threshold policy from one posterior draw.
inline double rollout_cost(const RolloutStart& start, const ThresholdTriple& phi, int horizon,
                           const RewardConfig& cfg, const VaccinationStream& vax, RandomStream& rng,
                           Propagation mode = Propagation::kStochastic) {
  if (horizon < 1) {
    throw Error{"rollout horizon must be >= 1"};
  }
  return policy_rollout(
             start, [&](std::int64_t y) { return threshold_policy(y, phi); }, horizon, cfg, vax, rng, mode)
      .discounted_return;
}

struct ThresholdPlan {
  TripleIndex index{};
  ThresholdTriple phi;
  /// Monte Carlo mean return of the chosen triple.
  double value = 0.0;
  std::size_t candidates = 0;
};

/// Grid search over `candidates` given K posterior starts.
/**
 * `score(start, phi, stream)` returns one rollout's return. Every candidate
 * is scored on the same K random streams (common random numbers). Ties go
 * to the lexicographically smallest index triple.
 */
template <class Score>
ThresholdPlan search_candidates(std::span<const RolloutStart> starts, const ThresholdGrid& grid,
                                std::span<const TripleIndex> candidates, const RandomStream& rng, Score&& score) {
  if (candidates.empty() || starts.empty()) {
    throw Error{"grid search needs at least one candidate and one posterior draw"};
  }
  ThresholdPlan best;
  best.value = -std::numeric_limits<double>::infinity();
  best.candidates = candidates.size();
  bool have_best = false;
  for (const auto& idx : candidates) {
    const auto phi = grid.triple(idx);
    double total = 0.0;
    for (std::size_t k = 0; k < starts.size(); ++k) {
      auto stream = rng.derive(static_cast<std::uint64_t>(k));
      total += score(starts[k], phi, stream);
    }
    const double mean = total / static_cast<double>(starts.size());
    if (!have_best || mean > best.value || (mean == best.value && idx < best.index)) {
      best.value = mean;
      best.index = idx;
      best.phi = phi;
      have_best = true;
    }
  }
  return best;
}

inline ThresholdPlan evaluate_candidates(std::span<const RolloutStart> starts, const ThresholdGrid& grid,
                                         std::span<const TripleIndex> candidates, int horizon,
                                         const RewardConfig& cfg, const VaccinationStream& vax,
                                         const RandomStream& rng, Propagation mode = Propagation::kStochastic) {
  return search_candidates(starts, grid, candidates, rng,
                           [&](const RolloutStart& start, const ThresholdTriple& phi, RandomStream& stream) {
                             return rollout_cost(start, phi, horizon, cfg, vax, stream, mode);
                           });
}

/// Chooses the threshold policy for one decision block.
/**
 * Draws K (parameters, state) pairs from the cloud, anchors each at the
 * real observation and streak, and searches the full grid, or only the
 * neighborhood of `previous` when given.
 */
inline ThresholdPlan plan_block(const PosteriorCloud& cloud, const ThresholdGrid& grid, int k, int horizon,
                                std::int64_t observed, const StreakCounter& streak, const RewardConfig& cfg,
                                const VaccinationStream& vax, const RandomStream& rng,
                                const std::optional<TripleIndex>& previous = std::nullopt,
                                Propagation mode = Propagation::kStochastic) {
  auto draw_rng = rng.derive(0);
  const auto draws = sample_posterior(cloud, k, draw_rng);
  std::vector<RolloutStart> starts;
  starts.reserve(draws.size());
  for (const auto& [theta, x] : draws) {
    starts.push_back({theta, x, observed, streak});
  }
  const auto candidates = previous ? grid.neighborhood(*previous) : grid.all_candidates();
  return evaluate_candidates(starts, grid, candidates, horizon, cfg, vax, rng.derive(1), mode);
}

}  // namespace epicontrol

#endif
