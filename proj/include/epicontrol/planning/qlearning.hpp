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

#ifndef EPICONTROL_PLANNING_QLEARNING_HPP
#define EPICONTROL_PLANNING_QLEARNING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "epicontrol/core/dynamics.hpp"
#include "epicontrol/core/observation.hpp"
#include "epicontrol/core/types.hpp"
#include "epicontrol/planning/rollout.hpp"
#include "epicontrol/random.hpp"
#include "epicontrol/reward.hpp"

namespace epicontrol {

/// Partition of ICU counts into G bins [THR_{g-1}, THR_g) with THR_0 = 0 and THR_G = infinity.
struct BinScheme {
  /// THR_1 < ... < THR_{G-1}.
  std::vector<double> thresholds;

  static BinScheme geometric(int bins = 200, double lo = 1.0, double hi = 6000.0) {
    if (bins < 1) {
      throw ConfigError{"bin scheme needs at least one bin"};
    }
    BinScheme scheme;
    const int cuts = bins - 1;
    for (int i = 0; i < cuts; ++i) {
      scheme.thresholds.push_back(cuts == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (cuts - 1)));
    }
    return scheme;
  }

  [[nodiscard]] int bins() const noexcept { return static_cast<int>(thresholds.size()) + 1; }

  /// Zero-based bin of `y`.
  [[nodiscard]] int bin_of(std::int64_t y) const {
    const auto it = std::upper_bound(thresholds.begin(), thresholds.end(), static_cast<double>(y));
    return static_cast<int>(it - thresholds.begin());
  }
};

/// Tabular action values over (bin, action) with per-cell visit counts.
class QTable {
 public:
  QTable() = default;
  QTable(int bins, int actions) : bins_{bins}, actions_{actions}, values_(bins * actions, 0.0), visits_(bins * actions, 0) {}

  [[nodiscard]] int bins() const noexcept { return bins_; }
  [[nodiscard]] int actions() const noexcept { return actions_; }

  [[nodiscard]] double value(int g, int a) const { return values_[g * actions_ + a]; }
  double& value(int g, int a) { return values_[g * actions_ + a]; }
  [[nodiscard]] std::int64_t visits(int g, int a) const { return visits_[g * actions_ + a]; }
  std::int64_t& visits(int g, int a) { return visits_[g * actions_ + a]; }

  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::span<double> values() noexcept { return values_; }
  [[nodiscard]] std::span<const std::int64_t> visit_counts() const noexcept { return visits_; }

  [[nodiscard]] double max_value(int g) const {
    const auto row = values_.begin() + g * actions_;
    return *std::max_element(row, row + actions_);
  }

  /// Greedy action index in bin g; ties go to the lowest index.
  [[nodiscard]] int greedy(int g) const {
    int best = 0;
    for (int a = 1; a < actions_; ++a) {
      if (value(g, a) > value(g, best)) {
        best = a;
      }
    }
    return best;
  }

  void reset_visits() { std::fill(visits_.begin(), visits_.end(), 0); }

  [[nodiscard]] bool same_shape(const QTable& other) const noexcept {
    return bins_ == other.bins_ && actions_ == other.actions_;
  }

  bool operator==(const QTable&) const = default;

 private:
  int bins_ = 0;
  int actions_ = 0;
  std::vector<double> values_;
  std::vector<std::int64_t> visits_;
};

/// Exploration and step-size schedule of the slice-level learner.
struct LearnSchedule {
  double eps0 = 0.20;
  double eps_min = 0.05;
  /// Fraction of the episodes over which epsilon decays linearly.
  double decay_fraction = 0.8;
  double alpha_c = 45.0;
  /// Index alpha by per-cell visits; by episode otherwise.
  bool alpha_per_visit = true;
  int episodes = 2000;
  /// Slice length (the decision period, in days).
  int slice_days = 10;
  /// Look-ahead horizon in days; a multiple of slice_days.
  int horizon = 100;

  [[nodiscard]] int slices() const { return horizon / slice_days; }

  void validate() const {
    if (slice_days < 1 || horizon < slice_days || horizon % slice_days != 0) {
      throw ConfigError{"learning horizon must be a positive multiple of the slice length"};
    }
    if (!(eps_min >= 0.0 && eps_min <= eps0 && eps0 <= 1.0)) {
      throw ConfigError{"epsilon schedule must satisfy 0 <= eps_min <= eps0 <= 1"};
    }
    if (!(alpha_c > 0.0) || episodes < 0) {
      throw ConfigError{"alpha constant must be positive and episodes nonnegative"};
    }
  }

  /// Exploration rate of zero-based episode e.
  [[nodiscard]] double epsilon(int e) const {
    const double span = decay_fraction * episodes;
    if (span <= 0.0 || e >= span) {
      return eps_min;
    }
    return eps0 + (eps_min - eps0) * (static_cast<double>(e) / span);
  }

  /// C / (C + k).
  [[nodiscard]] double alpha(std::int64_t k) const { return alpha_c / (alpha_c + static_cast<double>(k)); }
};

/// Q(g,a) += alpha (R + gamma max_a' Q(g',a') - Q(g,a)); no other cell changes.
inline void q_update(QTable& q, int g, int a, double slice_return, int g_next, double alpha, double gamma) {
  const double target = slice_return + gamma * q.max_value(g_next);
  q.value(g, a) += alpha * (target - q.value(g, a));
}

/// Undiscounted sum of the daily rewards of one slice.
inline double slice_reward(std::span<const double> daily, int slice_days) {
  if (daily.size() != static_cast<std::size_t>(slice_days)) {
    throw Error{"slice has " + std::to_string(daily.size()) + " rewards, expected " + std::to_string(slice_days)};
  }
  double total = 0.0;
  for (double r : daily) {
    total += r;
  }
  return total;
}

inline QTable bayes_average(std::span<const QTable> tables) {
  if (tables.empty()) {
    throw Error{"cannot average zero tables"};
  }
  QTable out(tables[0].bins(), tables[0].actions());
  for (const auto& t : tables) {
    if (!t.same_shape(out)) {
      throw Error{"Q-table shape mismatch"};
    }
    for (int g = 0; g < out.bins(); ++g) {
      for (int a = 0; a < out.actions(); ++a) {
        out.value(g, a) += t.value(g, a);
        out.visits(g, a) += t.visits(g, a);
      }
    }
  }
  const double k = static_cast<double>(tables.size());
  for (auto& v : out.values()) {
    v /= k;
  }
  for (int g = 0; g < out.bins(); ++g) {
    for (int a = 0; a < out.actions(); ++a) {
      out.visits(g, a) /= static_cast<std::int64_t>(tables.size());
    }
  }
  return out;
}

inline ActionLevel select_block_action(const QTable& q_bar, std::int64_t observed, const BinScheme& scheme) {
  return ActionLevel::from_index(q_bar.greedy(scheme.bin_of(observed)));
}

/// Cells changed by one episode.
struct EpisodeDelta {
  std::vector<std::pair<int, double>> cells;  // (g * actions + a, change)
};

/// A slice-level environment for the learner.
/**
 * `reset(rng)` starts an episode and returns the initial bin;
 * `advance(action_index, rng)` holds the action for one slice and returns
 * (slice return, next bin).
 */
template <class Env>
concept SliceEnvironment = requires(Env env, RandomStream& rng, int a) {
  { env.reset(rng) } -> std::convertible_to<int>;
  { env.advance(a, rng) } -> std::convertible_to<std::pair<double, int>>;
};

/// Runs `schedule.episodes` epsilon-greedy episodes of `schedule.slices()`
/// slices each, chaining the table across episodes. Per-episode cell changes
/// are appended to `log` when given.
template <SliceEnvironment Env>
QTable train_episodes(Env& env, QTable q, const LearnSchedule& schedule, double gamma, RandomStream& rng,
                      std::vector<EpisodeDelta>* log = nullptr) {
  schedule.validate();
  const int actions = q.actions();
  const int slices = schedule.slices();
  for (int e = 0; e < schedule.episodes; ++e) {
    const double eps = schedule.epsilon(e);
    EpisodeDelta delta;
    int g = env.reset(rng);
    for (int m = 0; m < slices; ++m) {
      const int a = rng.uniform() < eps ? rng.uniform_int(0, actions - 1) : q.greedy(g);
      const auto [slice_return, g_next] = env.advance(a, rng);
      const double alpha = schedule.alpha(schedule.alpha_per_visit ? q.visits(g, a) : e);
      const double before = q.value(g, a);
      q_update(q, g, a, slice_return, g_next, alpha, gamma);
      ++q.visits(g, a);
      if (log != nullptr) {
        delta.cells.emplace_back(g * actions + a, q.value(g, a) - before);
      }
      g = g_next;
    }
    if (log != nullptr) {
      log->push_back(std::move(delta));
    }
  }
  return q;
}

/// SEIR-VU look-ahead from one posterior draw, in slices of constant action.
class SeirvuSliceEnv {
 public:
  SeirvuSliceEnv(RolloutStart start, const BinScheme& bins, const RewardConfig& reward_cfg,
                 const VaccinationStream& vax, int slice_days, Propagation mode = Propagation::kStochastic)
      : start_{std::move(start)}, bins_{bins}, reward_{reward_cfg}, vax_{vax}, slice_days_{slice_days}, mode_{mode} {}

  int reset(RandomStream& /*rng*/) {
    x_ = start_.state;
    y_ = start_.observed;
    streak_ = start_.streak;
    return bins_.bin_of(y_);
  }

  std::pair<double, int> advance(int action_index, RandomStream& rng) {
    const auto a = ActionLevel::from_index(action_index);
    double total = 0.0;
    for (int d = 0; d < slice_days_; ++d) {
      streak_ = update_streak(streak_, a);
      total += reward(y_, a, streak_.ell, reward_);
      x_ = step(x_, start_.theta, a, vax_, rng, mode_);
      y_ = observe(x_, start_.theta, rng, mode_).y;
    }
    return {total, bins_.bin_of(y_)};
  }

 private:
  RolloutStart start_;
  const BinScheme& bins_;
  const RewardConfig& reward_;
  const VaccinationStream& vax_;
  int slice_days_;
  Propagation mode_;
  CompartmentState x_;
  std::int64_t y_ = 0;
  StreakCounter streak_;
};

/// Trains one posterior draw's table from `q_start`.
inline QTable train_one_draw(const RolloutStart& start, const QTable& q_start, const BinScheme& bins,
                             const LearnSchedule& schedule, const RewardConfig& reward_cfg,
                             const VaccinationStream& vax, RandomStream& rng,
                             std::vector<EpisodeDelta>* log = nullptr, Propagation mode = Propagation::kStochastic) {
  SeirvuSliceEnv env{start, bins, reward_cfg, vax, schedule.slice_days, mode};
  return train_episodes(env, q_start, schedule, reward_cfg.gamma, rng, log);
}

/// Slice-level updates along an observed history, used to seed the first block.
/**
 * `observed[i]` and `actions[i]` belong to consecutive days. Each slice of
 * `slice_days` days is credited to the action in force on its first day;
 * the streak follows the actions actually deployed.
 */
inline QTable warmup_table(std::span<const std::int64_t> observed, std::span<const ActionLevel> actions,
                           const BinScheme& bins, const LearnSchedule& schedule, const RewardConfig& reward_cfg) {
  QTable q(bins.bins(), kNumActions);
  StreakCounter streak;
  const std::size_t n = std::min(observed.size(), actions.size());
  const auto slice = static_cast<std::size_t>(schedule.slice_days);
  for (std::size_t s = 0; s + slice < n; s += slice) {
    double total = 0.0;
    for (std::size_t t = s; t < s + slice; ++t) {
      streak = update_streak(streak, actions[t]);
      total += reward(observed[t], actions[t], streak.ell, reward_cfg);
    }
    const int g = bins.bin_of(observed[s]);
    const int a = actions[s].index();
    q_update(q, g, a, total, bins.bin_of(observed[s + slice]), schedule.alpha(q.visits(g, a)), reward_cfg.gamma);
    ++q.visits(g, a);
  }
  return q;
}

}  // namespace epicontrol

#endif
