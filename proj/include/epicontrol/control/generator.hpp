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

#ifndef EPICONTROL_CONTROL_GENERATOR_HPP
#define EPICONTROL_CONTROL_GENERATOR_HPP

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "epicontrol/control/config.hpp"
#include "epicontrol/control/ingest.hpp"
#include "epicontrol/core/simulate.hpp"
#include "epicontrol/inference/particle_filter.hpp"
#include "epicontrol/inference/smc2.hpp"
#include "epicontrol/random.hpp"

namespace epicontrol {

/// An observed series in model time: observations[i] is day i + 1 and
/// actions[i] governs the transition into that day.
struct ObservedHistory {
  CompartmentState initial;
  std::vector<Observation> observations;
  std::vector<ActionLevel> actions;
  VaccinationStream vax;

  [[nodiscard]] std::size_t days() const noexcept { return observations.size(); }

  /// The first `days` days.
  [[nodiscard]] ObservedHistory head(std::size_t days) const {
    days = std::min(days, observations.size());
    ObservedHistory out = *this;
    out.observations.resize(days);
    out.actions.resize(days);
    return out;
  }
};

inline ObservedHistory to_history(const IngestedData& data, const CompartmentState& initial) {
  ObservedHistory h;
  h.initial = initial;
  h.vax = data.vax;
  for (std::size_t i = 0; i < data.days(); ++i) {
    h.observations.push_back({data.icu[i], initial.day + static_cast<int>(i) + 1});
    h.actions.push_back(data.actions[i]);
  }
  return h;
}

/// One counterfactual world: parameters and the latent state where decisions begin.
struct World {
  ModelParams theta;
  CompartmentState start;
};

/// Everything the decision loop needs to stand in for reality.
struct GeneratorSpec {
  std::vector<World> worlds;
  /// Observed data up to the first decision, used to warm-start inference.
  ObservedHistory warmup;
  /// Actions actually deployed after the warm-up, for the historical planner.
  std::vector<ActionLevel> historical_actions;
  /// Dose stream covering the warm-up, the decision window and any look-ahead.
  VaccinationStream vax;

  [[nodiscard]] int start_day() const {
    return warmup.observations.empty() ? warmup.initial.day : warmup.observations.back().day;
  }
  /// The last real observation before the first decision.
  [[nodiscard]] std::int64_t start_observation() const {
    return warmup.observations.empty() ? 0 : warmup.observations.back().y;
  }
};

/// Fits the posterior on the full series and builds `n_worlds` worlds.
/**
 * Parameters are drawn from the terminal cloud. Each world's starting state
 * is drawn from a bootstrap filter run under its parameters over the first
 * `cfg.warmup_days` days, so that the counterfactual resumes from a state
 * consistent with the warm-up data.
 */
inline GeneratorSpec fit_generator(const ObservedHistory& full, const RunConfig& cfg, RandomStream rng,
                                   int n_worlds = 32) {
  auto smc = cfg.smc_config();
  smc.initial = full.initial;
  const auto warmup_days = std::min<std::size_t>(cfg.warmup_days, full.days());
  const auto vax = full.vax.padded(full.initial.day + full.days() + cfg.t_horizon + cfg.horizon + 2);

  const auto cloud = warm_start(smc, full.observations, full.actions, vax, rng.derive(0));
  auto draw_rng = rng.derive(1);
  const auto draws = sample_posterior(cloud, n_worlds, draw_rng);

  GeneratorSpec spec;
  spec.vax = vax;
  spec.warmup = full.head(warmup_days);
  spec.historical_actions.assign(full.actions.begin() + static_cast<std::ptrdiff_t>(warmup_days), full.actions.end());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    World w{draws[i].first, full.initial};
    if (warmup_days > 0) {
      auto pf_rng = rng.derive({2, i});
      const std::span<const Observation> obs{full.observations.data(), warmup_days};
      const std::span<const ActionLevel> acts{full.actions.data(), warmup_days};
      const auto filtered = run_filter(full.initial, w.theta, obs, acts, vax, static_cast<std::size_t>(smc.n_x),
                                       pf_rng, smc.inner_ess_threshold);
      std::discrete_distribution<std::size_t> pick(filtered.weights.begin(), filtered.weights.end());
      w.start = filtered.particles[pick(pf_rng)];
    }
    spec.worlds.push_back(std::move(w));
  }
  return spec;
}

/// Ground truth for synthetic experiments.
struct SyntheticScenario {
  ModelParams truth;
  Trajectory trajectory;
  ObservedHistory history;
};

/// Actions cycling through levels 1, 2, 4, 3 in 30-day segments.
inline std::vector<ActionLevel> cycling_actions(int days) {
  constexpr int kLevels[] = {1, 2, 4, 3};
  std::vector<ActionLevel> out;
  for (int t = 0; t < days; ++t) {
    out.emplace_back(kLevels[(t / 30) % 4]);
  }
  return out;
}

/// Simulates `days` days under the default transmission rates and cycling actions.
/**
 * First doses start on day 90 and second doses on day 120, each at 0.15% of
 * the population per day.
 */
inline SyntheticScenario make_synthetic(const RunConfig& cfg, int days, RandomStream rng, bool vaccinate = true) {
  SyntheticScenario s;
  s.truth = cfg.model;
  s.truth.beta = ModelParams{}.beta;
  const auto initial = cfg.initial_state();
  const std::size_t span = static_cast<std::size_t>(initial.day + days + cfg.t_horizon + cfg.horizon + 2);
  std::vector<std::int64_t> first(span, 0);
  std::vector<std::int64_t> second(span, 0);
  if (vaccinate) {
    const auto rate = static_cast<std::int64_t>(0.0015 * static_cast<double>(cfg.model.population));
    for (std::size_t t = 90; t < span; ++t) {
      first[t] = rate;
      second[t] = t >= 120 ? rate : 0;
    }
  }
  VaccinationStream vax{std::move(first), std::move(second)};
  const auto actions = cycling_actions(days);
  s.trajectory = simulate(initial, s.truth, actions, vax, days, rng);
  s.history.initial = initial;
  s.history.observations = s.trajectory.observations;
  s.history.actions = actions;
  s.history.vax = std::move(vax);
  return s;
}

/// A single-world generator at the true parameters and the true state after the warm-up.
inline GeneratorSpec generator_from_truth(const SyntheticScenario& s, int warmup_days) {
  GeneratorSpec spec;
  spec.vax = s.history.vax;
  spec.warmup = s.history.head(static_cast<std::size_t>(warmup_days));
  spec.historical_actions.assign(s.history.actions.begin() + warmup_days, s.history.actions.end());
  const auto& start = warmup_days == 0 ? s.history.initial : s.trajectory.states[warmup_days - 1];
  spec.worlds.push_back({s.truth, start});
  return spec;
}

/// Generator for `cfg`: fitted to the CSVs in cfg.data_dir, or the synthetic
/// ground truth (seeded by cfg.seed) when no data folder is configured.
inline GeneratorSpec make_generator(const RunConfig& cfg) {
  const RandomStream root{cfg.seed};
  if (cfg.data_dir.empty()) {
    const auto scenario = make_synthetic(cfg, cfg.warmup_days + cfg.t_horizon, root.derive(0x5e));
    return generator_from_truth(scenario, cfg.warmup_days);
  }
  const auto data = ingest(cfg.data_dir);
  return fit_generator(to_history(data, cfg.initial_state()), cfg, root.derive(0xf1));
}

/// Pointwise summary of replayed ICU trajectories.
struct ReplayBands {
  std::vector<double> mean;
  std::vector<double> q05;
  std::vector<double> q95;
};

/// Replays `actions` from `initial` under the generator's parameter draws.
/**
 * Path i uses world i mod |worlds| and returns the latent ICU load H(t) on
 * every simulated day.
 */
inline ReplayBands validation_replay(const GeneratorSpec& generator, const CompartmentState& initial,
                                     std::span<const ActionLevel> actions, int n_paths, RandomStream rng,
                                     Propagation mode = Propagation::kStochastic) {
  if (n_paths < 1 || generator.worlds.empty()) {
    throw Error{"validation replay needs at least one path and one world"};
  }
  const int days = static_cast<int>(actions.size());
  std::vector<std::vector<double>> paths(days, std::vector<double>(n_paths));
  for (int i = 0; i < n_paths; ++i) {
    auto path_rng = rng.derive(static_cast<std::uint64_t>(i));
    const auto& theta = generator.worlds[i % generator.worlds.size()].theta;
    const auto traj = simulate(initial, theta, actions, generator.vax, days, path_rng, mode);
    for (int t = 0; t < days; ++t) {
      paths[t][i] = static_cast<double>(traj.states[t].icu_load());
    }
  }
  ReplayBands out;
  const std::vector<double> uniform(n_paths, 1.0);
  for (auto& day : paths) {
    double total = 0.0;
    for (double v : day) {
      total += v;
    }
    out.mean.push_back(total / n_paths);
    out.q05.push_back(weighted_quantile(day, uniform, 0.05));
    out.q95.push_back(weighted_quantile(day, uniform, 0.95));
  }
  return out;
}

}  // namespace epicontrol

#endif
