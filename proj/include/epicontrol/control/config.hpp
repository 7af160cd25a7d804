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

#ifndef EPICONTROL_CONTROL_CONFIG_HPP
#define EPICONTROL_CONTROL_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "epicontrol/errors.hpp"
#include "epicontrol/inference/smc2.hpp"
#include "epicontrol/io/json.hpp"
#include "epicontrol/planning/convergence.hpp"
#include "epicontrol/planning/qlearning.hpp"
#include "epicontrol/planning/threshold.hpp"
#include "epicontrol/reward.hpp"

namespace epicontrol {

enum class PlannerKind { kThreshold, kQLearn, kRandom, kHistorical, kNaiveQ };

NLOHMANN_JSON_SERIALIZE_ENUM(PlannerKind, {
                                              {PlannerKind::kThreshold, "threshold"},
                                              {PlannerKind::kQLearn, "qlearn"},
                                              {PlannerKind::kRandom, "random"},
                                              {PlannerKind::kHistorical, "historical"},
                                              {PlannerKind::kNaiveQ, "naive_q"},
                                          })

inline std::string to_string(PlannerKind p) { return json(p).get<std::string>(); }

inline PlannerKind parse_planner(const std::string& name) {
  for (auto p : {PlannerKind::kThreshold, PlannerKind::kQLearn, PlannerKind::kRandom, PlannerKind::kHistorical,
                 PlannerKind::kNaiveQ}) {
    if (to_string(p) == name) {
      return p;
    }
  }
  throw ConfigError{"unknown planner '" + name + "'"};
}

/// True for planners that consult the posterior cloud.
inline bool uses_posterior(PlannerKind p) { return p == PlannerKind::kThreshold || p == PlannerKind::kQLearn; }

struct RunConfig {
  std::string preset = "desk";
  ModelParams model;
  std::int64_t initial_exposed = 100;
  std::int64_t initial_infectious = 100;

  int t_horizon = 120;
  int delta = 10;
  int blocks = 12;
  /// Look-ahead in days for both planners.
  int horizon = 50;
  /// Posterior draws per planning step.
  int k_draws = 8;
  /// Days of observed data assimilated before the first decision.
  int warmup_days = 60;

  Smc2Config smc;
  RewardConfig reward;
  LearnSchedule learn;
  ConvergenceCriteria convergence;
  int bins = 200;
  double bin_lo = 1.0;
  double bin_hi = 6000.0;
  int grid_points = 30;
  double grid_lo = 10.0;
  double grid_hi = 8000.0;
  int grid_margin = 2;

  PlannerKind planner = PlannerKind::kThreshold;
  int replicates = 10;
  std::uint64_t seed = 1;
  /// Sample counterfactual observations from the count model; report H(t) when false.
  bool sample_observations = true;
  /// Draw a new generator world at every block instead of once per replicate.
  bool redraw_world_per_block = false;
  /// Folder holding icu.csv, vaccinations.csv and npi_timeline.csv; synthetic data when empty.
  std::string data_dir;

  [[nodiscard]] CompartmentState initial_state() const {
    return seeded_state(model.population, initial_exposed, initial_infectious);
  }

  /// Sampler settings with the model constants and starting state filled in.
  [[nodiscard]] Smc2Config smc_config() const {
    Smc2Config c = smc;
    c.base = model;
    c.initial = initial_state();
    return c;
  }

  [[nodiscard]] LearnSchedule learn_schedule() const {
    LearnSchedule s = learn;
    s.slice_days = delta;
    s.horizon = horizon;
    return s;
  }

  [[nodiscard]] BinScheme bin_scheme() const { return BinScheme::geometric(bins, bin_lo, bin_hi); }

  [[nodiscard]] ThresholdGrid threshold_grid() const {
    return ThresholdGrid::geometric(grid_points, grid_lo, grid_hi, grid_margin);
  }

  void validate() const {
    model.validate();
    reward.validate();
    if (delta < 1 || blocks < 1 || blocks * delta != t_horizon) {
      throw ConfigError{"blocks * delta must equal t_horizon (" + std::to_string(blocks) + " * " +
                        std::to_string(delta) + " != " + std::to_string(t_horizon) + ")"};
    }
    if (horizon < delta || horizon % delta != 0) {
      throw ConfigError{"horizon must be a positive multiple of delta"};
    }
    learn_schedule().validate();
    if (k_draws < 1 || replicates < 1 || warmup_days < 0) {
      throw ConfigError{"k_draws and replicates must be >= 1, warmup_days >= 0"};
    }
    if (smc.n_theta < 1 || smc.n_x < 1 || smc.pmmh_moves < 0 || !(smc.rw_scale > 0.0)) {
      throw ConfigError{"invalid SMC settings"};
    }
    if (initial_exposed < 0 || initial_infectious < 0 ||
        initial_exposed + initial_infectious > model.population) {
      throw ConfigError{"initial seeds must fit in the population"};
    }
    if (bins < 1 || !(bin_hi > bin_lo) || grid_points < 3) {
      throw ConfigError{"invalid bin scheme or threshold grid"};
    }
  }
};

/// Desk-scale preset: small population, short horizon, few particles.
inline RunConfig desk_preset() {
  RunConfig c;
  c.preset = "desk";
  c.model.population = 100'000;
  c.initial_exposed = 100;
  c.initial_infectious = 100;
  c.t_horizon = 120;
  c.delta = 10;
  c.blocks = 12;
  c.horizon = 50;
  c.k_draws = 8;
  c.warmup_days = 60;
  c.smc.n_theta = 100;
  c.smc.n_x = 50;
  c.reward.crash_threshold = 5000;
  c.reward.crash_penalty = 1e6;
  c.learn.episodes = 2000;
  c.replicates = 10;
  return c;
}

/// Full-scale preset with the published constants.
inline RunConfig paper_preset() {
  RunConfig c;
  c.preset = "paper";
  c.model.population = 68'000'000;
  c.initial_exposed = 100;
  c.initial_infectious = 100;
  c.t_horizon = 300;
  c.delta = 10;
  c.blocks = 30;
  c.horizon = 100;
  c.k_draws = 25;
  c.warmup_days = 60;
  c.smc.n_theta = 500;
  c.smc.n_x = 200;
  c.reward.crash_threshold = 5000;
  c.reward.crash_penalty = 1e6;
  c.learn.episodes = 80'000;
  c.replicates = 10;
  return c;
}

inline RunConfig preset(const std::string& name) {
  if (name == "desk") {
    return desk_preset();
  }
  if (name == "paper") {
    return paper_preset();
  }
  throw ConfigError{"unknown preset '" + name + "'"};
}

inline void to_json(json& j, const RunConfig& c) {
  j = json{{"preset", c.preset},
           {"model", c.model},
           {"initial_exposed", c.initial_exposed},
           {"initial_infectious", c.initial_infectious},
           {"t_horizon", c.t_horizon},
           {"delta", c.delta},
           {"blocks", c.blocks},
           {"horizon", c.horizon},
           {"k_draws", c.k_draws},
           {"warmup_days", c.warmup_days},
           {"smc", c.smc},
           {"reward", c.reward},
           {"learn", c.learn},
           {"convergence", c.convergence},
           {"bins", c.bins},
           {"bin_lo", c.bin_lo},
           {"bin_hi", c.bin_hi},
           {"grid_points", c.grid_points},
           {"grid_lo", c.grid_lo},
           {"grid_hi", c.grid_hi},
           {"grid_margin", c.grid_margin},
           {"planner", c.planner},
           {"replicates", c.replicates},
           {"seed", c.seed},
           {"sample_observations", c.sample_observations},
           {"redraw_world_per_block", c.redraw_world_per_block},
           {"data_dir", c.data_dir}};
}

/// Overlays `j` on the preset it names (desk when absent).
inline void from_json(const json& j, RunConfig& c) {
  if (!j.is_object()) {
    throw ConfigError{"config must be a JSON object"};
  }
  const json known = RunConfig{};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw ConfigError{"unknown config key '" + key + "'"};
    }
  }
  c = preset(j.value("preset", std::string{"desk"}));
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) {
      j.at(key).get_to(field);
    }
  };
  if (j.contains("model")) {
    json merged = c.model;
    merged.merge_patch(j.at("model"));
    c.model = merged.get<ModelParams>();
  }
  read("initial_exposed", c.initial_exposed);
  read("initial_infectious", c.initial_infectious);
  read("t_horizon", c.t_horizon);
  read("delta", c.delta);
  read("blocks", c.blocks);
  read("horizon", c.horizon);
  read("k_draws", c.k_draws);
  read("warmup_days", c.warmup_days);
  if (j.contains("smc")) {
    json merged = c.smc;
    merged.merge_patch(j.at("smc"));
    from_json(merged, c.smc);
  }
  auto patch = [&](const char* key, auto& field) {
    if (j.contains(key)) {
      json merged = field;
      merged.merge_patch(j.at(key));
      merged.get_to(field);
    }
  };
  patch("reward", c.reward);
  patch("learn", c.learn);
  patch("convergence", c.convergence);
  read("bins", c.bins);
  read("bin_lo", c.bin_lo);
  read("bin_hi", c.bin_hi);
  read("grid_points", c.grid_points);
  read("grid_lo", c.grid_lo);
  read("grid_hi", c.grid_hi);
  read("grid_margin", c.grid_margin);
  if (j.contains("planner")) {
    c.planner = parse_planner(j.at("planner").get<std::string>());
  }
  read("replicates", c.replicates);
  read("seed", c.seed);
  read("sample_observations", c.sample_observations);
  read("redraw_world_per_block", c.redraw_world_per_block);
  read("data_dir", c.data_dir);
}

inline RunConfig parse_config(const json& j) {
  RunConfig c;
  try {
    c = j.get<RunConfig>();
  } catch (const json::exception& e) {
    throw ConfigError{std::string{"invalid config: "} + e.what()};
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError{"cannot open config file " + path};
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError{"config " + path + " is not valid JSON: " + e.what()};
  }
  return parse_config(j);
}

}  // namespace epicontrol

#endif
