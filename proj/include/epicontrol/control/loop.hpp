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

#ifndef EPICONTROL_CONTROL_LOOP_HPP
#define EPICONTROL_CONTROL_LOOP_HPP

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "epicontrol/control/config.hpp"
#include "epicontrol/control/generator.hpp"
#include "epicontrol/core/dynamics.hpp"
#include "epicontrol/core/observation.hpp"
#include "epicontrol/inference/smc2.hpp"
#include "epicontrol/io/json.hpp"
#include "epicontrol/planning/convergence.hpp"
#include "epicontrol/planning/qlearning.hpp"
#include "epicontrol/planning/threshold.hpp"
#include "epicontrol/random.hpp"
#include "epicontrol/reward.hpp"

namespace epicontrol {

/// Stream tags under a replicate's root seed.
namespace tags {
inline constexpr std::uint64_t kWorld = 1;
inline constexpr std::uint64_t kWarmStart = 2;
inline constexpr std::uint64_t kPlan = 3;
inline constexpr std::uint64_t kEnvironment = 4;
inline constexpr std::uint64_t kAssimilate = 5;
inline constexpr std::uint64_t kForecast = 6;
}  // namespace tags

struct DayRecord {
  int day = 0;
  std::int64_t y = 0;
  /// Latent ICU load of the counterfactual world.
  std::int64_t icu = 0;
  ActionLevel action;
  std::int64_t ell = 0;
  double reward = 0.0;
  bool crash = false;
  bool overridden = false;

  bool operator==(const DayRecord&) const = default;
};

struct BlockRecord {
  int block = 0;
  int start_day = 0;
  ActionLevel recommended;
  ActionLevel deployed;
  bool overridden = false;
  /// Planner output: thresholds, averaged Q row, or nothing.
  json artifact;
  /// 5/50/95% weighted quantiles of each beta at planning time.
  std::optional<std::array<std::array<double, 3>, kNumActions>> beta_quantiles;
};

struct DecisionTrace {
  PlannerKind planner = PlannerKind::kThreshold;
  std::uint64_t seed = 0;
  double kappa_soec = 0.0;
  std::vector<DayRecord> days;
  std::vector<BlockRecord> blocks;
  /// maxΔQ curves of every qlearn block.
  std::vector<ConvergenceReport> convergence;

  [[nodiscard]] double total_reward() const {
    double total = 0.0;
    for (const auto& d : days) {
      total += d.reward;
    }
    return total;
  }
};

struct Recommendation {
  ActionLevel action;
  json artifact;
  std::optional<std::array<std::array<double, 3>, kNumActions>> beta_quantiles;
};

/// The receding-horizon loop of one replicate.
/**
 * Each block calls recommend() once and deploy() once. The batch runner
 * accepts every recommendation; the session service may override it. All
 * randomness is derived from the replicate seed by (purpose, block) tags, so
 * the order of calls cannot change the outcome.
 */
class DecisionLoop {
 public:
  /// Warm-starts the posterior when the planner needs one, or always with
  /// `track_posterior`; pass `warm` to reuse a cloud already computed from the
  /// same seed and data. Tracking never changes the decisions of planners
  /// that ignore the posterior.
  DecisionLoop(RunConfig cfg, GeneratorSpec generator, std::optional<PosteriorCloud> warm = std::nullopt,
               bool track_posterior = false)
      : cfg_{std::move(cfg)}, root_{cfg_.seed} {
    cfg_.validate();
    if (generator.worlds.empty()) {
      throw ConfigError{"generator has no worlds"};
    }
    const int start = generator.start_day();
    generator.vax = generator.vax.padded(static_cast<std::size_t>(start + cfg_.t_horizon + cfg_.horizon + 2));
    if (cfg_.planner == PlannerKind::kHistorical &&
        generator.historical_actions.size() < static_cast<std::size_t>(cfg_.t_horizon)) {
      throw ConfigError{"historical planner needs " + std::to_string(cfg_.t_horizon) + " days of actions after the warm-up"};
    }
    gen_ = std::make_shared<const GeneratorSpec>(std::move(generator));
    bins_ = cfg_.bin_scheme();

    world_ = pick_world(0);
    x_ = world_.start;
    day_ = start;
    y_ = gen_->start_observation();
    for (auto a : gen_->warmup.actions) {
      streak_ = update_streak(streak_, a);
    }
    trace_.planner = cfg_.planner;
    trace_.seed = cfg_.seed;
    trace_.kappa_soec = cfg_.reward.kappa_soec;

    if (track_posterior || uses_posterior(cfg_.planner)) {
      cloud_ = warm ? std::move(*warm) : warm_cloud(cfg_, *gen_);
    }
    if (cfg_.planner == PlannerKind::kQLearn) {
      std::vector<std::int64_t> ys;
      for (const auto& o : gen_->warmup.observations) {
        ys.push_back(o.y);
      }
      q_ = warmup_table(ys, gen_->warmup.actions, bins_, cfg_.learn_schedule(), cfg_.reward);
    } else if (cfg_.planner == PlannerKind::kNaiveQ) {
      q_ = QTable{bins_.bins(), kNumActions};
    }
  }

  /// The warm-up cloud a loop with this seed and data starts from.
  static PosteriorCloud warm_cloud(const RunConfig& cfg, const GeneratorSpec& gen) {
    auto smc = cfg.smc_config();
    smc.initial = gen.warmup.initial;
    const auto vax = gen.vax.padded(static_cast<std::size_t>(gen.start_day() + cfg.t_horizon + cfg.horizon + 2));
    return warm_start(smc, gen.warmup.observations, gen.warmup.actions, vax,
                      RandomStream{cfg.seed}.derive(tags::kWarmStart));
  }

  [[nodiscard]] bool finished() const noexcept { return block_ >= cfg_.blocks; }
  [[nodiscard]] int block() const noexcept { return block_; }
  [[nodiscard]] int day() const noexcept { return day_; }
  [[nodiscard]] std::int64_t observed() const noexcept { return y_; }
  [[nodiscard]] const StreakCounter& streak() const noexcept { return streak_; }
  [[nodiscard]] const RunConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const DecisionTrace& trace() const noexcept { return trace_; }
  [[nodiscard]] const GeneratorSpec& generator() const noexcept { return *gen_; }
  [[nodiscard]] const std::optional<PosteriorCloud>& cloud() const noexcept { return cloud_; }
  [[nodiscard]] const std::optional<QTable>& qtable() const noexcept { return q_; }
  [[nodiscard]] const BinScheme& bins() const noexcept { return bins_; }
  [[nodiscard]] const World& world() const noexcept { return world_; }
  [[nodiscard]] const std::optional<Recommendation>& pending() const noexcept { return pending_; }
  [[nodiscard]] RandomStream root() const noexcept { return root_; }

  /// Plans the current block; repeated calls return the same recommendation.
  const Recommendation& recommend() {
    if (finished()) {
      throw WrongStatus{"decision horizon reached"};
    }
    if (!pending_) {
      pending_ = plan();
    }
    return *pending_;
  }

  /// Holds `action` for one block in the counterfactual world, then assimilates
  /// the block's observations.
  void deploy(ActionLevel action, bool overridden = false) {
    const auto& rec = recommend();
    BlockRecord record{block_, day_, rec.action, action, overridden, rec.artifact, rec.beta_quantiles};

    auto env = root_.derive({tags::kEnvironment, static_cast<std::uint64_t>(block_)});
    const int offset = block_ * cfg_.delta;
    const std::int64_t y_start = y_;
    double block_reward = 0.0;
    std::vector<std::pair<Observation, ActionLevel>> assimilate;
    for (int d = 0; d < cfg_.delta; ++d) {
      const ActionLevel a =
          cfg_.planner == PlannerKind::kHistorical && !overridden ? gen_->historical_actions[offset + d] : action;
      x_ = step(x_, world_.theta, a, gen_->vax, env);
      y_ = cfg_.sample_observations ? observe(x_, world_.theta, env).y : x_.icu_load();
      ++day_;
      streak_ = update_streak(streak_, a);
      const double r = reward(y_, a, streak_.ell, cfg_.reward);
      block_reward += r;
      trace_.days.push_back({day_, y_, x_.icu_load(), a, streak_.ell, r, y_ > cfg_.reward.crash_threshold, overridden});
      assimilate.push_back({Observation{y_, day_}, a});
    }

    if (cloud_) {
      const auto smc = cfg_.smc_config();
      for (const auto& [obs, a] : assimilate) {
        cloud_ = smc2_assimilate(std::move(*cloud_), obs, a, gen_->vax,
                                 root_.derive({tags::kAssimilate, static_cast<std::uint64_t>(obs.day)}), smc);
      }
    }
    if (cfg_.planner == PlannerKind::kNaiveQ) {
      const int g = bins_.bin_of(y_start);
      const int a = action.index();
      q_update(*q_, g, a, block_reward, bins_.bin_of(y_), cfg_.learn.alpha(q_->visits(g, a)), cfg_.reward.gamma);
      ++q_->visits(g, a);
      ++naive_updates_;
    }

    trace_.blocks.push_back(std::move(record));
    pending_.reset();
    ++block_;
    if (cfg_.redraw_world_per_block && !finished()) {
      world_.theta = pick_world(block_).theta;
    }
  }

  /// Number of temporal-difference updates made by the naive baseline.
  [[nodiscard]] int naive_updates() const noexcept { return naive_updates_; }

  [[nodiscard]] json snapshot() const;
  static DecisionLoop restore(const json& j);

 private:
  DecisionLoop() = default;

  [[nodiscard]] World pick_world(int block) const {
    auto rng = root_.derive({tags::kWorld, static_cast<std::uint64_t>(block)});
    const int n = static_cast<int>(gen_->worlds.size());
    return gen_->worlds[n == 1 ? 0 : rng.uniform_int(0, n - 1)];
  }

  Recommendation plan() {
    auto rng = root_.derive({tags::kPlan, static_cast<std::uint64_t>(block_)});
    Recommendation rec;
    if (cloud_) {
      rec.beta_quantiles = beta_quantiles(*cloud_);
    }
    switch (cfg_.planner) {
      case PlannerKind::kThreshold: {
        const auto grid = cfg_.threshold_grid();
        const auto plan = plan_block(*cloud_, grid, cfg_.k_draws, cfg_.horizon, y_, streak_, cfg_.reward, gen_->vax,
                                     rng, previous_index_);
        previous_index_ = plan.index;
        rec.action = threshold_policy(y_, plan.phi);
        rec.artifact = {{"thresholds", plan.phi}, {"index", plan.index}, {"value", plan.value},
                        {"candidates", plan.candidates}};
        break;
      }
      case PlannerKind::kQLearn: {
        auto draw_rng = rng.derive(0);
        const auto draws = sample_posterior(*cloud_, cfg_.k_draws, draw_rng);
        QTable start = *q_;
        start.reset_visits();
        const auto schedule = cfg_.learn_schedule();
        std::vector<QTable> tables;
        std::vector<std::vector<EpisodeDelta>> logs(draws.size());
        for (std::size_t k = 0; k < draws.size(); ++k) {
          auto train_rng = rng.derive({1, k});
          tables.push_back(train_one_draw({draws[k].first, draws[k].second, y_, streak_}, start, bins_, schedule,
                                          cfg_.reward, gen_->vax, train_rng, &logs[k]));
        }
        q_ = bayes_average(tables);
        auto report = replay_average(start, logs);
        report.converged_at = convergence_check(report, cfg_.convergence);
        const int g = bins_.bin_of(y_);
        rec.action = select_block_action(*q_, y_, bins_);
        std::vector<double> row;
        for (int a = 0; a < kNumActions; ++a) {
          row.push_back(q_->value(g, a));
        }
        rec.artifact = {{"bin", g}, {"q_row", row}, {"converged_at", report.converged_at ? json(*report.converged_at) : json()}};
        trace_.convergence.push_back(std::move(report));
        break;
      }
      case PlannerKind::kRandom:
        rec.action = ActionLevel::from_index(rng.uniform_int(0, kNumActions - 1));
        break;
      case PlannerKind::kHistorical:
        rec.action = gen_->historical_actions[block_ * cfg_.delta];
        break;
      case PlannerKind::kNaiveQ: {
        LearnSchedule schedule = cfg_.learn;
        schedule.episodes = cfg_.blocks;
        const int g = bins_.bin_of(y_);
        rec.action = rng.uniform() < schedule.epsilon(block_) ? ActionLevel::from_index(rng.uniform_int(0, kNumActions - 1))
                                                              : ActionLevel::from_index(q_->greedy(g));
        break;
      }
    }
    return rec;
  }

  RunConfig cfg_;
  RandomStream root_;
  std::shared_ptr<const GeneratorSpec> gen_;
  BinScheme bins_;
  World world_;
  CompartmentState x_;
  int day_ = 0;
  std::int64_t y_ = 0;
  StreakCounter streak_;
  int block_ = 0;
  std::optional<PosteriorCloud> cloud_;
  std::optional<QTable> q_;
  std::optional<TripleIndex> previous_index_;
  std::optional<Recommendation> pending_;
  DecisionTrace trace_;
  int naive_updates_ = 0;
};

/// Accepts every recommendation until the horizon is reached.
inline DecisionTrace run_decision_loop(const RunConfig& cfg, const GeneratorSpec& generator,
                                       std::optional<PosteriorCloud> warm = std::nullopt) {
  DecisionLoop loop{cfg, generator, std::move(warm)};
  while (!loop.finished()) {
    loop.deploy(loop.recommend().action);
  }
  return loop.trace();
}

// ---- serialization -------------------------------------------------------

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DayRecord, day, y, icu, action, ell, reward, crash, overridden)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(World, theta, start)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ObservedHistory, initial, observations, actions, vax)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GeneratorSpec, worlds, warmup, historical_actions, vax)

inline void to_json(json& j, const BlockRecord& b) {
  j = json{{"block", b.block},       {"start_day", b.start_day}, {"recommended", b.recommended},
           {"deployed", b.deployed}, {"overridden", b.overridden}, {"artifact", b.artifact}};
  j["beta_quantiles"] = b.beta_quantiles ? json(*b.beta_quantiles) : json();
}
inline void from_json(const json& j, BlockRecord& b) {
  j.at("block").get_to(b.block);
  j.at("start_day").get_to(b.start_day);
  j.at("recommended").get_to(b.recommended);
  j.at("deployed").get_to(b.deployed);
  j.at("overridden").get_to(b.overridden);
  b.artifact = j.at("artifact");
  if (!j.at("beta_quantiles").is_null()) {
    b.beta_quantiles = j.at("beta_quantiles").get<std::array<std::array<double, 3>, kNumActions>>();
  }
}

inline void to_json(json& j, const ConvergenceReport& r) {
  j = json{{"max_delta", r.max_delta}, {"policy_change_fraction", r.policy_change_fraction}};
  j["converged_at"] = r.converged_at ? json(*r.converged_at) : json();
}
inline void from_json(const json& j, ConvergenceReport& r) {
  j.at("max_delta").get_to(r.max_delta);
  j.at("policy_change_fraction").get_to(r.policy_change_fraction);
  if (!j.at("converged_at").is_null()) {
    r.converged_at = j.at("converged_at").get<int>();
  }
}

inline void to_json(json& j, const DecisionTrace& t) {
  j = json{{"planner", t.planner}, {"seed", t.seed},     {"kappa_soec", t.kappa_soec},
           {"days", t.days},       {"blocks", t.blocks}, {"convergence", t.convergence}};
}
inline void from_json(const json& j, DecisionTrace& t) {
  j.at("planner").get_to(t.planner);
  j.at("seed").get_to(t.seed);
  j.at("kappa_soec").get_to(t.kappa_soec);
  j.at("days").get_to(t.days);
  j.at("blocks").get_to(t.blocks);
  j.at("convergence").get_to(t.convergence);
}

inline void to_json(json& j, const Recommendation& r) {
  j = json{{"action", r.action}, {"artifact", r.artifact}};
  j["beta_quantiles"] = r.beta_quantiles ? json(*r.beta_quantiles) : json();
}
inline void from_json(const json& j, Recommendation& r) {
  j.at("action").get_to(r.action);
  r.artifact = j.at("artifact");
  if (!j.at("beta_quantiles").is_null()) {
    r.beta_quantiles = j.at("beta_quantiles").get<std::array<std::array<double, 3>, kNumActions>>();
  }
}

inline constexpr int kLoopFormatVersion = 1;

/// Complete loop state; restore(snapshot()) continues exactly where this loop is.
inline json DecisionLoop::snapshot() const {
  json j{{"format", "epicontrol-loop"},
         {"version", kLoopFormatVersion},
         {"config", cfg_},
         {"generator", *gen_},
         {"world", world_},
         {"x", x_},
         {"day", day_},
         {"y", y_},
         {"streak", streak_},
         {"block", block_},
         {"trace", trace_},
         {"naive_updates", naive_updates_}};
  j["cloud"] = cloud_ ? json(*cloud_) : json();
  j["q"] = q_ ? json(*q_) : json();
  j["previous_index"] = previous_index_ ? json(*previous_index_) : json();
  j["pending"] = pending_ ? json(*pending_) : json();
  return j;
}

inline DecisionLoop DecisionLoop::restore(const json& j) {
  if (j.value("format", std::string{}) != "epicontrol-loop" || j.value("version", 0) != kLoopFormatVersion) {
    throw Error{"not a version " + std::to_string(kLoopFormatVersion) + " loop checkpoint"};
  }
  DecisionLoop loop;
  loop.cfg_ = parse_config(j.at("config"));
  loop.root_ = RandomStream{loop.cfg_.seed};
  loop.gen_ = std::make_shared<const GeneratorSpec>(j.at("generator").get<GeneratorSpec>());
  loop.bins_ = loop.cfg_.bin_scheme();
  j.at("world").get_to(loop.world_);
  j.at("x").get_to(loop.x_);
  j.at("day").get_to(loop.day_);
  j.at("y").get_to(loop.y_);
  j.at("streak").get_to(loop.streak_);
  j.at("block").get_to(loop.block_);
  j.at("trace").get_to(loop.trace_);
  j.at("naive_updates").get_to(loop.naive_updates_);
  if (!j.at("cloud").is_null()) {
    loop.cloud_ = j.at("cloud").get<PosteriorCloud>();
  }
  if (!j.at("q").is_null()) {
    loop.q_ = j.at("q").get<QTable>();
  }
  if (!j.at("previous_index").is_null()) {
    loop.previous_index_ = j.at("previous_index").get<TripleIndex>();
  }
  if (!j.at("pending").is_null()) {
    loop.pending_ = j.at("pending").get<Recommendation>();
  }
  return loop;
}

}  // namespace epicontrol

#endif
