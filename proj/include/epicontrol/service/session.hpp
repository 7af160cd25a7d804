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

#ifndef EPICONTROL_SERVICE_SESSION_HPP
#define EPICONTROL_SERVICE_SESSION_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "epicontrol/control/config.hpp"
#include "epicontrol/control/generator.hpp"
#include "epicontrol/control/loop.hpp"
#include "epicontrol/errors.hpp"
#include "epicontrol/planning/rollout.hpp"

namespace epicontrol {

enum class SessionStatus { kAwaitingDecision, kAdvancing, kFinished };

NLOHMANN_JSON_SERIALIZE_ENUM(SessionStatus, {
                                                {SessionStatus::kAwaitingDecision, "awaiting_decision"},
                                                {SessionStatus::kAdvancing, "advancing"},
                                                {SessionStatus::kFinished, "finished"},
                                            })

struct ActionForecast {
  ActionLevel action;
  /// Per simulated day: 5%, 50% and 95% of the latent ICU load across draws.
  std::vector<std::array<double, 3>> icu_quantiles;
  double expected_return = 0.0;
};

struct WhatIfForecast {
  int block = 0;
  int k = 0;
  std::vector<ActionForecast> actions;
};

inline void to_json(json& j, const ActionForecast& f) {
  j = json{{"action", f.action}, {"icu_quantiles", f.icu_quantiles}, {"expected_return", f.expected_return}};
}
inline void to_json(json& j, const WhatIfForecast& w) {
  j = json{{"block", w.block}, {"k", w.k}, {"actions", w.actions}};
}

/// K fixed-action rollouts per action from the loop's current posterior.
/**
 * Every action is scored on the same K draws and random streams. Reads the
 * loop only.
 */
inline WhatIfForecast whatif_forecast(const DecisionLoop& loop) {
  if (!loop.cloud()) {
    throw WrongStatus{"session has no posterior to forecast from"};
  }
  const auto& cfg = loop.config();
  const auto base = loop.root().derive({tags::kForecast, static_cast<std::uint64_t>(loop.block())});
  auto draw_rng = base.derive(0);
  const auto draws = sample_posterior(*loop.cloud(), cfg.k_draws, draw_rng);
  WhatIfForecast out;
  out.block = loop.block();
  out.k = cfg.k_draws;
  const std::vector<double> uniform(draws.size(), 1.0);
  for (int ai = 0; ai < kNumActions; ++ai) {
    const auto a = ActionLevel::from_index(ai);
    ActionForecast f{a, {}, 0.0};
    std::vector<std::vector<double>> paths(cfg.horizon, std::vector<double>(draws.size()));
    for (std::size_t k = 0; k < draws.size(); ++k) {
      auto rng = base.derive({1, k});
      const RolloutStart start{draws[k].first, draws[k].second, loop.observed(), loop.streak()};
      const auto rec = policy_rollout(start, [a](std::int64_t) { return a; }, cfg.horizon, cfg.reward,
                                      loop.generator().vax, rng, Propagation::kStochastic, true);
      f.expected_return += rec.discounted_return / static_cast<double>(draws.size());
      for (int t = 0; t < cfg.horizon; ++t) {
        paths[t][k] = static_cast<double>(rec.icu_load[t]);
      }
    }
    for (const auto& day : paths) {
      f.icu_quantiles.push_back({weighted_quantile(day, uniform, 0.05), weighted_quantile(day, uniform, 0.5),
                                 weighted_quantile(day, uniform, 0.95)});
    }
    out.actions.push_back(std::move(f));
  }
  return out;
}

/// Operator choice for one block.
using StepChoice = std::variant<std::monostate, ActionLevel>;  // monostate: accept the recommendation

inline StepChoice parse_step_choice(const json& body) {
  if (!body.is_object() || !body.contains("action")) {
    throw InvalidAction{"step body must be {\"action\": \"recommended\"} or {\"action\": <1..4>}"};
  }
  const auto& a = body.at("action");
  if (a.is_string() && a.get<std::string>() == "recommended") {
    return std::monostate{};
  }
  if (a.is_number_integer()) {
    return ActionLevel{a.get<int>()};
  }
  throw InvalidAction{"action must be \"recommended\" or an integer level"};
}

class Session {
 public:
  Session(std::string id, DecisionLoop loop) : id_{std::move(id)}, loop_{std::move(loop)} { refresh(); }

  [[nodiscard]] const std::string& id() const noexcept { return id_; }

  [[nodiscard]] json view() const {
    std::shared_lock lock{mutex_};
    return view_locked();
  }

  json step(const StepChoice& choice, const std::function<void(const Session&)>& after = {}) {
    std::unique_lock lock{mutex_};
    if (status_ != SessionStatus::kAwaitingDecision) {
      throw WrongStatus{"session " + id_ + " is not awaiting a decision"};
    }
    status_ = SessionStatus::kAdvancing;
    try {
      DecisionLoop next = loop_;
      const ActionLevel recommended = next.recommend().action;
      const ActionLevel chosen = std::holds_alternative<ActionLevel>(choice) ? std::get<ActionLevel>(choice) : recommended;
      next.deploy(chosen, chosen != recommended);
      std::optional<WhatIfForecast> forecast;
      if (!next.finished()) {
        next.recommend();
        forecast = whatif_forecast(next);
      }
      loop_ = std::move(next);
      forecast_ = std::move(forecast);
    } catch (...) {
      status_ = SessionStatus::kAwaitingDecision;
      throw;
    }
    status_ = loop_.finished() ? SessionStatus::kFinished : SessionStatus::kAwaitingDecision;
    if (after) {
      after(*this);
    }
    return view_locked();
  }

  [[nodiscard]] WhatIfForecast whatif() const {
    std::shared_lock lock{mutex_};
    if (status_ != SessionStatus::kAwaitingDecision || !forecast_) {
      throw WrongStatus{"what-if forecasts are only available while awaiting a decision"};
    }
    return *forecast_;
  }

  [[nodiscard]] json qtable() const {
    std::shared_lock lock{mutex_};
    const auto& q = loop_.qtable();
    if (!q) {
      throw NotFound{"planner '" + to_string(loop_.config().planner) + "' keeps no Q-table"};
    }
    json j = *q;
    j["thresholds"] = loop_.bins().thresholds;
    return j;
  }

  /// Loop state for checkpoints; safe against a concurrent step.
  [[nodiscard]] json checkpoint() const { return loop_.snapshot(); }

  [[nodiscard]] DecisionTrace trace() const {
    std::shared_lock lock{mutex_};
    return loop_.trace();
  }

 private:
  void refresh() {
    if (loop_.finished()) {
      status_ = SessionStatus::kFinished;
      return;
    }
    loop_.recommend();
    forecast_ = whatif_forecast(loop_);
    status_ = SessionStatus::kAwaitingDecision;
  }

  json view_locked() const {
    const auto& trace = loop_.trace();
    const auto& cfg = loop_.config();
    json j{{"id", id_},
           {"status", status_},
           {"planner", to_string(cfg.planner)},
           {"block", loop_.block()},
           {"blocks", cfg.blocks},
           {"delta", cfg.delta},
           {"t_horizon", cfg.t_horizon},
           {"day", loop_.day()},
           {"decision_day", loop_.day() - loop_.generator().start_day()},
           {"observed", loop_.observed()},
           {"trace", {{"days", trace.days}, {"blocks", trace.blocks}}},
           {"total_reward", trace.total_reward()}};
    j["beta_quantiles"] = loop_.cloud() ? json(beta_quantiles(*loop_.cloud())) : json();
    j["recommendation"] = status_ == SessionStatus::kAwaitingDecision && loop_.pending() ? json(*loop_.pending()) : json();
    j["forecast"] = status_ == SessionStatus::kAwaitingDecision && forecast_ ? json(*forecast_) : json();
    return j;
  }

  std::string id_;
  DecisionLoop loop_;
  SessionStatus status_ = SessionStatus::kAwaitingDecision;
  std::optional<WhatIfForecast> forecast_;
  mutable std::shared_mutex mutex_;
};

/// Owns the sessions and their on-disk checkpoints.
class SessionManager {
 public:
  using GeneratorFactory = std::function<GeneratorSpec(const RunConfig&)>;

  explicit SessionManager(std::optional<std::filesystem::path> checkpoint_dir = std::nullopt,
                          GeneratorFactory factory = make_generator)
      : dir_{std::move(checkpoint_dir)}, factory_{std::move(factory)} {
    if (dir_) {
      std::filesystem::create_directories(*dir_);
      for (const auto& entry : std::filesystem::directory_iterator(*dir_)) {
        if (entry.path().extension() == ".cbor") {
          std::ifstream in(entry.path(), std::ios::binary);
          const auto j = json::from_cbor(in);
          const auto id = entry.path().stem().string();
          sessions_[id] = std::make_shared<Session>(id, DecisionLoop::restore(j));
        }
      }
    }
  }

  /// Validates `config` (a preset overlay) and opens a warm-started session.
  json create(const json& config) {
    const RunConfig cfg = parse_config(config);
    auto generator = factory_(cfg);
    DecisionLoop loop{cfg, std::move(generator), std::nullopt, /*track_posterior=*/true};
    auto session = std::make_shared<Session>(new_id(), std::move(loop));
    save(*session);
    {
      std::unique_lock lock{mutex_};
      sessions_[session->id()] = session;
    }
    return session->view();
  }

  [[nodiscard]] std::shared_ptr<Session> get(const std::string& id) const {
    std::shared_lock lock{mutex_};
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) {
      throw NotFound{"no session '" + id + "'"};
    }
    return it->second;
  }

  json state(const std::string& id) const { return get(id)->view(); }

  json step(const std::string& id, const StepChoice& choice) {
    return get(id)->step(choice, [this](const Session& s) { save(s); });
  }

  WhatIfForecast whatif(const std::string& id) const { return get(id)->whatif(); }

  json qtable(const std::string& id) const { return get(id)->qtable(); }

  [[nodiscard]] std::size_t size() const {
    std::shared_lock lock{mutex_};
    return sessions_.size();
  }

 private:
  std::string new_id() {
    std::lock_guard lock{id_mutex_};
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id;
    do {
      id.clear();
      for (int i = 0; i < 12; ++i) {
        id += kHex[id_rng_() % 16];
      }
    } while (exists(id));
    return id;
  }

  bool exists(const std::string& id) const {
    std::shared_lock lock{mutex_};
    return sessions_.count(id) > 0;
  }

  /// Writes atomically: a temporary file renamed over the previous checkpoint.
  void save(const Session& s) const {
    if (!dir_) {
      return;
    }
    const auto path = *dir_ / (s.id() + ".cbor");
    const auto tmp = *dir_ / (s.id() + ".cbor.tmp");
    {
      std::ofstream out(tmp, std::ios::binary);
      const auto bytes = json::to_cbor(s.checkpoint());
      out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      if (!out) {
        throw Error{"failed to write checkpoint " + tmp.string()};
      }
    }
    std::filesystem::rename(tmp, path);
  }

  std::optional<std::filesystem::path> dir_;
  GeneratorFactory factory_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  mutable std::shared_mutex mutex_;
  std::mutex id_mutex_;
  std::mt19937_64 id_rng_{std::random_device{}()};
};

}  // namespace epicontrol

#endif
