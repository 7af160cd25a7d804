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


// Acceptance run: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails. Pass a criterion name to run only that one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "epicontrol/epicontrol.hpp"
#include "epicontrol/service/session.hpp"

#include "oracles.hpp"

namespace epicontrol {
namespace {

using namespace oracle;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  /// Wall-clock budget in seconds; zero means none.
  double budget = 0.0;
  std::function<Outcome()> run;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Outcome conservation() {
  RandomStream rng{1'000'003};
  for (int trial = 0; trial < 1'000'000; ++trial) {
    const std::int64_t n = 1 + static_cast<std::int64_t>(rng.uniform() * 1e7);
    ModelParams p;
    p.population = n;
    for (int j = 0; j < 4; ++j) {
      p.beta[j] = 1.5 * rng.uniform() + 1e-3;
    }
    std::sort(p.beta.begin(), p.beta.end(), std::greater<>{});
    p.p_ei = rng.uniform();
    p.p_ir = rng.uniform();
    p.p_iu = rng.uniform() * (1.0 - p.p_ir);
    p.p_ur = rng.uniform();
    p.p_vv = rng.uniform();
    p.exponential_vaccinated_exposure = rng.uniform() < 0.5;
    auto x = random_state(n, rng);
    x.day = 0;
    const VaccinationStream vax{{static_cast<std::int64_t>(rng.uniform() * static_cast<double>(n))},
                                {static_cast<std::int64_t>(rng.uniform() * static_cast<double>(n))}};
    const auto mode = rng.uniform() < 0.2 ? Propagation::kMeanField : Propagation::kStochastic;
    const auto next = step(x, p, ActionLevel{1 + rng.uniform_int(0, 3)}, vax, rng, mode);
    if (next.total() != n || !next.nonnegative()) {
      return {false, fmt("trial %d: total %lld != %lld", trial, static_cast<long long>(next.total()),
                         static_cast<long long>(n))};
    }
  }
  return {true, "1000000 steps, sum equals N every time"};
}

Outcome reward_exactness() {
  const RewardConfig cfg;  // kappa_icu 1, kappa_soec 0.2, crash 6000 / 1e5
  struct Case {
    std::int64_t y;
    int a;
    std::int64_t ell;
    double want;
  };
  const Case cases[] = {
      {6001, 1, 0, -1e5},  {6001, 4, 30, -1e5}, {6000, 1, 0, -6000.0}, {100, 3, 5, -300.0},
      {0, 1, 0, 0.0},      {10, 4, 3, -10.0 - 0.2 * 2400.0},           {7, 2, 9, -7.0 - 0.2 * 50.0 * std::log(10.0)},
  };
  double worst = 0.0;
  for (const auto& c : cases) {
    worst = std::max(worst, std::abs(reward(c.y, ActionLevel{c.a}, c.ell, cfg) - c.want));
  }
  const double cost_err = std::max({std::abs(intervention_cost(ActionLevel{1}, 999) - 0.0),
                                    std::abs(intervention_cost(ActionLevel{4}, 3) - 2400.0),
                                    std::abs(intervention_cost(ActionLevel{3}, 5) - 1000.0)});
  worst = std::max(worst, cost_err);
  return {worst <= 1e-12, fmt("max abs error %.3g", worst)};
}

Outcome observation_model() {
  const ModelParams p;
  std::string detail;
  bool pass = true;
  for (std::int64_t h : {10, 1000}) {
    CompartmentState x;
    x.ICU = h;
    x.S = p.population - h;
    RandomStream rng{static_cast<std::uint64_t>(h)};
    const int n = 100'000;
    std::vector<double> ys(n);
    for (auto& y : ys) {
      y = static_cast<double>(observe(x, p, rng).y);
    }
    double mean = 0.0;
    for (double y : ys) {
      mean += y;
    }
    mean /= n;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double y : ys) {
      const double d = y - mean;
      m2 += d * d;
      m4 += d * d * d * d;
    }
    const double var = m2 / (n - 1);
    m4 /= n;
    const double hd = static_cast<double>(h);
    const double want_var = hd * (1.0 + hd / p.k_obs);
    const double z_mean = (mean - hd) / std::sqrt(var / n);
    const double z_var = (var - want_var) / std::sqrt((m4 - var * var) / n);
    pass = pass && std::abs(z_mean) <= 3.0 && std::abs(z_var) <= 3.0;
    detail += fmt("H=%lld: mean z=%.2f, var z=%.2f; ", static_cast<long long>(h), z_mean, z_var);
  }
  return {pass, detail};
}

Outcome pf_correctness() {
  // The log estimate carries a Jensen bias of about -var/2; a 10-symbol
  // window keeps it well inside the 3-SE band at N=256.
  const std::vector<int> window(kSymbols.begin(), kSymbols.begin() + 10);
  const double exact = forward_log_likelihood(window);
  RandomStream rng{100};
  std::vector<double> est;
  for (int run = 0; run < 200; ++run) {
    est.push_back(toy_filter_log_likelihood(256, window, rng));
  }
  const auto m = moments(est);
  const double z = (m.mean - exact) / std::sqrt(m.var / est.size());
  auto variance_at = [&](std::size_t n) {
    RandomStream r{static_cast<std::uint64_t>(7000 + n)};
    std::vector<double> v;
    for (int run = 0; run < 200; ++run) {
      v.push_back(toy_filter_log_likelihood(n, kSymbols, r));
    }
    return moments(v).var;
  };
  const double v64 = variance_at(64);
  const double v512 = variance_at(512);
  return {std::abs(z) <= 3.0 && v512 <= v64,
          fmt("mean z=%.2f vs forward %.4f; var N=64 %.3g, N=512 %.3g", z, exact, v64, v512)};
}

Outcome smc2_recovery() {
  int covered_seeds = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto cfg = desk_preset();
    cfg.smc.n_x = 200;
    const auto scenario = make_synthetic(cfg, 120, RandomStream{seed}.derive(1));
    const auto cloud = warm_start(cfg.smc_config(), scenario.history.observations, scenario.history.actions,
                                  scenario.history.vax, RandomStream{seed}.derive(2));
    std::set<int> active;
    for (const auto& a : scenario.history.actions) {
      active.insert(a.index());
    }
    bool all = true;
    for (int j : active) {
      std::vector<double> values;
      for (const auto& p : cloud.particles) {
        values.push_back(p.theta.beta[j]);
      }
      const double lo = weighted_quantile(values, cloud.weights, 0.05);
      const double hi = weighted_quantile(values, cloud.weights, 0.95);
      const double truth = scenario.truth.beta[j];
      all = all && lo <= truth && truth <= hi;
    }
    covered_seeds += all ? 1 : 0;
    detail += all ? "+" : "-";
  }
  return {covered_seeds >= 8, fmt("all active betas covered in %d/10 seeds (", covered_seeds) + detail + ")"};
}

Outcome q_oracle() {
  ToyEnv env = two_by_two();
  const double gamma = 0.9;
  const auto optimal = value_iteration(env, gamma);
  RandomStream rng{2};
  const auto q = train_episodes(env, QTable(2, 2), toy_schedule(5000), gamma, rng);
  bool policy = true;
  for (int g = 0; g < 2; ++g) {
    policy = policy && q.greedy(g) == argmax(optimal[g]);
  }
  RandomStream r{3};
  const auto bins = BinScheme::geometric(20, 1.0, 6000.0);
  bool invariant = true;
  for (int trial = 0; trial < 1000; ++trial) {
    QTable t(20, 4);
    for (auto& v : t.values()) {
      v = -1e4 * r.uniform();
    }
    QTable scaled = t;
    const double c = std::exp(10.0 * (r.uniform() - 0.5));
    for (auto& v : scaled.values()) {
      v *= c;
    }
    const auto y = static_cast<std::int64_t>(r.uniform() * 7000.0);
    invariant = invariant && select_block_action(t, y, bins) == select_block_action(scaled, y, bins);
  }
  return {policy && invariant, fmt("greedy policy %s value iteration; scaling invariance %s",
                                   policy ? "equals" : "differs from", invariant ? "holds" : "broken")};
}

Outcome convergence() {
  int converged = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto cfg = desk_preset();
    cfg.planner = PlannerKind::kQLearn;
    cfg.seed = seed;
    DecisionLoop loop{cfg, make_generator(cfg)};
    loop.recommend();
    const auto& report = loop.trace().convergence.front();
    const auto at = report.converged_at;
    converged += at && *at < cfg.learn.episodes ? 1 : 0;
    const double head = *std::max_element(report.max_delta.begin(), report.max_delta.end());
    const double tail_rel = report.max_delta.back() / head;
    double tail_flip = 0.0;
    for (std::size_t e = report.policy_change_fraction.size() - 50; e < report.policy_change_fraction.size(); ++e) {
      tail_flip = std::max(tail_flip, report.policy_change_fraction[e]);
    }
    detail += fmt("[%llu: %s rel=%.1e flips=%.3f] ", static_cast<unsigned long long>(seed),
                  at ? std::to_string(*at).c_str() : "none", tail_rel, tail_flip);
  }
  return {converged >= 9, fmt("converged in %d/10 seeds; ", converged) + detail};
}

Outcome planner_superiority() {
  bool pass = true;
  std::string detail;
  for (double kappa : {0.2, 0.5, 0.8}) {
    int threshold_wins = 0;
    int qlearn_wins = 0;
    int naive_loses = 0;
    std::string losses;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      auto cfg = desk_preset();
      cfg.seed = seed;
      cfg.reward.kappa_soec = kappa;
      const auto gen = make_generator(cfg);
      auto total = [&](PlannerKind planner, const std::optional<PosteriorCloud>& warm = std::nullopt) {
        auto c = cfg;
        c.planner = planner;
        return run_decision_loop(c, gen, warm).total_reward();
      };
      auto with_cloud = cfg;
      with_cloud.planner = PlannerKind::kThreshold;
      const auto warm = DecisionLoop::warm_cloud(with_cloud, gen);
      const double random = total(PlannerKind::kRandom);
      const double naive = total(PlannerKind::kNaiveQ);
      const double threshold = total(PlannerKind::kThreshold, warm);
      const double qlearn = total(PlannerKind::kQLearn, warm);
      threshold_wins += threshold > random ? 1 : 0;
      qlearn_wins += qlearn > random ? 1 : 0;
      if (threshold <= random || qlearn <= random) {
        losses += fmt(" [seed %llu: threshold %.4g, qlearn %.4g, random %.4g]", static_cast<unsigned long long>(seed),
                      threshold, qlearn, random);
      }
      naive_loses += naive < qlearn ? 1 : 0;
    }
    pass = pass && threshold_wins >= 9 && qlearn_wins >= 9 && naive_loses >= 8;
    detail += fmt("kappa %.1f: threshold>random %d/10, qlearn>random %d/10, naive<qlearn %d/10;", kappa,
                  threshold_wins, qlearn_wins, naive_loses) +
              losses + "; ";
  }
  return {pass, detail};
}

Outcome grid_equivalence() {
  const auto grid = ThresholdGrid::geometric(5, 10.0, 8000.0);
  if (grid.all_candidates().size() != 10) {
    return {false, "axis does not give 10 triples"};
  }
  int agree = 0;
  const int scenarios = 20;
  for (int s = 0; s < scenarios; ++s) {
    RandomStream rng{static_cast<std::uint64_t>(500 + s)};
    auto cfg = desk_preset();
    cfg.smc.n_theta = 20;
    cfg.smc.n_x = 20;
    cfg.initial_exposed = 200 + rng.uniform_int(0, 2000);
    cfg.initial_infectious = 200 + rng.uniform_int(0, 2000);
    const int days = 20 + rng.uniform_int(0, 20);
    const auto scenario = make_synthetic(cfg, days, rng.derive(1));
    const auto cloud = warm_start(cfg.smc_config(), scenario.history.observations, scenario.history.actions,
                                  scenario.history.vax, rng.derive(2));
    std::vector<int> history;
    StreakCounter streak;
    for (int d = 0; d < 12; ++d) {
      const int a = 1 + rng.uniform_int(0, 3);
      history.push_back(a);
      streak = update_streak(streak, ActionLevel{a});
    }
    const std::int64_t observed = scenario.history.observations.back().y;
    RewardConfig reward_cfg;
    reward_cfg.kappa_soec = 0.5;
    const auto plan_rng = rng.derive(3);
    const auto planned = plan_block(cloud, grid, 6, 30, observed, streak, reward_cfg, scenario.history.vax, plan_rng,
                                    std::nullopt, Propagation::kMeanField);
    // Exhaustive enumeration on the same posterior draws with independent arithmetic.
    auto draw_rng = plan_rng.derive(0);
    const auto draws = sample_posterior(cloud, 6, draw_rng);
    TripleIndex best{};
    double best_value = -std::numeric_limits<double>::infinity();
    for (const auto& idx : grid.all_candidates()) {
      const auto phi = grid.triple(idx);
      double sum = 0.0;
      for (const auto& [theta, x] : draws) {
        sum += rollout_oracle({theta, x, observed, streak}, history, phi.tau, 30, reward_cfg, scenario.history.vax);
      }
      const double mean = sum / static_cast<double>(draws.size());
      if (mean > best_value) {
        best_value = mean;
        best = idx;
      }
    }
    agree += planned.index == best ? 1 : 0;
  }
  return {agree == scenarios, fmt("argmax agrees in %d/%d posterior scenarios", agree, scenarios)};
}

Outcome batch_interactive() {
  bool pass = true;
  std::string detail;
  for (auto planner : {PlannerKind::kThreshold, PlannerKind::kQLearn, PlannerKind::kRandom}) {
    auto cfg = desk_preset();
    cfg.planner = planner;
    cfg.seed = 11;
    SessionManager sessions;
    const auto id = sessions.create(json(cfg))["id"].get<std::string>();
    while (sessions.state(id)["status"] == "awaiting_decision") {
      sessions.step(id, std::monostate{});
    }
    const auto interactive = sessions.get(id)->trace();
    const auto batch = run_decision_loop(cfg, make_generator(cfg));
    bool same = interactive.days.size() == batch.days.size();
    for (std::size_t i = 0; same && i < batch.days.size(); ++i) {
      const auto& a = interactive.days[i];
      const auto& b = batch.days[i];
      same = a.y == b.y && a.action == b.action && a.reward == b.reward;
    }
    pass = pass && same;
    detail += to_string(planner) + (same ? " identical; " : " differs; ");
  }
  return {pass, detail};
}

}  // namespace
}  // namespace epicontrol

int main(int argc, char** argv) {
  using namespace epicontrol;
  const std::vector<Criterion> criteria{
      {"conservation", 60.0, conservation},
      {"reward-exactness", 0.0, reward_exactness},
      {"observation-model", 0.0, observation_model},
      {"pf-correctness", 0.0, pf_correctness},
      {"smc2-recovery", 600.0, smc2_recovery},
      {"q-learning-oracle", 0.0, q_oracle},
      {"convergence-diagnostics", 0.0, convergence},
      {"planner-superiority", 1800.0, planner_superiority},
      {"grid-search-equivalence", 0.0, grid_equivalence},
      {"batch-interactive-equivalence", 0.0, batch_interactive},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (argc > 1 && c.name != argv[1]) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string{"threw: "} + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget > 0.0 && seconds > c.budget) {
      out.pass = false;
      out.detail += fmt(" over the %.0f s budget", c.budget);
    }
    failures += out.pass ? 0 : 1;
    std::printf("%s %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", c.name.c_str(), out.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
