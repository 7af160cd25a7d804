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


#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "epicontrol/inference/smc2.hpp"
#include "epicontrol/planning/threshold.hpp"

#include "oracles.hpp"

namespace epicontrol {
namespace {

using namespace oracle;

TEST(ThresholdPolicy, Cases) {
  const ThresholdTriple phi{100, 1000, 3000};
  EXPECT_EQ(threshold_policy(0, phi).value(), 1);
  EXPECT_EQ(threshold_policy(99, phi).value(), 1);
  EXPECT_EQ(threshold_policy(100, phi).value(), 2);
  EXPECT_EQ(threshold_policy(2999, phi).value(), 3);
  EXPECT_EQ(threshold_policy(3000, phi).value(), 4);
  EXPECT_THROW((ThresholdTriple{5, 5, 10}), ConfigError);
  EXPECT_THROW((ThresholdTriple{0, 5, 10}), ConfigError);
}

TEST(ThresholdPolicy, MonotoneInLoad) {
  const ThresholdTriple phi{13, 140, 2900};
  for (std::int64_t y = 0; y < 5000; ++y) {
    ASSERT_LE(threshold_policy(y, phi), threshold_policy(y + 1, phi));
  }
}

TEST(ThresholdGrid, AxisAndEnumeration) {
  const auto grid = ThresholdGrid::geometric();
  ASSERT_EQ(grid.axis.size(), 30u);
  EXPECT_EQ(grid.axis.front(), 10);
  EXPECT_EQ(grid.axis.back(), 8000);
  EXPECT_TRUE(std::is_sorted(grid.axis.begin(), grid.axis.end(), std::less_equal<>{}) &&
              std::adjacent_find(grid.axis.begin(), grid.axis.end()) == grid.axis.end());
  const auto all = grid.all_candidates();
  EXPECT_EQ(all.size(), 4060u);
  for (const auto& t : all) {
    ASSERT_LT(t[0], t[1]);
    ASSERT_LT(t[1], t[2]);
  }
}

TEST(ThresholdGrid, NeighborhoodContainsCenter) {
  const auto grid = ThresholdGrid::geometric();
  for (const auto& c : grid.all_candidates()) {
    const auto hood = grid.neighborhood(c);
    ASSERT_NE(std::find(hood.begin(), hood.end(), c), hood.end());
    for (const auto& t : hood) {
      for (int i = 0; i < 3; ++i) {
        ASSERT_LE(std::abs(t[i] - c[i]), grid.margin);
      }
    }
  }
}

RolloutStart epidemic_start() {
  RolloutStart s;
  s.theta.population = 10'000;
  s.state = seeded_state(10'000, 300, 500);
  s.state.S -= 30;
  s.state.ICU = 30;
  s.observed = 28;
  for (int d = 0; d < 7; ++d) {
    s.streak = update_streak(s.streak, ActionLevel{3});
  }
  return s;
}

TEST(RolloutCost, MatchesDayByDayOracle) {
  const auto s = epidemic_start();
  const VaccinationStream vax(40);
  RewardConfig cfg;
  cfg.crash_threshold = 60;
  for (const auto& tau : {std::array<std::int64_t, 3>{5, 20, 60}, std::array<std::int64_t, 3>{25, 40, 90},
                          std::array<std::int64_t, 3>{1000, 2000, 3000}}) {
    RandomStream rng{1};
    const double got =
        rollout_cost(s, ThresholdTriple{tau[0], tau[1], tau[2]}, 20, cfg, vax, rng, Propagation::kMeanField);
    const double want = rollout_oracle(s, std::vector<int>(7, 3), tau, 20, cfg, vax);
    EXPECT_NEAR(got, want, 1e-9 * std::max(1.0, std::abs(want)));
  }
}

TEST(RolloutCost, SingleDayIsAnchoredReward) {
  const auto s = epidemic_start();
  const VaccinationStream vax(5);
  const RewardConfig cfg;
  RandomStream rng{2};
  const ThresholdTriple phi{10, 20, 30};
  const auto a = threshold_policy(s.observed, phi);
  EXPECT_DOUBLE_EQ(rollout_cost(s, phi, 1, cfg, vax, rng),
                   reward(s.observed, a, update_streak(s.streak, a).ell, cfg));
}

TEST(RolloutCost, ZeroEpidemicIsZero) {
  RolloutStart s;
  s.theta.population = 10'000;
  s.state = seeded_state(10'000, 0, 0);
  const VaccinationStream vax(120);
  RandomStream rng{3};
  EXPECT_EQ(rollout_cost(s, ThresholdTriple{100'000, 200'000, 300'000}, 100, RewardConfig{}, vax, rng), 0.0);
}

TEST(EvaluateCandidates, SingleCandidate) {
  const auto grid = ThresholdGrid::geometric(5, 10, 1000);
  const std::vector<TripleIndex> one{{1, 2, 4}};
  const std::vector<RolloutStart> starts{epidemic_start()};
  const auto plan = evaluate_candidates(starts, grid, one, 10, RewardConfig{}, VaccinationStream(20), RandomStream{4});
  EXPECT_EQ(plan.index, one[0]);
  EXPECT_EQ(plan.phi, grid.triple(one[0]));
}

TEST(EvaluateCandidates, PathwiseDominantCandidateWins) {
  ThresholdGrid grid;
  grid.axis = {1, 2, 3, 1'000'000, 2'000'000, 3'000'000};
  const std::vector<TripleIndex> candidates{{3, 4, 5}, {0, 1, 2}};
  RewardConfig cfg;
  cfg.crash_threshold = 2000;
  cfg.crash_penalty = 1e7;
  RolloutStart s;
  s.theta.population = 100'000;
  s.state = seeded_state(100'000, 2000, 2000);
  s.observed = 50;
  const std::vector<RolloutStart> starts(50, s);
  const VaccinationStream vax(80);
  const RandomStream rng{5};
  for (std::size_t k = 0; k < starts.size(); ++k) {
    auto a = rng.derive(k);
    auto b = rng.derive(k);
    ASSERT_GT(rollout_cost(starts[k], grid.triple({0, 1, 2}), 60, cfg, vax, a),
              rollout_cost(starts[k], grid.triple({3, 4, 5}), 60, cfg, vax, b));
  }
  const auto plan = evaluate_candidates(starts, grid, candidates, 60, cfg, vax, rng);
  EXPECT_EQ(plan.index, (TripleIndex{0, 1, 2}));
}

TEST(SearchCandidates, ArgmaxInvariantToConstantShift) {
  const auto grid = ThresholdGrid::geometric(8, 5, 400);
  const auto candidates = grid.all_candidates();
  std::vector<RolloutStart> starts;
  for (int k = 0; k < 6; ++k) {
    auto s = epidemic_start();
    s.state.I += 40 * k;
    s.state.S -= 40 * k;
    starts.push_back(s);
  }
  const VaccinationStream vax(40);
  RewardConfig cfg;
  cfg.crash_threshold = 80;
  const RandomStream rng{6};
  auto score = [&](double shift) {
    return [&, shift](const RolloutStart& st, const ThresholdTriple& phi, RandomStream& r) {
      return rollout_cost(st, phi, 30, cfg, vax, r) + shift;
    };
  };
  const auto base = search_candidates(starts, grid, candidates, rng, score(0.0));
  for (double shift : {-1e4, -3.5, 17.0, 2.5e5}) {
    EXPECT_EQ(search_candidates(starts, grid, candidates, rng, score(shift)).index, base.index) << shift;
  }
}

PosteriorCloud small_cloud() {
  Smc2Config cfg;
  cfg.n_theta = 20;
  cfg.n_x = 5;
  cfg.base.population = 10'000;
  cfg.initial = epidemic_start().state;
  return initial_cloud(cfg, RandomStream{8});
}

TEST(PlanBlock, DeterministicAndRestrictedByPrevious) {
  const auto cloud = small_cloud();
  const auto grid = ThresholdGrid::geometric(10, 5, 500);
  const VaccinationStream vax(60);
  RewardConfig cfg;
  cfg.crash_threshold = 100;
  const StreakCounter streak;
  const auto a = plan_block(cloud, grid, 5, 20, 28, streak, cfg, vax, RandomStream{9});
  const auto b = plan_block(cloud, grid, 5, 20, 28, streak, cfg, vax, RandomStream{9});
  EXPECT_EQ(a.index, b.index);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.candidates, grid.all_candidates().size());

  const TripleIndex previous{2, 5, 7};
  const auto refined = plan_block(cloud, grid, 5, 20, 28, streak, cfg, vax, RandomStream{10}, previous);
  const auto hood = grid.neighborhood(previous);
  EXPECT_EQ(refined.candidates, hood.size());
  EXPECT_NE(std::find(hood.begin(), hood.end(), refined.index), hood.end());
}

}  // namespace
}  // namespace epicontrol
