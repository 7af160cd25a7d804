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
#include <functional>
#include <map>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "epicontrol/core/dynamics.hpp"
#include "epicontrol/core/observation.hpp"
#include "epicontrol/core/simulate.hpp"
#include "epicontrol/core/types.hpp"
#include "epicontrol/random.hpp"

#include "oracles.hpp"

namespace epicontrol {
namespace {

using namespace oracle;

ModelParams small_params(std::int64_t n) {
  ModelParams p;
  p.population = n;
  return p;
}

TEST(ActionLevel, RejectsOutOfRange) {
  EXPECT_THROW(ActionLevel{0}, InvalidAction);
  EXPECT_THROW(ActionLevel{5}, InvalidAction);
  EXPECT_EQ(ActionLevel{4}.index(), 3);
  EXPECT_EQ(ActionLevel::from_index(0).value(), 1);
}

TEST(ModelParams, DefaultsAndValidation) {
  ModelParams p;
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(p.population, 68'000'000);
  EXPECT_DOUBLE_EQ(p.k_obs, 10.0);
  EXPECT_DOUBLE_EQ(p.p_iu, 1.0 - std::exp(-0.1));
  EXPECT_DOUBLE_EQ(p.p_vv, 0.05);
  p.beta = {0.3, 0.3, 0.2, 0.1};
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(ForceOfInfection, Examples) {
  auto p = small_params(100'000);
  CompartmentState x = seeded_state(100'000, 0, 0);
  EXPECT_EQ(force_of_infection(x, p, ActionLevel{1}), 0.0);

  p.beta[0] = 0.3;
  x = CompartmentState{};
  x.I = 100'000;
  EXPECT_DOUBLE_EQ(force_of_infection(x, p, ActionLevel{1}), 0.3);

  p.beta[1] = 0.25;
  x = seeded_state(100'000, 0, 500);
  x.S -= 100;
  x.IV = 100;
  EXPECT_NEAR(force_of_infection(x, p, ActionLevel{2}), 1.5e-3, 1e-15);
}

TEST(SecondDoseAllocation, Examples) {
  auto d = second_dose_allocation(70, 60, 0);
  EXPECT_EQ(d.from_v3, 0);
  EXPECT_EQ(d.from_v4, 0);
  d = second_dose_allocation(70, 60, 100);
  EXPECT_EQ(d.from_v4, 60);
  EXPECT_EQ(d.from_v3, 40);
  d = second_dose_allocation(10, 500, 100);
  EXPECT_EQ(d.from_v4, 100);
  EXPECT_EQ(d.from_v3, 0);
}

TEST(IcuAdmissionVaccinated, Examples) {
  const ModelParams p;
  CompartmentState x;
  EXPECT_EQ(icu_admission_prob_vaccinated(x, p), 0.0);
  x.V[4] = 1000;
  EXPECT_NEAR(icu_admission_prob_vaccinated(x, p), p.p_iu * 0.11, 1e-15);
  x.V = {7, 7, 7, 7, 7};
  EXPECT_NEAR(icu_admission_prob_vaccinated(x, p), p.p_iu * (1.0 - 0.688), 1e-15);
}

TEST(VaccinatedExposure, ClampedToUnitInterval) {
  EXPECT_EQ(vaccinated_exposure_prob(5.0, 0.5, false), 1.0);
  EXPECT_NEAR(vaccinated_exposure_prob(0.01, 0.8, false), 0.002, 1e-15);
  EXPECT_NEAR(vaccinated_exposure_prob(0.01, 0.8, true), 1.0 - std::exp(-0.002), 1e-15);
}

TEST(Step, NoInfectionIsAbsorbing) {
  const auto p = small_params(10'000);
  const VaccinationStream vax(10);
  CompartmentState x = seeded_state(10'000, 0, 0);
  x.S = 8000;
  x.R = 2000;
  RandomStream rng{3};
  const auto next = step(x, p, ActionLevel{1}, vax, rng);
  CompartmentState expected = x;
  expected.day = 1;
  EXPECT_EQ(next, expected);
}

TEST(Step, FirstDosesClampToSusceptibles) {
  const auto p = small_params(1000);
  const VaccinationStream vax{{5000}, {0}};
  CompartmentState x = seeded_state(1000, 0, 0);
  x.S = 300;
  x.R = 700;
  RandomStream rng{1};
  const auto next = step(x, p, ActionLevel{1}, vax, rng);
  EXPECT_EQ(next.S, 0);
  EXPECT_EQ(next.V[0], 300);
  EXPECT_EQ(next.total(), 1000);
}

TEST(Step, MissingVaccinationDayThrows) {
  const auto p = small_params(1000);
  const VaccinationStream vax(3);
  CompartmentState x = seeded_state(1000, 10, 10);
  x.day = 3;
  RandomStream rng{1};
  EXPECT_THROW(step(x, p, ActionLevel{1}, vax, rng), MalformedStream);
}

TEST(Step, MonteCarloExposureMean) {
  auto p = small_params(10'000);
  p.beta[1] = 0.2;
  const VaccinationStream vax(1);
  CompartmentState x = seeded_state(10'000, 0, 100);
  x.S = 9000;
  x.R = 900;
  RandomStream rng{11};
  const int draws = 100'000;
  double sum = 0.0;
  double sum2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const auto next = step(x, p, ActionLevel{2}, vax, rng);
    // New exposures are the only inflow to E while E is empty.
    const double se = static_cast<double>(next.E);
    sum += se;
    sum2 += se * se;
  }
  const double mean = sum / draws;
  const double var = sum2 / draws - mean * mean;
  const double expected = 9000.0 * (1.0 - std::exp(-0.2 * 100.0 / 10'000.0));
  EXPECT_NEAR(expected, 17.98, 0.005);
  EXPECT_NEAR(mean, expected, 3.0 * std::sqrt(var / draws));
}

TEST(Step, ConservationAndNonnegativity) {
  RandomStream rng{2024};
  for (int trial = 0; trial < 20'000; ++trial) {
    const std::int64_t n = 1 + static_cast<std::int64_t>(rng.uniform() * 1e6);
    ModelParams p = small_params(n);
    for (int j = 0; j < 4; ++j) {
      p.beta[j] = 1.5 * (1.0 - 0.2 * j) * rng.uniform() + 1e-3 * (4 - j);
    }
    std::sort(p.beta.begin(), p.beta.end(), std::greater<>{});
    p.exponential_vaccinated_exposure = rng.uniform() < 0.5;
    const auto x = random_state(n, rng);
    const VaccinationStream vax{{static_cast<std::int64_t>(rng.uniform() * n)},
                                {static_cast<std::int64_t>(rng.uniform() * n)}};
    const auto mode = rng.uniform() < 0.2 ? Propagation::kMeanField : Propagation::kStochastic;
    const auto next = step(x, p, ActionLevel{1 + rng.uniform_int(0, 3)}, vax, rng, mode);
    ASSERT_EQ(next.total(), n);
    ASSERT_TRUE(next.nonnegative());
  }
}

TEST(Step, MeanFieldExposureMonotoneInStringency) {
  ModelParams p = small_params(100'000);
  const VaccinationStream vax(200);
  RandomStream rng{0};
  std::vector<std::int64_t> cumulative;
  for (int a = 1; a <= 4; ++a) {
    CompartmentState x = seeded_state(100'000, 200, 200);
    std::int64_t total = 0;
    for (int t = 0; t < 150; ++t) {
      const auto next = step(x, p, ActionLevel{a}, vax, rng, Propagation::kMeanField);
      total += x.S - next.S;  // no first doses, so S only loses to exposure
      x = next;
    }
    cumulative.push_back(total);
  }
  for (int a = 1; a < 4; ++a) {
    EXPECT_GE(cumulative[a - 1], cumulative[a]);
  }
}

TEST(Observe, ZeroLoadIsZero) {
  const ModelParams p;
  CompartmentState x = seeded_state(1000, 0, 0);
  RandomStream rng{4};
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(observe(x, p, rng).y, 0);
  }
}

void check_moments(double load, double k, int draws, std::uint64_t seed) {
  ModelParams p;
  p.k_obs = k;
  CompartmentState x;
  x.ICU = static_cast<std::int64_t>(load);
  RandomStream rng{seed};
  std::vector<double> ys(draws);
  for (auto& y : ys) {
    y = static_cast<double>(observe(x, p, rng).y);
  }
  const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / draws;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double y : ys) {
    m2 += (y - mean) * (y - mean);
    m4 += std::pow(y - mean, 4);
  }
  m2 /= draws;
  m4 /= draws;
  const double var = m2 * draws / (draws - 1.0);
  const double expected_var = load * (1.0 + load / k);
  EXPECT_NEAR(mean, load, 3.0 * std::sqrt(var / draws));
  EXPECT_NEAR(var, expected_var, 3.0 * std::sqrt((m4 - m2 * m2) / draws));
}

TEST(Observe, NegBinMoments) { check_moments(1000.0, 10.0, 100'000, 5); }

TEST(Observe, PoissonLimit) { check_moments(50.0, 1e6, 100'000, 6); }

/// Independent pmf by the ratio recurrence p(y+1)/p(y) = (y+k)/(y+1) * (1-p).
std::vector<double> negbin_pmf_oracle(double load, double k, int max_y) {
  const double p = k / (k + load);
  std::vector<double> pmf(max_y + 1);
  pmf[0] = std::pow(p, k);
  for (int y = 0; y < max_y; ++y) {
    pmf[y + 1] = pmf[y] * (y + k) / (y + 1.0) * (1.0 - p);
  }
  return pmf;
}

TEST(LogLikelihood, Boundaries) {
  EXPECT_EQ(negbin_log_pmf(0, 0.0, 10.0), 0.0);
  EXPECT_EQ(negbin_log_pmf(5, 0.0, 10.0), kLogLikelihoodFloor);
  for (std::int64_t y : {0, 1, 10, 1000, 100'000'000}) {
    EXPECT_TRUE(std::isfinite(negbin_log_pmf(y, 3.0, 10.0)));
  }
}

TEST(LogLikelihood, MatchesBruteForcePmf) {
  const auto pmf = negbin_pmf_oracle(100.0, 10.0, 1'000'000);
  const double mass = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  EXPECT_NEAR(mass, 1.0, 1e-9);
  for (int y : {0, 1, 50, 100, 250, 1000}) {
    EXPECT_NEAR(negbin_log_pmf(y, 100.0, 10.0), std::log(pmf[y]), 1e-9) << "y=" << y;
  }
  CompartmentState x;
  x.ICU = 60;
  x.ICUV = 40;
  EXPECT_NEAR(log_likelihood({100, 0}, x, ModelParams{}), std::log(pmf[100]), 1e-9);
}

TEST(LogLikelihood, ConsistentWithObserve) {
  const int draws = 100'000;
  for (double load : {0.0, 10.0, 1000.0}) {
    ModelParams p;
    CompartmentState x;
    x.ICU = static_cast<std::int64_t>(load);
    RandomStream rng{static_cast<std::uint64_t>(load) + 17};
    std::map<std::int64_t, int> counts;
    for (int i = 0; i < draws; ++i) {
      ++counts[observe(x, p, rng).y];
    }
    const std::vector<std::int64_t> probes =
        load == 0.0 ? std::vector<std::int64_t>{0} : std::vector<std::int64_t>{static_cast<std::int64_t>(load * 0.5),
                                                                               static_cast<std::int64_t>(load)};
    for (auto y : probes) {
      const double prob = std::exp(log_likelihood({y, 0}, x, p));
      const double freq = static_cast<double>(counts[y]) / draws;
      const double se = std::sqrt(std::max(prob * (1.0 - prob), 1e-12) / draws);
      EXPECT_NEAR(freq, prob, 3.0 * se + 1e-12) << "load=" << load << " y=" << y;
    }
  }
}

TEST(Simulate, LengthsDeterminismAndConservation) {
  const auto p = small_params(50'000);
  const VaccinationStream vax{std::vector<std::int64_t>(40, 20), std::vector<std::int64_t>(40, 10)};
  const auto x0 = seeded_state(50'000, 50, 50);
  const std::vector<ActionLevel> actions(30, ActionLevel{2});
  RandomStream a{9};
  RandomStream b{9};
  const auto t1 = simulate(x0, p, actions, vax, 30, a);
  const auto t2 = simulate(x0, p, actions, vax, 30, b);
  ASSERT_EQ(t1.states.size(), 30u);
  ASSERT_EQ(t1.observations.size(), 30u);
  EXPECT_EQ(t1.states, t2.states);
  EXPECT_EQ(t1.observations, t2.observations);
  for (std::size_t t = 0; t < t1.states.size(); ++t) {
    EXPECT_EQ(t1.states[t].total(), 50'000);
    EXPECT_EQ(t1.states[t].day, static_cast<int>(t) + 1);
  }
}

TEST(Simulate, OneDayIsStepThenObserve) {
  const auto p = small_params(10'000);
  const VaccinationStream vax(2);
  const auto x0 = seeded_state(10'000, 30, 30);
  const std::vector<ActionLevel> actions{ActionLevel{1}};
  RandomStream a{77};
  RandomStream b{77};
  const auto traj = simulate(x0, p, actions, vax, 1, a);
  const auto x1 = step(x0, p, ActionLevel{1}, vax, b);
  const auto y1 = observe(x1, p, b);
  EXPECT_EQ(traj.states[0], x1);
  EXPECT_EQ(traj.observations[0], y1);
}

TEST(Simulate, ZeroInfectionStaysZero) {
  const auto p = small_params(10'000);
  const VaccinationStream vax(20);
  RandomStream rng{1};
  const auto traj = simulate(seeded_state(10'000, 0, 0), p, std::vector<ActionLevel>(20, ActionLevel{1}), vax, 20, rng);
  for (std::size_t t = 0; t < 20; ++t) {
    EXPECT_EQ(traj.states[t].icu_load(), 0);
    EXPECT_EQ(traj.observations[t].y, 0);
  }
}

TEST(RandomStream, DerivationIsOrderIndependent) {
  RandomStream root{42};
  auto a = root.derive({1, 2});
  root();
  root();
  auto b = root.derive({1, 2});
  EXPECT_EQ(a(), b());
  EXPECT_NE(root.derive({1, 2})(), root.derive({2, 1})());
}

}  // namespace
}  // namespace epicontrol
