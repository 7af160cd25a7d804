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

#ifndef EPICONTROL_CORE_DYNAMICS_HPP
#define EPICONTROL_CORE_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

#include "epicontrol/core/types.hpp"
#include "epicontrol/random.hpp"

namespace epicontrol {

/// Per-susceptible daily infection rate under `action`.
inline double force_of_infection(const CompartmentState& x, const ModelParams& params, ActionLevel action) {
  return params.beta_for(action) * static_cast<double>(x.infectious()) /
         static_cast<double>(params.population);
}

struct SecondDoses {
  std::int64_t from_v3 = 0;
  std::int64_t from_v4 = 0;
};

/// Second doses go to V4 first, then to V3; any excess is dropped.
inline SecondDoses second_dose_allocation(std::int64_t v3, std::int64_t v4, std::int64_t daily_second) {
  SecondDoses d;
  d.from_v4 = std::max<std::int64_t>(0, std::min(daily_second, v4));
  d.from_v3 = std::max<std::int64_t>(0, std::min(v3, daily_second - d.from_v4));
  return d;
}

/// ICU admission probability of vaccinated infectious individuals: p_IU
/// scaled by the stratum-weighted mean of (1 - psi_j). Zero when nobody is
/// in a vaccinated stratum.
inline double icu_admission_prob_vaccinated(const CompartmentState& x, const ModelParams& params) {
  const std::int64_t total = x.vaccinated();
  if (total <= 0) {
    return 0.0;
  }
  double weighted = 0.0;
  for (int j = 0; j < kNumVaccineLevels; ++j) {
    weighted += (1.0 - params.psi[j]) * static_cast<double>(x.V[j]);
  }
  return params.p_iu * weighted / static_cast<double>(total);
}

/// Exposure probability of vaccinated stratum j given the force of infection.
inline double vaccinated_exposure_prob(double lambda, double eps_j, bool exponential) {
  const double p = exponential ? 1.0 - std::exp(-lambda * (1.0 - eps_j)) : lambda * (1.0 - eps_j);
  return std::clamp(p, 0.0, 1.0);
}

namespace detail {

class TransitionSampler {
 public:
  TransitionSampler(Propagation mode, RandomStream& rng) : mode_{mode}, rng_{rng} {}

  std::int64_t binomial(std::int64_t n, double p) {
    if (n <= 0 || p <= 0.0) {
      return 0;
    }
    if (p >= 1.0) {
      return n;
    }
    if (mode_ == Propagation::kMeanField) {
      return std::clamp<std::int64_t>(std::llround(static_cast<double>(n) * p), 0, n);
    }
    return rng_.binomial(n, p);
  }

  /// Two competing outflows from a pool of `n`: the first is Binomial(n, p1),
  /// the second Binomial of the remainder with the conditional probability
  /// p2 / (1 - p1), clamped to 1. Their sum never exceeds `n`.
  std::pair<std::int64_t, std::int64_t> competing(std::int64_t n, double p1, double p2) {
    const std::int64_t first = binomial(n, p1);
    const double rest = 1.0 - p1;
    const double conditional = rest > 0.0 ? std::min(1.0, p2 / rest) : 1.0;
    return {first, binomial(n - first, conditional)};
  }

 private:
  Propagation mode_;
  RandomStream& rng_;
};

}  // namespace detail

/// Advances the state by one day.
/**
 * Exogenous flows (first doses out of S, second doses out of V3/V4) are
 * removed before the random draws; each pool's random outflows are sampled
 * as competing risks so no compartment goes negative and the total
 * population is conserved exactly.
 *
 * Throws MalformedStream if `vax` has no entry for `x.day`.
 */
inline CompartmentState step(const CompartmentState& x, const ModelParams& params, ActionLevel action,
                             const VaccinationStream& vax, RandomStream& rng,
                             Propagation mode = Propagation::kStochastic) {
  const auto [daily_first, daily_second] = vax.doses(x.day);
  detail::TransitionSampler draw{mode, rng};

  const double lambda = force_of_infection(x, params, action);
  const double p_se = 1.0 - std::exp(-lambda);

  // Susceptible.
  const std::int64_t sv = std::min(daily_first, x.S);
  const std::int64_t se = draw.binomial(x.S - sv, p_se);

  // Unvaccinated disease progression.
  const std::int64_t ei = draw.binomial(x.E, params.p_ei);
  const auto [ir, iu] = draw.competing(x.I, params.p_ir, params.p_iu);
  const std::int64_t ur = draw.binomial(x.ICU, params.p_ur);

  // Vaccinated strata.
  const SecondDoses second = second_dose_allocation(x.V[2], x.V[3], daily_second);
  std::array<std::int64_t, kNumVaccineLevels> ve{};
  std::array<std::int64_t, kNumVaccineLevels> vv{};
  for (int j = 0; j < kNumVaccineLevels; ++j) {
    std::int64_t pool = x.V[j];
    if (j == 2) {
      pool -= second.from_v3;
    } else if (j == 3) {
      pool -= second.from_v4;
    }
    const double p_ve =
        vaccinated_exposure_prob(lambda, params.eps[j], params.exponential_vaccinated_exposure);
    if (j < 3) {
      std::tie(ve[j], vv[j]) = draw.competing(pool, p_ve, params.p_vv);
    } else {
      ve[j] = draw.binomial(pool, p_ve);
    }
  }
  const double p_v_iu = icu_admission_prob_vaccinated(x, params);
  const std::int64_t ei_v = draw.binomial(x.EV, params.p_ei);
  const auto [ir_v, iu_v] = draw.competing(x.IV, params.p_ir, p_v_iu);
  const std::int64_t ur_v = draw.binomial(x.ICUV, params.p_ur);

  CompartmentState next = x;
  next.day = x.day + 1;
  next.S = x.S - se - sv;
  next.E = x.E + se - ei;
  next.I = x.I + ei - ir - iu;
  next.ICU = x.ICU + iu - ur;
  next.R = x.R + ir + ur;

  next.V[0] = x.V[0] + sv - vv[0] - ve[0];
  next.V[1] = x.V[1] + vv[0] - vv[1] - ve[1];
  next.V[2] = x.V[2] + vv[1] - vv[2] - second.from_v3 - ve[2];
  next.V[3] = x.V[3] + vv[2] - second.from_v4 - ve[3];
  next.V[4] = x.V[4] + second.from_v3 + second.from_v4 - ve[4];

  std::int64_t ve_total = 0;
  for (auto v : ve) {
    ve_total += v;
  }
  next.EV = x.EV + ve_total - ei_v;
  next.IV = x.IV + ei_v - ir_v - iu_v;
  next.ICUV = x.ICUV + iu_v - ur_v;
  next.RV = x.RV + ir_v + ur_v;
  return next;
}

}  // namespace epicontrol

#endif
