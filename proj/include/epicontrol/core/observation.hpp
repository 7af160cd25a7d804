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

#ifndef EPICONTROL_CORE_OBSERVATION_HPP
#define EPICONTROL_CORE_OBSERVATION_HPP

#include <cmath>
#include <cstdint>

#include "epicontrol/core/types.hpp"
#include "epicontrol/random.hpp"

namespace epicontrol {

/// Log-weight assigned to observations that are impossible under a state.
inline constexpr double kLogLikelihoodFloor = -1e30;

/// Reported ICU count: NegBin(k_obs, k_obs / (k_obs + H)) with H the ICU load,
/// so its mean is H. Mean-field mode reports H itself.
inline Observation observe(const CompartmentState& x, const ModelParams& params, RandomStream& rng,
                           Propagation mode = Propagation::kStochastic) {
  const auto load = x.icu_load();
  if (mode == Propagation::kMeanField) {
    return {load, x.day};
  }
  return {rng.negative_binomial_mean(params.k_obs, static_cast<double>(load)), x.day};
}

/// Exact NegBin log-pmf of `y` given the ICU load `load`.
inline double negbin_log_pmf(std::int64_t y, double load, double k) {
  if (y < 0) {
    return kLogLikelihoodFloor;
  }
  if (load <= 0.0) {
    return y == 0 ? 0.0 : kLogLikelihoodFloor;
  }
  const double yd = static_cast<double>(y);
  const double log_denominator = std::log(k + load);
  return std::lgamma(yd + k) - std::lgamma(k) - std::lgamma(yd + 1.0) +
         k * (std::log(k) - log_denominator) + yd * (std::log(load) - log_denominator);
}

inline double log_likelihood(const Observation& y, const CompartmentState& x, const ModelParams& params) {
  return negbin_log_pmf(y.y, static_cast<double>(x.icu_load()), params.k_obs);
}

}  // namespace epicontrol

#endif
