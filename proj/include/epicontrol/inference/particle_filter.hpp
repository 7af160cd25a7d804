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

#ifndef EPICONTROL_INFERENCE_PARTICLE_FILTER_HPP
#define EPICONTROL_INFERENCE_PARTICLE_FILTER_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "epicontrol/core/dynamics.hpp"
#include "epicontrol/core/observation.hpp"
#include "epicontrol/core/types.hpp"
#include "epicontrol/inference/resampling.hpp"
#include "epicontrol/random.hpp"

namespace epicontrol {

/// Weighted particle approximation of a filtering distribution.
template <class Particle>
struct ParticleSet {
  std::vector<Particle> particles;
  /// Normalized weights.
  std::vector<double> weights;
  /// Log-likelihood increment estimated at every assimilated step.
  std::vector<double> loglik_increments;

  static ParticleSet uniform(const Particle& p, std::size_t count) {
    ParticleSet set;
    set.particles.assign(count, p);
    set.weights.assign(count, 1.0 / static_cast<double>(count));
    return set;
  }

  [[nodiscard]] std::size_t size() const noexcept { return particles.size(); }

  [[nodiscard]] double log_evidence() const noexcept {
    double total = 0.0;
    for (double v : loglik_increments) {
      total += v;
    }
    return total;
  }
};

struct FilterStepInfo {
  /// log p-hat(y_t | y_{0:t-1}).
  double loglik_increment = 0.0;
  /// Every particle scored the observation at the likelihood floor.
  bool degenerate = false;
  bool resampled = false;
};

/// One bootstrap filter step, in place: propagate, reweight, and resample
/// systematically when the ESS drops below `ess_fraction` of the set size.
/**
 * `propagate(particle, rng)` returns the next particle; `log_likelihood(particle)`
 * scores the current observation. The increment is the log of the weighted
 * mean likelihood, an unbiased estimate on the natural scale.
 */
template <class Particle, class Propagate, class LogLikelihood>
FilterStepInfo filter_step(ParticleSet<Particle>& set, Propagate&& propagate, LogLikelihood&& log_likelihood,
                           RandomStream& rng, double ess_fraction = 0.5) {
  const std::size_t n = set.size();
  std::vector<double> log_w(n);
  for (std::size_t i = 0; i < n; ++i) {
    set.particles[i] = propagate(set.particles[i], rng);
    log_w[i] = std::log(set.weights[i]) + log_likelihood(set.particles[i]);
  }

  FilterStepInfo info;
  const double total = log_sum_exp(log_w);
  if (!std::isfinite(total) || total <= 0.5 * kLogLikelihoodFloor) {
    info.degenerate = true;
    info.loglik_increment = kLogLikelihoodFloor;
    set.loglik_increments.push_back(info.loglik_increment);
    set.weights.assign(n, 1.0 / static_cast<double>(n));
    return info;
  }
  info.loglik_increment = normalize_log_weights(log_w, set.weights);
  set.loglik_increments.push_back(info.loglik_increment);

  if (effective_sample_size(set.weights) < ess_fraction * static_cast<double>(n)) {
    const auto ancestors = systematic_resample(set.weights, n, rng);
    std::vector<Particle> resampled;
    resampled.reserve(n);
    for (auto a : ancestors) {
      resampled.push_back(set.particles[a]);
    }
    set.particles = std::move(resampled);
    set.weights.assign(n, 1.0 / static_cast<double>(n));
    info.resampled = true;
  }
  return info;
}

using InnerParticleSet = ParticleSet<CompartmentState>;

struct PfStepResult {
  InnerParticleSet inner;
  double loglik_increment = 0.0;
  bool degenerate = false;
};

/// Bootstrap filter step for the SEIR-VU model under fixed parameters.
inline PfStepResult pf_step(InnerParticleSet inner, const ModelParams& theta, ActionLevel action,
                            const VaccinationStream& vax, const Observation& y, RandomStream& rng,
                            double ess_fraction = 0.5) {
  auto info = filter_step(
      inner,
      [&](const CompartmentState& x, RandomStream& r) { return step(x, theta, action, vax, r); },
      [&](const CompartmentState& x) { return log_likelihood(y, x, theta); }, rng, ess_fraction);
  return {std::move(inner), info.loglik_increment, info.degenerate};
}

/// Filters `observations` from a point-mass start at `initial`.
/// `actions[i]` governs the transition into `observations[i].day`.
inline InnerParticleSet run_filter(const CompartmentState& initial, const ModelParams& theta,
                                   std::span<const Observation> observations,
                                   std::span<const ActionLevel> actions, const VaccinationStream& vax,
                                   std::size_t n_particles, RandomStream& rng, double ess_fraction = 0.5) {
  auto set = InnerParticleSet::uniform(initial, n_particles);
  set.loglik_increments.reserve(observations.size());
  for (std::size_t t = 0; t < observations.size(); ++t) {
    const auto& y = observations[t];
    const auto action = actions[t];
    filter_step(
        set, [&](const CompartmentState& x, RandomStream& r) { return step(x, theta, action, vax, r); },
        [&](const CompartmentState& x) { return log_likelihood(y, x, theta); }, rng, ess_fraction);
  }
  return set;
}

}  // namespace epicontrol

#endif
