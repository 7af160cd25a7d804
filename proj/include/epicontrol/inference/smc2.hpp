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

#ifndef EPICONTROL_INFERENCE_SMC2_HPP
#define EPICONTROL_INFERENCE_SMC2_HPP

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "epicontrol/core/types.hpp"
#include "epicontrol/inference/particle_filter.hpp"
#include "epicontrol/inference/resampling.hpp"
#include "epicontrol/random.hpp"

namespace epicontrol {

/// Prior over the transmission rates: independent log-normals, sorted so
/// that beta1 > beta2 > beta3 > beta4.
struct PriorSpec {
  double log_median = std::log(0.25);
  double log_sd = 0.5;

  [[nodiscard]] ModelParams sample(const ModelParams& base, RandomStream& rng) const {
    ModelParams theta = base;
    do {
      for (auto& b : theta.beta) {
        b = std::exp(log_median + log_sd * rng.normal());
      }
      std::sort(theta.beta.begin(), theta.beta.end(), std::greater<>{});
    } while (!theta.beta_ordered());
    return theta;
  }

  /// Log-density of log(beta) on the ordered cone, up to a constant.
  [[nodiscard]] double log_density(const std::array<double, kNumActions>& log_beta) const {
    for (int j = 0; j + 1 < kNumActions; ++j) {
      if (!(log_beta[j] > log_beta[j + 1])) {
        return -std::numeric_limits<double>::infinity();
      }
    }
    double lp = 0.0;
    for (double u : log_beta) {
      const double z = (u - log_median) / log_sd;
      lp -= 0.5 * z * z;
    }
    return lp;
  }
};

struct Smc2Config {
  int n_theta = 500;
  int n_x = 200;
  /// Outer resample-move trigger as a fraction of n_theta.
  double ess_threshold = 0.5;
  /// Inner resampling trigger as a fraction of n_x.
  double inner_ess_threshold = 0.5;
  int pmmh_moves = 3;
  /// Random-walk covariance as a multiple of the cloud's log-beta covariance.
  double rw_scale = 0.5;
  PriorSpec prior;
  /// Fixed constants; only beta is inferred.
  ModelParams base;
  CompartmentState initial = seeded_state(base.population, 100, 100);
};

/// Everything assimilated so far, kept so rejuvenation can refilter from day zero.
struct AssimilationHistory {
  CompartmentState initial;
  std::vector<Observation> observations;
  std::vector<ActionLevel> actions;
};

struct ThetaParticle {
  ModelParams theta;
  InnerParticleSet inner;
  /// Sum of the inner filter's log-likelihood increments.
  double log_evidence = 0.0;
};

struct RejuvenationStats {
  int triggered = 0;
  int proposals = 0;
  int accepted = 0;
  /// Acceptance was zero across all particles in the latest move.
  bool last_failed = false;
};

/// SMC^2 state: weighted parameter particles, each carrying an inner filter.
struct PosteriorCloud {
  std::vector<ThetaParticle> particles;
  std::vector<double> weights;
  /// Last assimilated day.
  int t = 0;
  AssimilationHistory history;
  RejuvenationStats stats;

  [[nodiscard]] std::size_t size() const noexcept { return particles.size(); }
  [[nodiscard]] double ess() const { return effective_sample_size(weights); }
};

namespace detail {

inline std::array<double, kNumActions> log_beta(const ModelParams& theta) {
  std::array<double, kNumActions> u{};
  for (int j = 0; j < kNumActions; ++j) {
    u[j] = std::log(theta.beta[j]);
  }
  return u;
}

inline void pmmh_rejuvenate(PosteriorCloud& cloud, const VaccinationStream& vax, RandomStream rng,
                            const Smc2Config& cfg) {
  const std::size_t n = cloud.size();
  {
    auto resample_rng = rng.derive(0);
    const auto ancestors = systematic_resample(cloud.weights, n, resample_rng);
    std::vector<ThetaParticle> survivors;
    survivors.reserve(n);
    for (auto a : ancestors) {
      survivors.push_back(cloud.particles[a]);
    }
    cloud.particles = std::move(survivors);
    cloud.weights.assign(n, 1.0 / static_cast<double>(n));
  }

  using Vec = Eigen::Matrix<double, kNumActions, 1>;
  using Mat = Eigen::Matrix<double, kNumActions, kNumActions>;
  Vec mean = Vec::Zero();
  for (const auto& p : cloud.particles) {
    mean += Eigen::Map<const Vec>(log_beta(p.theta).data());
  }
  mean /= static_cast<double>(n);
  Mat cov = Mat::Zero();
  for (const auto& p : cloud.particles) {
    const Vec d = Eigen::Map<const Vec>(log_beta(p.theta).data()) - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(std::max<std::size_t>(n - 1, 1));
  Mat proposal = cfg.rw_scale * cov + 1e-8 * Mat::Identity();
  const Mat chol = Eigen::LLT<Mat>(proposal).matrixL();

  ++cloud.stats.triggered;
  const auto& h = cloud.history;
  for (int move = 0; move < cfg.pmmh_moves; ++move) {
    int accepted = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto move_rng = rng.derive({1, static_cast<std::uint64_t>(move), i});
      auto& particle = cloud.particles[i];
      const auto current = log_beta(particle.theta);
      Vec z;
      for (int j = 0; j < kNumActions; ++j) {
        z[j] = move_rng.normal();
      }
      const Vec step_vec = chol * z;
      std::array<double, kNumActions> proposed{};
      for (int j = 0; j < kNumActions; ++j) {
        proposed[j] = current[j] + step_vec[j];
      }
      const double lp_new = cfg.prior.log_density(proposed);
      ++cloud.stats.proposals;
      if (!std::isfinite(lp_new)) {
        continue;
      }
      ModelParams candidate = particle.theta;
      for (int j = 0; j < kNumActions; ++j) {
        candidate.beta[j] = std::exp(proposed[j]);
      }
      auto filtered = run_filter(h.initial, candidate, h.observations, h.actions, vax,
                                 static_cast<std::size_t>(cfg.n_x), move_rng, cfg.inner_ess_threshold);
      const double ll_new = filtered.log_evidence();
      const double log_ratio = ll_new + lp_new - particle.log_evidence - cfg.prior.log_density(current);
      if (std::log(move_rng.uniform()) < log_ratio) {
        particle.theta = candidate;
        particle.inner = std::move(filtered);
        particle.log_evidence = ll_new;
        ++accepted;
      }
    }
    cloud.stats.accepted += accepted;
    cloud.stats.last_failed = accepted == 0;
  }
}

}  // namespace detail

/// Cloud drawn from the prior, every inner filter at the point mass `cfg.initial`.
inline PosteriorCloud initial_cloud(const Smc2Config& cfg, RandomStream rng) {
  PosteriorCloud cloud;
  cloud.t = cfg.initial.day;
  cloud.history.initial = cfg.initial;
  cloud.particles.reserve(cfg.n_theta);
  for (int i = 0; i < cfg.n_theta; ++i) {
    auto prior_rng = rng.derive(static_cast<std::uint64_t>(i));
    ThetaParticle p;
    p.theta = cfg.prior.sample(cfg.base, prior_rng);
    p.inner = InnerParticleSet::uniform(cfg.initial, static_cast<std::size_t>(cfg.n_x));
    cloud.particles.push_back(std::move(p));
  }
  cloud.weights.assign(cfg.n_theta, 1.0 / static_cast<double>(cfg.n_theta));
  return cloud;
}

/// Assimilates the observation of day cloud.t + 1.
/**
 * Each parameter particle is reweighted by its inner filter's likelihood
 * increment. When the outer ESS falls below the threshold, parameters are
 * resampled and moved by particle-marginal Metropolis-Hastings, refiltering
 * the full history for every proposal. Throws DegeneracyError when every
 * inner filter is degenerate.
 */
inline PosteriorCloud smc2_assimilate(PosteriorCloud cloud, const Observation& y, ActionLevel action,
                                      const VaccinationStream& vax, RandomStream rng, const Smc2Config& cfg) {
  if (y.day != cloud.t + 1) {
    throw Error{"observation for day " + std::to_string(y.day) + " does not follow cloud day " +
                std::to_string(cloud.t)};
  }
  const std::size_t n = cloud.size();
  std::vector<double> log_w(n);
  bool any_alive = false;
  for (std::size_t i = 0; i < n; ++i) {
    auto inner_rng = rng.derive({0, i});
    auto& p = cloud.particles[i];
    const auto& theta = p.theta;
    const auto info = filter_step(
        p.inner, [&](const CompartmentState& x, RandomStream& r) { return step(x, theta, action, vax, r); },
        [&](const CompartmentState& x) { return log_likelihood(y, x, theta); }, inner_rng,
        cfg.inner_ess_threshold);
    p.log_evidence += info.loglik_increment;
    any_alive = any_alive || !info.degenerate;
    log_w[i] = std::log(cloud.weights[i]) + info.loglik_increment;
  }
  if (!any_alive) {
    throw DegeneracyError{"every inner filter is degenerate at day " + std::to_string(y.day)};
  }
  normalize_log_weights(log_w, cloud.weights);
  cloud.history.observations.push_back(y);
  cloud.history.actions.push_back(action);
  cloud.t = y.day;

  if (cloud.ess() < cfg.ess_threshold * static_cast<double>(n)) {
    detail::pmmh_rejuvenate(cloud, vax, rng.derive(1), cfg);
  }
  return cloud;
}

/// Prior cloud advanced through a warm-up window of observations.
inline PosteriorCloud warm_start(const Smc2Config& cfg, std::span<const Observation> observations,
                                 std::span<const ActionLevel> actions, const VaccinationStream& vax,
                                 RandomStream rng) {
  if (actions.size() < observations.size()) {
    throw Error{"warm-up action timeline shorter than the observation window"};
  }
  auto cloud = initial_cloud(cfg, rng.derive(0));
  for (std::size_t t = 0; t < observations.size(); ++t) {
    cloud = smc2_assimilate(std::move(cloud), observations[t], actions[t], vax,
                            rng.derive({1, static_cast<std::uint64_t>(observations[t].day)}), cfg);
  }
  return cloud;
}

/// K independent (parameters, latent state) draws from the cloud.
inline std::vector<std::pair<ModelParams, CompartmentState>> sample_posterior(const PosteriorCloud& cloud,
                                                                              int k, RandomStream& rng) {
  if (k < 1) {
    throw Error{"sample_posterior requires k >= 1"};
  }
  std::discrete_distribution<std::size_t> pick_theta(cloud.weights.begin(), cloud.weights.end());
  std::vector<std::pair<ModelParams, CompartmentState>> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) {
    const auto& p = cloud.particles[pick_theta(rng)];
    std::discrete_distribution<std::size_t> pick_x(p.inner.weights.begin(), p.inner.weights.end());
    out.emplace_back(p.theta, p.inner.particles[pick_x(rng)]);
  }
  return out;
}

/// Weighted quantile with the inverse-CDF convention.
inline double weighted_quantile(std::span<const double> values, std::span<const double> weights, double q) {
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  double total = 0.0;
  for (double w : weights) {
    total += w;
  }
  double cumulative = 0.0;
  for (auto i : order) {
    cumulative += weights[i] / total;
    if (cumulative >= q) {
      return values[i];
    }
  }
  return values[order.back()];
}

/// 5%, 50% and 95% weighted quantiles of beta_j for every action level.
inline std::array<std::array<double, 3>, kNumActions> beta_quantiles(const PosteriorCloud& cloud) {
  std::array<std::array<double, 3>, kNumActions> out{};
  std::vector<double> values(cloud.size());
  for (int j = 0; j < kNumActions; ++j) {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      values[i] = cloud.particles[i].theta.beta[j];
    }
    out[j] = {weighted_quantile(values, cloud.weights, 0.05), weighted_quantile(values, cloud.weights, 0.5),
              weighted_quantile(values, cloud.weights, 0.95)};
  }
  return out;
}

}  // namespace epicontrol

#endif
