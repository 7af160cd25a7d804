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

// JSON mappings for the model, inference and planning types. Doubles are
// written with round-trip precision, so checkpoints restore bit-exactly.

#ifndef EPICONTROL_IO_JSON_HPP
#define EPICONTROL_IO_JSON_HPP

#include <nlohmann/json.hpp>

#include "epicontrol/core/types.hpp"
#include "epicontrol/inference/smc2.hpp"
#include "epicontrol/planning/convergence.hpp"
#include "epicontrol/planning/qlearning.hpp"
#include "epicontrol/planning/threshold.hpp"
#include "epicontrol/reward.hpp"

namespace epicontrol {

using nlohmann::json;

// Like NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE, but reading leaves fields whose key
// is absent untouched, so a partial document overlays a preset.
#define EPICONTROL_JSON_KEEP_IF_ABSENT(v1)          \
  if (nlohmann_json_j.contains(#v1)) {               \
    nlohmann_json_j.at(#v1).get_to(nlohmann_json_t.v1); \
  }
#define EPICONTROL_JSON_OVERLAY(Type, ...)                                                              \
  inline void to_json(json& nlohmann_json_j, const Type& nlohmann_json_t) {                             \
    NLOHMANN_JSON_EXPAND(NLOHMANN_JSON_PASTE(NLOHMANN_JSON_TO, __VA_ARGS__))                            \
  }                                                                                                     \
  inline void from_json(const json& nlohmann_json_j, Type& nlohmann_json_t) {                           \
    NLOHMANN_JSON_EXPAND(NLOHMANN_JSON_PASTE(EPICONTROL_JSON_KEEP_IF_ABSENT, __VA_ARGS__))              \
  }

inline void to_json(json& j, const ActionLevel& a) { j = a.value(); }
inline void from_json(const json& j, ActionLevel& a) { a = ActionLevel{j.get<int>()}; }

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CompartmentState, S, E, I, R, ICU, V, EV, IV, RV, ICUV, day)
EPICONTROL_JSON_OVERLAY(ModelParams, beta, p_ei, p_ir, p_iu, p_ur, p_vv, eps, psi, k_obs,
                                                population, exponential_vaccinated_exposure)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Observation, y, day)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(StreakCounter, current, ell, runs)
EPICONTROL_JSON_OVERLAY(RewardConfig, kappa_icu, kappa_soec, crash_threshold, crash_penalty,
                                                gamma, natural_log)
EPICONTROL_JSON_OVERLAY(PriorSpec, log_median, log_sd)
EPICONTROL_JSON_OVERLAY(LearnSchedule, eps0, eps_min, decay_fraction, alpha_c,
                                                alpha_per_visit, episodes, slice_days, horizon)
EPICONTROL_JSON_OVERLAY(ConvergenceCriteria, tol_rel, patience, policy_tol, window)

inline void to_json(json& j, const Smc2Config& c) {
  j = json{{"n_theta", c.n_theta},
           {"n_x", c.n_x},
           {"ess_threshold", c.ess_threshold},
           {"inner_ess_threshold", c.inner_ess_threshold},
           {"pmmh_moves", c.pmmh_moves},
           {"rw_scale", c.rw_scale},
           {"prior", c.prior}};
}

/// Reads the sampler settings; `base` and `initial` come from the model section.
inline void from_json(const json& j, Smc2Config& c) {
  c.n_theta = j.value("n_theta", c.n_theta);
  c.n_x = j.value("n_x", c.n_x);
  c.ess_threshold = j.value("ess_threshold", c.ess_threshold);
  c.inner_ess_threshold = j.value("inner_ess_threshold", c.inner_ess_threshold);
  c.pmmh_moves = j.value("pmmh_moves", c.pmmh_moves);
  c.rw_scale = j.value("rw_scale", c.rw_scale);
  if (j.contains("prior")) {
    c.prior = j.at("prior").get<PriorSpec>();
  }
}

inline void to_json(json& j, const VaccinationStream& v) {
  j = json{{"daily_first", v.first()}, {"daily_second", v.second()}};
}
inline void from_json(const json& j, VaccinationStream& v) {
  v = VaccinationStream{j.at("daily_first").get<std::vector<std::int64_t>>(),
                        j.at("daily_second").get<std::vector<std::int64_t>>()};
}

template <class Particle>
void to_json(json& j, const ParticleSet<Particle>& s) {
  j = json{{"particles", s.particles}, {"weights", s.weights}, {"loglik_increments", s.loglik_increments}};
}
template <class Particle>
void from_json(const json& j, ParticleSet<Particle>& s) {
  j.at("particles").get_to(s.particles);
  j.at("weights").get_to(s.weights);
  j.at("loglik_increments").get_to(s.loglik_increments);
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ThetaParticle, theta, inner, log_evidence)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(AssimilationHistory, initial, observations, actions)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RejuvenationStats, triggered, proposals, accepted, last_failed)

inline constexpr int kCloudFormatVersion = 1;

inline void to_json(json& j, const PosteriorCloud& c) {
  j = json{{"format", "epicontrol-cloud"}, {"version", kCloudFormatVersion},
           {"t", c.t},           {"weights", c.weights},
           {"particles", c.particles}, {"history", c.history},
           {"stats", c.stats}};
}
inline void from_json(const json& j, PosteriorCloud& c) {
  if (j.value("format", std::string{}) != "epicontrol-cloud") {
    throw Error{"not a posterior cloud checkpoint"};
  }
  const int version = j.at("version").get<int>();
  if (version != kCloudFormatVersion) {
    throw Error{"unsupported cloud checkpoint version " + std::to_string(version)};
  }
  j.at("t").get_to(c.t);
  j.at("weights").get_to(c.weights);
  j.at("particles").get_to(c.particles);
  j.at("history").get_to(c.history);
  j.at("stats").get_to(c.stats);
}

inline void to_json(json& j, const QTable& q) {
  j = json{{"bins", q.bins()}, {"actions", q.actions()}};
  j["values"] = std::vector<double>(q.values().begin(), q.values().end());
  j["visits"] = std::vector<std::int64_t>(q.visit_counts().begin(), q.visit_counts().end());
}
inline void from_json(const json& j, QTable& q) {
  q = QTable{j.at("bins").get<int>(), j.at("actions").get<int>()};
  const auto values = j.at("values").get<std::vector<double>>();
  const auto visits = j.at("visits").get<std::vector<std::int64_t>>();
  if (values.size() != q.values().size() || visits.size() != values.size()) {
    throw Error{"Q-table payload does not match its shape"};
  }
  std::copy(values.begin(), values.end(), q.values().begin());
  for (int g = 0; g < q.bins(); ++g) {
    for (int a = 0; a < q.actions(); ++a) {
      q.visits(g, a) = visits[g * q.actions() + a];
    }
  }
}

inline void to_json(json& j, const ThresholdTriple& phi) { j = phi.tau; }
inline void from_json(const json& j, ThresholdTriple& phi) {
  const auto t = j.get<std::array<std::int64_t, 3>>();
  phi = ThresholdTriple{t[0], t[1], t[2]};
}

}  // namespace epicontrol

#endif
