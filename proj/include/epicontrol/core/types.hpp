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

#ifndef EPICONTROL_CORE_TYPES_HPP
#define EPICONTROL_CORE_TYPES_HPP

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "epicontrol/errors.hpp"

namespace epicontrol {

inline constexpr int kNumActions = 4;
inline constexpr int kNumVaccineLevels = 5;

/// Ordinal intervention stringency, 1 (no intervention) to 4 (full lockdown).
class ActionLevel {
 public:
  constexpr ActionLevel() = default;

  constexpr explicit ActionLevel(int level) : level_{level} {
    if (level < 1 || level > kNumActions) {
      throw InvalidAction{"action level must be in 1.." + std::to_string(kNumActions) + ", got " +
                          std::to_string(level)};
    }
  }

  static constexpr ActionLevel from_index(int index) { return ActionLevel{index + 1}; }

  [[nodiscard]] constexpr int value() const noexcept { return level_; }
  [[nodiscard]] constexpr int index() const noexcept { return level_ - 1; }

  constexpr auto operator<=>(const ActionLevel&) const = default;

 private:
  int level_ = 1;
};

/// The 14 compartment counts of the SEIR-VU model on one day.
struct CompartmentState {
  std::int64_t S = 0;
  std::int64_t E = 0;
  std::int64_t I = 0;
  std::int64_t R = 0;
  std::int64_t ICU = 0;
  std::array<std::int64_t, kNumVaccineLevels> V{};
  std::int64_t EV = 0;
  std::int64_t IV = 0;
  std::int64_t RV = 0;
  std::int64_t ICUV = 0;
  int day = 0;

  [[nodiscard]] std::int64_t total() const noexcept {
    return S + E + I + R + ICU + std::accumulate(V.begin(), V.end(), std::int64_t{0}) + EV + IV + RV +
           ICUV;
  }

  [[nodiscard]] std::int64_t vaccinated() const noexcept {
    return std::accumulate(V.begin(), V.end(), std::int64_t{0});
  }

  /// Occupied ICU beds, vaccinated and unvaccinated.
  [[nodiscard]] std::int64_t icu_load() const noexcept { return ICU + ICUV; }

  [[nodiscard]] std::int64_t infectious() const noexcept { return I + IV; }

  [[nodiscard]] bool nonnegative() const noexcept {
    bool ok = S >= 0 && E >= 0 && I >= 0 && R >= 0 && ICU >= 0 && EV >= 0 && IV >= 0 && RV >= 0 &&
              ICUV >= 0;
    for (auto v : V) {
      ok = ok && v >= 0;
    }
    return ok;
  }

  bool operator==(const CompartmentState&) const = default;
};

/// A population of `n` with `exposed` and `infectious` seeds; everyone else susceptible.
inline CompartmentState seeded_state(std::int64_t n, std::int64_t exposed, std::int64_t infectious) {
  CompartmentState x;
  x.E = exposed;
  x.I = infectious;
  x.S = n - exposed - infectious;
  return x;
}

/// Parameters of the SEIR-VU transition kernel and observation model.
struct ModelParams {
  /// Transmission rate per action level, strictly decreasing.
  std::array<double, kNumActions> beta{0.40, 0.28, 0.18, 0.10};
  double p_ei = 1.0 - std::exp(-1.0 / 9.86);
  double p_ir = 1.0 - std::exp(-1.0 / 10.41);
  double p_iu = 1.0 - std::exp(-1.0 / 10.0);
  double p_ur = 1.0 / 10.0;
  double p_vv = 1.0 / 20.0;
  std::array<double, kNumVaccineLevels> eps{0.50, 0.80, 0.70, 0.60, 0.95};
  std::array<double, kNumVaccineLevels> psi{0.50, 0.75, 0.70, 0.60, 0.89};
  double k_obs = 10.0;
  std::int64_t population = 68'000'000;
  /// Use 1 - exp(-lambda (1 - eps_j)) instead of the linear, clamped form
  /// for vaccinated exposure.
  bool exponential_vaccinated_exposure = false;

  [[nodiscard]] double beta_for(ActionLevel a) const noexcept { return beta[a.index()]; }

  [[nodiscard]] bool beta_ordered() const noexcept {
    for (int j = 0; j + 1 < kNumActions; ++j) {
      if (!(beta[j] > beta[j + 1])) {
        return false;
      }
    }
    return beta[kNumActions - 1] > 0.0;
  }

  void validate() const {
    if (!beta_ordered()) {
      throw ConfigError{"beta must satisfy beta1 > beta2 > beta3 > beta4 > 0"};
    }
    for (double p : {p_ei, p_ir, p_iu, p_ur, p_vv}) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ConfigError{"transition probabilities must lie in [0, 1]"};
      }
    }
    for (int j = 0; j < kNumVaccineLevels; ++j) {
      if (!(eps[j] >= 0.0 && eps[j] <= 1.0 && psi[j] >= 0.0 && psi[j] <= 1.0)) {
        throw ConfigError{"vaccine efficacy levels must lie in [0, 1]"};
      }
    }
    if (!(k_obs > 0.0)) {
      throw ConfigError{"k_obs must be positive"};
    }
    if (population <= 0) {
      throw ConfigError{"population must be positive"};
    }
  }
};

/// Daily first and second vaccine doses, indexed by day.
class VaccinationStream {
 public:
  VaccinationStream() = default;

  explicit VaccinationStream(std::size_t days) : first_(days, 0), second_(days, 0) {}

  VaccinationStream(std::vector<std::int64_t> first, std::vector<std::int64_t> second)
      : first_{std::move(first)}, second_{std::move(second)} {
    if (first_.size() != second_.size()) {
      throw MalformedStream{"first and second dose series differ in length"};
    }
    for (std::size_t t = 0; t < first_.size(); ++t) {
      if (first_[t] < 0 || second_[t] < 0) {
        throw MalformedStream{"negative vaccination count on day " + std::to_string(t)};
      }
    }
  }

  [[nodiscard]] std::size_t days() const noexcept { return first_.size(); }

  /// (first, second) doses given on `day`.
  [[nodiscard]] std::pair<std::int64_t, std::int64_t> doses(int day) const {
    if (day < 0 || static_cast<std::size_t>(day) >= first_.size()) {
      throw MalformedStream{"no vaccination data for day " + std::to_string(day)};
    }
    return {first_[day], second_[day]};
  }

  /// Copy zero-extended to at least `days` entries.
  [[nodiscard]] VaccinationStream padded(std::size_t days) const {
    VaccinationStream out = *this;
    if (out.first_.size() < days) {
      out.first_.resize(days, 0);
      out.second_.resize(days, 0);
    }
    return out;
  }

  [[nodiscard]] const std::vector<std::int64_t>& first() const noexcept { return first_; }
  [[nodiscard]] const std::vector<std::int64_t>& second() const noexcept { return second_; }

  bool operator==(const VaccinationStream&) const = default;

 private:
  std::vector<std::int64_t> first_;
  std::vector<std::int64_t> second_;
};

struct Observation {
  std::int64_t y = 0;
  int day = 0;

  bool operator==(const Observation&) const = default;
};

/// How random transition counts are produced.
enum class Propagation {
  kStochastic,
  /// Every draw replaced by its (rounded) mean.
  kMeanField,
};

}  // namespace epicontrol

#endif
