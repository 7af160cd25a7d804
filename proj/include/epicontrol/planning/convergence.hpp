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

#ifndef EPICONTROL_PLANNING_CONVERGENCE_HPP
#define EPICONTROL_PLANNING_CONVERGENCE_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "epicontrol/planning/qlearning.hpp"

namespace epicontrol {

struct ConvergenceReport {
  /// max_{g,a} |Qbar_e - Qbar_{e-1}| for every episode e.
  std::vector<double> max_delta;
  /// Fraction of bins whose greedy action changed during episode e.
  std::vector<double> policy_change_fraction;
  std::optional<int> converged_at;
};

/// Episode-wise trace of the averaged table, replayed from per-draw logs.
/**
 * `logs[k][e]` holds the cell changes draw k made in episode e; `start` is
 * the common table every draw began from. Episode e of the average is the
 * mean of the draws' tables after their own episode e.
 */
inline ConvergenceReport replay_average(const QTable& start, std::span<const std::vector<EpisodeDelta>> logs) {
  ConvergenceReport report;
  if (logs.empty()) {
    return report;
  }
  const double k = static_cast<double>(logs.size());
  std::size_t episodes = logs[0].size();
  for (const auto& log : logs) {
    episodes = std::min(episodes, log.size());
  }
  QTable avg = start;
  const int actions = avg.actions();
  std::vector<int> greedy(avg.bins());
  for (int g = 0; g < avg.bins(); ++g) {
    greedy[g] = avg.greedy(g);
  }
  std::unordered_map<int, double> change;
  for (std::size_t e = 0; e < episodes; ++e) {
    change.clear();
    for (const auto& log : logs) {
      for (const auto& [cell, d] : log[e].cells) {
        change[cell] += d / k;
      }
    }
    double max_delta = 0.0;
    for (const auto& [cell, d] : change) {
      avg.values()[cell] += d;
      max_delta = std::max(max_delta, std::abs(d));
    }
    int flipped = 0;
    for (const auto& [cell, d] : change) {
      const int g = cell / actions;
      const int now = avg.greedy(g);
      if (now != greedy[g]) {
        greedy[g] = now;
        ++flipped;
      }
    }
    report.max_delta.push_back(max_delta);
    report.policy_change_fraction.push_back(static_cast<double>(flipped) / avg.bins());
  }
  return report;
}

struct ConvergenceCriteria {
  double tol_rel = 1e-4;
  int patience = 50;
  double policy_tol = 0.01;
  /// Episodes over which the normalizing maximum is taken.
  int window = 2000;
};

/// First episode closing a run of `patience` consecutive calm episodes.
/**
 * An episode is calm when its maxΔQ is below tol_rel times the largest
 * maxΔQ of the first `window` episodes and fewer than policy_tol of the
 * bins changed greedy action.
 */
inline std::optional<int> convergence_check(const ConvergenceReport& report, const ConvergenceCriteria& c = {}) {
  const auto& d = report.max_delta;
  const std::size_t head = std::min(d.size(), static_cast<std::size_t>(std::max(c.window, 0)));
  double normalizer = 0.0;
  for (std::size_t e = 0; e < head; ++e) {
    normalizer = std::max(normalizer, d[e]);
  }
  int run = 0;
  for (std::size_t e = 0; e < d.size(); ++e) {
    const bool small = normalizer == 0.0 ? d[e] == 0.0 : d[e] / normalizer < c.tol_rel;
    const bool stable = e >= report.policy_change_fraction.size() || report.policy_change_fraction[e] < c.policy_tol;
    run = small && stable ? run + 1 : 0;
    if (run >= c.patience) {
      return static_cast<int>(e);
    }
  }
  return std::nullopt;
}

}  // namespace epicontrol

#endif
