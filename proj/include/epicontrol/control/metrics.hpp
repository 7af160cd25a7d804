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

#ifndef EPICONTROL_CONTROL_METRICS_HPP
#define EPICONTROL_CONTROL_METRICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "epicontrol/control/loop.hpp"

namespace epicontrol {

struct TraceStats {
  double total_reward = 0.0;
  double icu_days = 0.0;
  double peak_icu = 0.0;
  double crash_days = 0.0;
  std::array<double, kNumActions> occupancy{};
};

inline TraceStats trace_stats(const DecisionTrace& t) {
  TraceStats s;
  for (const auto& d : t.days) {
    s.total_reward += d.reward;
    s.icu_days += static_cast<double>(d.icu);
    s.peak_icu = std::max(s.peak_icu, static_cast<double>(d.icu));
    s.crash_days += d.crash ? 1.0 : 0.0;
    s.occupancy[d.action.index()] += 1.0;
  }
  if (!t.days.empty()) {
    for (auto& o : s.occupancy) {
      o /= static_cast<double>(t.days.size());
    }
  }
  return s;
}

struct PolicySummary {
  std::string planner;
  double kappa_soec = 0.0;
  int replicates = 0;
  double total_reward_mean = 0.0;
  double total_reward_sd = 0.0;
  double icu_days_mean = 0.0;
  double peak_icu_mean = 0.0;
  double crash_days_mean = 0.0;
  std::array<double, kNumActions> occupancy{};
};

namespace detail {

/// Mean and sample sd, summed in sorted order so the result ignores input order.
inline std::pair<double, double> mean_sd(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double total = 0.0;
  for (double x : v) {
    total += x;
  }
  const double mean = total / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) {
    ss += (x - mean) * (x - mean);
  }
  return {mean, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

}  // namespace detail

/// One row per (planner, kappa_soec) pair, ordered by planner name then weight.
inline std::vector<PolicySummary> summarize(std::span<const DecisionTrace> traces) {
  if (traces.empty()) {
    throw Error{"summarize needs at least one trace"};
  }
  std::map<std::pair<std::string, double>, std::vector<TraceStats>> groups;
  for (const auto& t : traces) {
    groups[{to_string(t.planner), t.kappa_soec}].push_back(trace_stats(t));
  }
  std::vector<PolicySummary> out;
  for (const auto& [key, stats] : groups) {
    PolicySummary p;
    p.planner = key.first;
    p.kappa_soec = key.second;
    p.replicates = static_cast<int>(stats.size());
    auto column = [&](auto field) {
      std::vector<double> v;
      for (const auto& s : stats) {
        v.push_back(field(s));
      }
      return detail::mean_sd(std::move(v));
    };
    std::tie(p.total_reward_mean, p.total_reward_sd) = column([](const TraceStats& s) { return s.total_reward; });
    p.icu_days_mean = column([](const TraceStats& s) { return s.icu_days; }).first;
    p.peak_icu_mean = column([](const TraceStats& s) { return s.peak_icu; }).first;
    p.crash_days_mean = column([](const TraceStats& s) { return s.crash_days; }).first;
    for (int a = 0; a < kNumActions; ++a) {
      p.occupancy[a] = column([a](const TraceStats& s) { return s.occupancy[a]; }).first;
    }
    out.push_back(std::move(p));
  }
  return out;
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PolicySummary, planner, kappa_soec, replicates, total_reward_mean,
                                   total_reward_sd, icu_days_mean, peak_icu_mean, crash_days_mean, occupancy)

inline void write_summary_csv(std::ostream& out, std::span<const PolicySummary> rows) {
  out.precision(12);
  out << "planner,kappa_soec,replicates,total_reward_mean,total_reward_sd,icu_days_mean,peak_icu_mean,"
         "crash_days_mean,occupancy_1,occupancy_2,occupancy_3,occupancy_4\n";
  for (const auto& r : rows) {
    out << r.planner << ',' << r.kappa_soec << ',' << r.replicates << ',' << r.total_reward_mean << ','
        << r.total_reward_sd << ',' << r.icu_days_mean << ',' << r.peak_icu_mean << ',' << r.crash_days_mean;
    for (double o : r.occupancy) {
      out << ',' << o;
    }
    out << '\n';
  }
}

inline void write_trace_csv(std::ostream& out, const DecisionTrace& t) {
  out.precision(17);
  out << "day,y,icu,action,ell,reward,crash,overridden\n";
  for (const auto& d : t.days) {
    out << d.day << ',' << d.y << ',' << d.icu << ',' << d.action.value() << ',' << d.ell << ',' << d.reward << ','
        << (d.crash ? 1 : 0) << ',' << (d.overridden ? 1 : 0) << '\n';
  }
}

/// Q-table rows `g,a,value,visits`.
inline void write_qtable_csv(std::ostream& out, const QTable& q) {
  out.precision(17);
  out << "g,a,value,visits\n";
  for (int g = 0; g < q.bins(); ++g) {
    for (int a = 0; a < q.actions(); ++a) {
      out << g + 1 << ',' << a + 1 << ',' << q.value(g, a) << ',' << q.visits(g, a) << '\n';
    }
  }
}

}  // namespace epicontrol

#endif
