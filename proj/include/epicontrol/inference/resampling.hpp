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

#ifndef EPICONTROL_INFERENCE_RESAMPLING_HPP
#define EPICONTROL_INFERENCE_RESAMPLING_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "epicontrol/random.hpp"

namespace epicontrol {

/// Effective sample size 1 / sum(w^2) of a range of (not necessarily normalized) weights.
template <class Range>
double effective_sample_size(const Range& weights) {
  double total = 0.0;
  double squares = 0.0;
  for (double w : weights) {
    total += w;
    squares += w * w;
  }
  if (total <= 0.0) {
    return 0.0;
  }
  return total * total / squares;
}

/// Numerically stable log(sum(exp(x))).
inline double log_sum_exp(std::span<const double> x) {
  if (x.empty()) {
    return -std::numeric_limits<double>::infinity();
  }
  const double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) {
    return m;
  }
  double s = 0.0;
  for (double v : x) {
    s += std::exp(v - m);
  }
  return m + std::log(s);
}

/// Turns log-weights into normalized weights; returns the log of their sum.
inline double normalize_log_weights(std::span<const double> log_weights, std::vector<double>& weights) {
  const double total = log_sum_exp(log_weights);
  weights.resize(log_weights.size());
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    weights[i] = std::exp(log_weights[i] - total);
  }
  const double check = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) {
    w /= check;
  }
  return total;
}

/// Systematic resampling: `count` ancestor indices from one uniform offset.
inline std::vector<std::size_t> systematic_resample(std::span<const double> weights, std::size_t count,
                                                    RandomStream& rng) {
  std::vector<std::size_t> ancestors(count);
  if (count == 0 || weights.empty()) {
    return ancestors;
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double spacing = total / static_cast<double>(count);
  double position = rng.uniform() * spacing;
  double cumulative = weights[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < count; ++i) {
    while (cumulative <= position && j + 1 < weights.size()) {
      ++j;
      cumulative += weights[j];
    }
    ancestors[i] = j;
    position += spacing;
  }
  return ancestors;
}

}  // namespace epicontrol

#endif
