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

#ifndef EPICONTROL_RANDOM_HPP
#define EPICONTROL_RANDOM_HPP

#include <gsl/gsl_randist.h>
#include <gsl/gsl_rng.h>

#include <cstdint>
#include <initializer_list>
#include <random>

namespace epicontrol {

namespace detail {

// Exposes a std::mt19937_64 to GSL's samplers without copying its state.
inline unsigned long gsl_engine_get(void* state) {
  return static_cast<unsigned long>((*static_cast<std::mt19937_64*>(state))());
}

inline double gsl_engine_get_double(void* state) {
  return static_cast<double>((*static_cast<std::mt19937_64*>(state))() >> 11) * 0x1.0p-53;
}

inline void gsl_engine_set(void* /*state*/, unsigned long /*seed*/) {}

inline const gsl_rng_type kGslEngineType{
    "epicontrol_mt19937_64", ~0UL, 0UL, sizeof(std::mt19937_64),
    &gsl_engine_set,         &gsl_engine_get, &gsl_engine_get_double};

}  // namespace detail

/// SplitMix64 finalizer, used to derive well-separated child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// A seedable random stream that can be split into independent children.
/**
 * Every child is identified by a path of integer tags, e.g.
 * `root.derive({replicate, block, rollout})`. The child seed depends only on
 * the parent seed and the tags, never on how many numbers the parent has
 * already produced, so results do not depend on evaluation order.
 */
class RandomStream {
 public:
  using result_type = std::mt19937_64::result_type;

  explicit RandomStream(std::uint64_t seed = 0) : seed_{seed}, engine_{mix_seed(seed)} {}

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  [[nodiscard]] RandomStream derive(std::initializer_list<std::uint64_t> tags) const {
    std::uint64_t h = mix_seed(seed_ ^ 0x5851f42d4c957f2dULL);
    for (auto tag : tags) {
      h = mix_seed(h ^ mix_seed(tag + 0x2545f4914f6cdd1dULL));
    }
    return RandomStream{h};
  }

  [[nodiscard]] RandomStream derive(std::uint64_t tag) const { return derive({tag}); }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  double uniform() { return std::uniform_real_distribution<double>{0.0, 1.0}(engine_); }
  double normal() { return std::normal_distribution<double>{0.0, 1.0}(engine_); }

  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>{lo, hi}(engine_); }

  std::int64_t binomial(std::int64_t n, double p) {
    if (n <= 0 || p <= 0.0) {
      return 0;
    }
    if (p >= 1.0) {
      return n;
    }
    gsl_rng view = gsl_view();
    return static_cast<std::int64_t>(gsl_ran_binomial(&view, p, static_cast<unsigned int>(n)));
  }

  /// Negative binomial with real-valued size `k` and the given mean.
  std::int64_t negative_binomial_mean(double k, double mean) {
    if (mean <= 0.0) {
      return 0;
    }
    gsl_rng view = gsl_view();
    return static_cast<std::int64_t>(gsl_ran_negative_binomial(&view, k / (k + mean), k));
  }

 private:
  gsl_rng gsl_view() { return gsl_rng{&detail::kGslEngineType, &engine_}; }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace epicontrol

#endif
