// Copyright 2026 lesionkit contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace lk {

// Splittable counter-style generator (SplitMix64 steps) with hand-rolled
// distributions, so streams keyed by (seed, salt, volume, slice) produce
// identical draws regardless of platform, thread schedule or call order.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Uniform integer in [a, b] inclusive.
  int uniform_int(int a, int b) {
    return a + int(uniform() * double(b - a + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller, one draw per pair of uniforms.
  double normal(double mu, double sigma) {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return mu + sigma * std::sqrt(-2.0 * std::log(u1)) *
                    std::cos(2.0 * std::numbers::pi * u2);
  }

  // Knuth's product method; adequate for the small per-slice rates used.
  int poisson(double lambda) {
    const double limit = std::exp(-lambda);
    int k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

 private:
  uint64_t state_;
};

inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t mix_keys(uint64_t a, uint64_t b) {
  uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  return z ^ (z >> 31);
}

/// Stream keyed by (seed, purpose salt, entity, index): the same key always
/// yields the same stream, independent of evaluation order.
inline Rng stream_for(uint64_t seed, std::string_view salt,
                      std::string_view entity = {}, int64_t index = 0) {
  uint64_t key = mix_keys(seed, fnv1a(salt));
  if (!entity.empty()) key = mix_keys(key, fnv1a(entity));
  key = mix_keys(key, uint64_t(index) + 0x51ul);
  return Rng(key);
}

}  // namespace lk
