#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "svkit/errors.hpp"

namespace svkit {

// Deterministic generator with identical output on every platform.
// xoshiro256** seeded through splitmix64; avoids std::*_distribution,
// whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed) {
    uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  uint64_t uniform_int(uint64_t n) {
    if (n == 0) throw Error(ErrorCategory::kContract, "uniform_int: n must be positive");
    return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  /// Standard normal via Box-Muller; caches the second deviate.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::vector<double> normal_vector(size_t n, double mean = 0.0, double stddev = 1.0) {
    std::vector<double> out(n);
    for (auto& v : out) v = normal(mean, stddev);
    return out;
  }

  /// Independent child stream; children with distinct tags never collide.
  Rng fork(uint64_t tag) const {
    uint64_t x = seed_ ^ (0x9e3779b97f4a7c15ULL * (tag + 1));
    return Rng(splitmix64(x));
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  uint64_t seed() const { return seed_; }

 private:
  static uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t seed_;
  uint64_t state_[4];
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace svkit
