#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "leakprobe/error.hpp"

// Deterministic randomness for the whole toolkit. Every algorithm here is
// pinned (splitmix64 seeding, xoshiro256** state updates, rejection-sampled
// bounded draws, Fisher-Yates), so splits, bootstrap samples and synthetic
// datasets reproduce bit-for-bit from a seed, in any implementation of the
// same recipe.

namespace leakprobe {

/// One step of the splitmix64 generator; advances `state` and returns the
/// next output word.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256** seeded by four consecutive splitmix64 outputs.
class Xoshiro256ss {
 public:
  explicit Xoshiro256ss(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) {
      word = splitmix64_next(sm);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Unbiased draw from [0, bound) via modulo rejection.
  std::uint64_t uniform_below(std::uint64_t bound) {
    if (bound == 0) {
      throw InvalidArgument("uniform_below: bound must be positive");
    }
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) {
        return r % bound;
      }
    }
  }

  /// Uniform double in [0, 1) with 53-bit resolution.
  double uniform_real() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Gaussian draw via the Box-Muller transform; pairs are cached so the
  /// stream consumes two uniforms per two normals.
  double normal(double mean, double sd) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + sd * spare_;
    }
    double u1 = uniform_real();
    if (u1 <= 0.0) {
      u1 = 0x1.0p-53;
    }
    const double u2 = uniform_real();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return mean + sd * radius * std::cos(angle);
  }

  /// Derives a decorrelated seed for stream `index` of `domain` under a base
  /// seed, by chaining splitmix64 steps. Distinct (domain, index) pairs map
  /// to distinct internal states before the final mix.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t domain,
                                   std::uint64_t index) {
    std::uint64_t s = seed;
    s = splitmix64_next(s) + domain;
    s = splitmix64_next(s) + index;
    return splitmix64_next(s);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Seed domains; keeps the split shuffle, per-tree streams and per-image
/// synthesis streams apart even when the user passes one seed everywhere.
inline constexpr std::uint64_t kSplitSeedDomain = 1;
inline constexpr std::uint64_t kForestSeedDomain = 2;
inline constexpr std::uint64_t kSynthSeedDomain = 3;

/// In-place Fisher-Yates shuffle driven by `rng` (back to front, partner
/// drawn with uniform_below).
template <typename T>
void shuffle(std::vector<T>& items, Xoshiro256ss& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace leakprobe
