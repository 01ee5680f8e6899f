#pragma once
// Deterministic random streams shared by every scenario.
//
// Seeding: SplitMix64 expands (seed, stream) into the 256-bit state of a
// xoshiro256** generator. A stream id lets independent consumers (noise mask,
// noise magnitude, ...) draw from non-overlapping sequences of one seed.
//
//   uniform()  = (next() >> 11) * 2^-53            in [0, 1)
//   normal()   = Box-Muller on u1 = 1 - uniform(), u2 = uniform():
//                r = sqrt(-2 ln u1); returns r cos(2 pi u2), caches r sin(2 pi u2)

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>

namespace mewfit {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    SplitMix64 mix(seed ^ (stream * 0xd1b54a32d192ed03ULL));
    for (auto& word : s_) word = mix.next();
  }

  /// Independent child generator; deterministic in (parent state, stream).
  Rng split(std::uint64_t stream) { return Rng(next(), stream + 1); }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by rejection, bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % bound;
  }

  double normal() {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return z;
    }
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phase = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phase);
    return r * std::cos(phase);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> s_{};
  std::optional<double> spare_;
};

}  // namespace mewfit
