#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace cwds {

/// Counter-based SplitMix64: output k of stream `seed` is mix(seed + (k+1) * 0x9E3779B97F4A7C15).
/// Any language with 64-bit unsigned wraparound reproduces the same sequence.
class SplitMix64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t at(std::uint64_t seed, std::uint64_t counter) {
    return mix(seed + (counter + 1) * kGamma);
  }

  constexpr std::uint64_t next() {
    state_ += kGamma;
    return mix(state_);
  }

  /// Uniform on (0, 1]: ((x >> 11) + 1) * 2^-53.
  static constexpr double to_unit(std::uint64_t x) {
    return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
  }

  double uniform() { return to_unit(next()); }

 private:
  std::uint64_t state_;
};

/// Box-Muller pair k of stream `seed`, built from counters 2k and 2k+1:
/// r = sqrt(-2 ln u1), returns (r cos(2 pi u2), r sin(2 pi u2)).
inline std::pair<double, double> gaussian_pair(std::uint64_t seed, std::uint64_t k) {
  const double u1 = SplitMix64::to_unit(SplitMix64::at(seed, 2 * k));
  const double u2 = SplitMix64::to_unit(SplitMix64::at(seed, 2 * k + 1));
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace cwds
