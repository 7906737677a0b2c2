#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random generation. Every draw is a pure function of
// (key, counter), so volumes can be filled in any order, or in parallel,
// and still come out bit-identical. No libm calls are involved anywhere
// in this header; all operations are IEEE-exact, which makes the streams
// reproducible across platforms and compilers.

namespace anomap::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

/// SplitMix64 finalizer.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Derives an independent stream key from a seed and a stream tag.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag));
}

/// Keyed counter generator: bits(c) = splitmix64(key + (c + 1) * golden).
struct CounterRng {
  std::uint64_t key = 0;

  std::uint64_t bits(std::uint64_t counter) const {
    return splitmix64(key + (counter + 1) * kGolden);
  }

  /// Uniform double in [0, 1), 53 mantissa bits.
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via the 12-uniform sum (Irwin-Hall, variance 1,
  /// support [-6, 6]). Consumes counters [12c, 12c + 12).
  double normal(std::uint64_t counter) const {
    double s = 0.0;
    for (std::uint64_t j = 0; j < 12; ++j) s += uniform(counter * 12 + j);
    return s - 6.0;
  }
};

/// sin(x) from a degree-13 polynomial after exact-order reduction to
/// [-pi/2, pi/2]. Absolute error below 1e-9; uses only +,-,*, floor,
/// so results are bit-identical everywhere.
inline double portable_sin(double x) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  constexpr double pi = 3.1415926535897932384626433832795;
  const double k = std::floor(x / two_pi + 0.5);
  double r = x - k * two_pi; // r in [-pi, pi] up to rounding
  if (r > pi / 2) r = pi - r;
  if (r < -pi / 2) r = -pi - r;
  const double r2 = r * r;
  // Taylor coefficients through x^13.
  double p = 1.0 / 6227020800.0;           // 1/13!
  p = 1.0 / 39916800.0 - r2 * p;           // 1/11!
  p = 1.0 / 362880.0 - r2 * p;             // 1/9!
  p = 1.0 / 5040.0 - r2 * p;               // 1/7!
  p = 1.0 / 120.0 - r2 * p;                // 1/5!
  p = 1.0 / 6.0 - r2 * p;                  // 1/3!
  return r * (1.0 - r2 * p);
}

} // namespace anomap::rng
