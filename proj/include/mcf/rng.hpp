#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mcf {

// Deterministic helpers on top of mt19937_64. The std distributions are
// implementation-defined, so reports generated with a fixed seed would not be
// reproducible across standard libraries; these are.
using Rng = std::mt19937_64;

inline double rng_unit(Rng& rng) {
  // 53 random bits -> [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double rng_range(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * rng_unit(rng);
}

// Uniform integer in [lo, hi], rejection sampled.
inline std::int64_t rng_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(rng());  // full range
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return lo + static_cast<std::int64_t>(x % span);
}

inline double rng_gauss(Rng& rng) {
  // Box-Muller; deterministic given the stream.
  double u1 = rng_unit(rng);
  double u2 = rng_unit(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace mcf
