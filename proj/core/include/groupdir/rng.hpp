#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace groupdir::rng {

// mt19937_64 has a standard-mandated output sequence, so seeded runs are
// bit-identical across platforms. The std distributions are not; every
// engine-to-value mapping below is spelled out by hand instead.
using Engine = std::mt19937_64;

// Uniform in [0, 1) with 53 bits of mantissa.
inline double uniform_unit(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(eng);
}

// Box-Muller, cosine branch only. Two engine draws per value.
inline double normal(Engine& eng) {
  double u1 = uniform_unit(eng);
  while (u1 <= 0.0) u1 = uniform_unit(eng);
  const double u2 = uniform_unit(eng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Unbiased integer in [0, n) by rejection.
inline std::uint64_t below(Engine& eng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = eng();
  while (x >= limit) x = eng();
  return x % n;
}

// Fisher-Yates; std::shuffle leaves the draw pattern implementation-defined.
template <typename T>
void shuffle(std::vector<T>& v, Engine& eng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[below(eng, i)]);
  }
}

}  // namespace groupdir::rng
