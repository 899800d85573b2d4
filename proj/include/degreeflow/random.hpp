#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace degreeflow {

/// Pseudo-random stream used by every simulation component.
using Rng = std::mt19937_64;

/// Independent stream for replication `stream` of a run seeded with `seed`.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform01(rng) < p;
}

/// Uniform index in [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline std::size_t poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  return static_cast<std::size_t>(std::poisson_distribution<long long>(mean)(rng));
}

}  // namespace degreeflow
