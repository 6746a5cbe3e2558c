#pragma once

// Seed-stream derivation and the few distributions the simulators need.

#include <cstdint>
#include <random>

namespace adaptfuse {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Independent random streams derived from one master seed. Variants run on
/// the same seed see the same episodes and the same user behavior.
enum class Stream : std::uint64_t {
  kEpisode = 1,
  kUser = 2,
  kSampler = 3,
  kHypothesis = 4,
};

inline Rng make_rng(std::uint64_t master_seed, Stream stream) {
  const std::uint64_t a = splitmix64(master_seed);
  const std::uint64_t b = splitmix64(a ^ (static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ull));
  std::seed_seq seq{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

/// Uniform integer in [lo, hi].
inline long uniform_int(Rng& rng, long lo, long hi) {
  return std::uniform_int_distribution<long>(lo, hi)(rng);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Beta(a, b) via the ratio of two gamma variates.
inline double sample_beta(Rng& rng, double a, double b) {
  const double x = std::gamma_distribution<double>(a, 1.0)(rng);
  const double y = std::gamma_distribution<double>(b, 1.0)(rng);
  return x / (x + y);
}

}  // namespace adaptfuse
