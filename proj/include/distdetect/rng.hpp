#pragma once

#include <cstdint>
#include <random>

namespace distdetect {

// std::mt19937_64 output is fixed by the standard, unlike the std
// distributions, so every draw goes through the helpers below.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// trial_seed(base, r) = splitmix64(base ^ splitmix64(r)). Trial r's outcome
// depends only on (base, r), so larger trial counts extend smaller ones.
inline std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t trial) {
  return splitmix64(base_seed ^ splitmix64(trial));
}

// Independent per-trial streams for signals and network draws.
inline Rng signal_stream(std::uint64_t seed) { return Rng(splitmix64(seed ^ 0x5167A15ULL)); }
inline Rng network_stream(std::uint64_t seed) { return Rng(splitmix64(seed ^ 0x4E7C0DEULL)); }

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer on [0, n) by rejection; n > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace distdetect
