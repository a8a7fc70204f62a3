#pragma once

// Counter-split random streams: chunk c of a run seeded with s draws from
// mt19937_64(splitmix64(s ^ splitmix64(c))), so results never depend on how
// chunks are distributed over workers.

#include <cstdint>
#include <random>

namespace shrinklab {

inline constexpr std::uint64_t mc_chunk_size = 4096;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 chunk_stream(std::uint64_t seed, std::uint64_t chunk) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(chunk)));
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace shrinklab
