#pragma once

#include <cstdint>
#include <random>

namespace holdlab {

// Independent random streams derived from one user seed.
enum RngStream : std::uint32_t {
  kStreamDemand = 1,
  kStreamSharing = 2,
  kStreamTravel = 3,
  kStreamExplore = 4,
  kStreamReplay = 5,
  kStreamInit = 6,
  kStreamScenario = 7,
  kStreamPso = 8,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Deterministic sub-seed for (seed, stream, index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t stream, std::uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ (std::uint64_t{stream} << 32)) + index);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream, std::uint64_t index = 0) {
  return std::mt19937_64(derive_seed(seed, stream, index));
}

}  // namespace holdlab
