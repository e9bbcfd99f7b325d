#pragma once

#include <cstdint>
#include <random>

namespace cellstream {

// All randomness flows through mt19937_64 streams. A stream is named by a
// (base seed, stream key) pair so that independent consumers (one video, one
// epoch, one view) never share draws and serial/parallel execution produce
// identical results.
using Rng = std::mt19937_64;

// splitmix64 finalizer (Steele, Lea & Flood; public-domain reference code).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Seed of the key-th derived stream: the (key+1)-th output of the splitmix64
// sequence started at `base`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t key) {
  return mix64(base + 0x9e3779b97f4a7c15ull * (key + 1));
}

inline Rng make_stream(std::uint64_t base, std::uint64_t key) {
  return Rng(derive_seed(base, key));
}

// +1 or -1 with equal probability.
inline int rademacher(Rng& rng) { return (rng() & 1ull) ? 1 : -1; }

}  // namespace cellstream
