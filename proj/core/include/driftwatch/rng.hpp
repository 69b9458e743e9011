#pragma once

#include <cstdint>
#include <random>

namespace driftwatch {

// splitmix64; used for seed derivation and hashing so that results do not
// depend on the standard library's distribution implementations.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) { return mix64(mix64(a) ^ b); }

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(mix64(a, b) ^ c);
}

// Unbiased bounded draw (Lemire) on top of mt19937_64. uniform_int_distribution
// is implementation-defined, so all in-engine randomness goes through these.
inline std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) return 0;
  while (true) {
    std::uint64_t x = rng();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo >= bound || lo >= (-bound) % bound) return static_cast<std::uint64_t>(m >> 64);
  }
}

inline double draw_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
}

inline double draw_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * draw_unit(rng);
}

}  // namespace driftwatch
