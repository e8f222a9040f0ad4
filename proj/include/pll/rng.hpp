#pragma once

// Seeding contract: every random stream is std::mt19937_64 seeded through std::seed_seq
// with four words drawn from splitmix64 applied to (master seed, stream id, purpose).
// Both engines are fully specified by the standard, so a (seed, stream, purpose) triple
// yields the same sequence on every conforming platform and thread schedule.

#include <cstdint>
#include <random>

namespace pll {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_stream(std::uint64_t master_seed, std::uint64_t stream = 0, std::uint64_t purpose = 0) {
  std::uint64_t state = master_seed;
  std::uint64_t mix = splitmix64(state);
  state ^= stream * 0xd1b54a32d192ed03ULL;
  mix ^= splitmix64(state);
  state ^= purpose * 0x8cb92ba72f3d8dd7ULL;
  mix ^= splitmix64(state);
  std::uint64_t s = mix;
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s)),
                    static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s))};
  return Rng(seq);
}

// Uniform on the open interval (0,1): 53 random bits, offset by half an ulp.
inline double uniform_open01(Rng& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

}  // namespace pll
