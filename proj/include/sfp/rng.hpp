#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, counter), so parallel runs can share a seed without
// coordination and replaying a run reproduces it bit for bit.

namespace sfp::rng {

// SplitMix64 finalizer; passes the usual avalanche tests.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t counter) noexcept {
  return mix64(counter + mix64(stream + mix64(seed)));
}

// Uniform in (0,1): 53 mantissa bits, offset by half an ulp so the result
// is never exactly 0 or 1 (log() and inverse-CDF walks stay safe).
inline double uniform01(std::uint64_t seed, std::uint64_t stream,
                        std::uint64_t counter) noexcept {
  return (static_cast<double>(key(seed, stream, counter) >> 11) + 0.5) *
         0x1.0p-53;
}

// Standard normal via Box-Muller on sub-counters (2c, 2c+1).
inline double normal(std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t counter) noexcept {
  const double u1 = uniform01(seed, stream, 2 * counter);
  const double u2 = uniform01(seed, stream, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.28318530717958647692529 * u2);
}

}  // namespace sfp::rng
