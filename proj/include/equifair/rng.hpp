#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace equifair::rng {

// Counter-based randomness: every draw is a pure function of (seed, key,
// stream), so results do not depend on evaluation order or thread count.

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a; used to turn opaque sample ids into keys.
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t bits(std::uint64_t seed, std::uint64_t key, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(splitmix64(seed) ^ key) ^ (stream * 0xd1b54a32d192ed03ULL));
}

// Uniform in [0, 1) with 53 random bits.
constexpr double uniform(std::uint64_t seed, std::uint64_t key, std::uint64_t stream) noexcept {
  return static_cast<double>(bits(seed, key, stream) >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two independent streams.
inline double normal(std::uint64_t seed, std::uint64_t key, std::uint64_t stream) noexcept {
  const double u1 = 1.0 - uniform(seed, key, 2 * stream);  // (0, 1]
  const double u2 = uniform(seed, key, 2 * stream + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Derives an independent seed for a named sub-task.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept {
  return splitmix64(seed ^ hash_string(label));
}

}  // namespace equifair::rng
