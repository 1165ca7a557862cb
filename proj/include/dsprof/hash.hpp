#pragma once

#include <cstdint>
#include <string_view>

namespace dsprof {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for the stream-th independent generator derived from a base seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Salted hash of a string mapped to [0, 1).
constexpr double unit_hash(std::uint64_t salt, std::string_view s) {
  return static_cast<double>(splitmix64(salt ^ fnv1a(s)) >> 11) * 0x1.0p-53;
}

}  // namespace dsprof
