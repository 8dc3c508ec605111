#pragma once

#include <cstdint>
#include <string_view>

#include "airflux/common.hpp"

namespace airflux {

/// FNV-1a 64-bit over raw bytes. Stable across platforms and languages,
/// which keeps shard assignment reproducible everywhere.
constexpr uint64_t fnv1a64(std::string_view bytes, uint64_t seed = 0xcbf29ce484222325ull) {
  uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a64(const void* data, size_t len) {
  return fnv1a64(std::string_view(static_cast<const char*>(data), len));
}

/// Deterministic shard assignment: FNV-1a 64 of the key, mod n.
inline RankId hash_shard(std::string_view key, uint32_t n_shards) {
  if (n_shards == 0) fail(ErrorCode::ConfigError, "hash_shard requires n >= 1");
  return static_cast<RankId>(fnv1a64(key) % n_shards);
}

/// splitmix64 step; used to derive independent sub-seeds from one master seed.
constexpr uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Sub-seed for a named role (e.g. "pairs", rank index), stable given the master seed.
inline uint64_t derive_seed(uint64_t master, std::string_view role, uint64_t index = 0) {
  uint64_t s = master ^ fnv1a64(role);
  s ^= 0x9e3779b97f4a7c15ull * (index + 1);
  return splitmix64(s);
}

}  // namespace airflux
