#pragma once

#include <cstdint>
#include <random>

namespace hamid {

/// splitmix64 step; used to derive independent per-stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream derivation rule: master seed -> per-index stream.  Results are
/// therefore independent of evaluation order across indices.
inline std::mt19937_64 derive_stream(std::uint64_t master, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(master) ^ (index + 1)));
}

}  // namespace hamid
