#pragma once

#include <cstdint>
#include <initializer_list>

namespace lsgm {

/// splitmix64 finaliser; derives independent stream seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> salt) {
  std::uint64_t z = base;
  for (std::uint64_t s : salt) {
    z += 0x9e3779b97f4a7c15ULL + s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
  }
  return z;
}

}  // namespace lsgm
