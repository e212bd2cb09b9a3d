#pragma once

#include <cstdint>
#include <random>

namespace priu {

// Uniform draw in [0, bound) without modulo bias. std::uniform_int_distribution
// is implementation-defined, so seeded draws would differ across standard libraries.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t max = ~std::uint64_t{0};
  const std::uint64_t limit = max - (max % bound);
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % bound;
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace priu
