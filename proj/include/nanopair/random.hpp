#pragma once

#include <cstdint>
#include <random>

namespace nanopair {

/// Independent random streams derived from one run seed.
enum class Stream : std::uint32_t { initial_state = 1, thermal_1 = 2, thermal_2 = 3, detection = 4 };

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

}  // namespace nanopair
