#pragma once

#include <numbers>

namespace nanopair {

/// CODATA 2018 exact/recommended values, SI units.
struct PhysicalConstants {
  static constexpr double epsilon0 = 8.8541878128e-12;     // F/m
  static constexpr double k_B = 1.380649e-23;              // J/K
  static constexpr double e = 1.602176634e-19;             // C
  static constexpr double amu = 1.66053906660e-27;         // kg
  static constexpr double coulomb_k = 1.0 / (4.0 * std::numbers::pi * epsilon0);
};

using K = PhysicalConstants;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace nanopair
