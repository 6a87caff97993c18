#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "nanopair/constants.hpp"
#include "nanopair/errors.hpp"
#include "nanopair/types.hpp"

namespace nanopair {

/// Linear Paul trap: RF amplitude V0 on the rods, static U0 on the endcaps.
struct TrapConfig {
  double v0 = 0.0;        // V
  double u0 = 0.0;        // V
  double omega_rf = 0.0;  // rad/s
  double eta = 1.0;
  double kappa = 1.0;
  double r0 = 0.0;  // m
  double z0 = 0.0;  // m

  void validate() const;
};

/// One charged nanoparticle. The charge is held as a signed count of
/// elementary charges so ratios like Q2/Q1 stay exact.
struct ParticleSpec {
  double mass = 0.0;  // kg
  std::int64_t charge_e = 0;
  double gamma0 = 0.0;  // rad/s

  double charge() const { return static_cast<double>(charge_e) * K::e; }
  void validate() const;
};

double mass_from_radius(double radius, double density);

/// Kinetic-regime (Epstein) gas damping rate for a sphere, diffuse
/// reflection (delta = 1 + pi/8):
///   gamma = delta * P * sqrt(8 m_gas / (pi k_B T)) / (rho * r)
/// Defaults are room-temperature air.
double gamma_from_pressure(double pressure_pa, double radius, double density,
                           double gas_temperature = 293.15,
                           double gas_molecular_mass = 28.97 * K::amu);

inline double mbar_to_pa(double mbar) { return mbar * 100.0; }

enum class Axis { x = 0, y = 1, z = 2 };
const char* name_of(Axis axis);

/// Single-particle Mathieu parameters and secular frequencies, indexed by Axis.
struct StabilityParams {
  Eigen::Vector3d q = Eigen::Vector3d::Zero();
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega_sec = Eigen::Vector3d::Zero();  // rad/s
  /// |a_n| <= 0.16 and |q_n| <= 0.4 on every axis.
  bool approximation_valid = true;

  double q_of(Axis ax) const { return q[static_cast<int>(ax)]; }
  double a_of(Axis ax) const { return a[static_cast<int>(ax)]; }
  double omega_of(Axis ax) const { return omega_sec[static_cast<int>(ax)]; }
};

inline constexpr double kMathieuQLimit = 0.4;
inline constexpr double kMathieuALimit = kMathieuQLimit * kMathieuQLimit;

StabilityParams stability_params(const TrapConfig& trap, const ParticleSpec& p);

/// Axial spring constant u_i = 2 Q_i kappa U0 / z0^2 (N/m).
double axial_spring(const TrapConfig& trap, const ParticleSpec& p);
/// Uncoupled axial frequency sqrt(u_i / m_i).
double axial_frequency(const TrapConfig& trap, const ParticleSpec& p);

struct Equilibrium {
  double z1 = 0.0;
  double z2 = 0.0;
  double separation = 0.0;
};

/// Equilibrium of the two-particle axial potential. z1 < 0 < z2 and the
/// charge-weighted centre u1 z1 + u2 z2 vanishes.
Equilibrium equilibrium_positions(const TrapConfig& trap, const ParticleSpec& p1,
                                  const ParticleSpec& p2);

// ---------------------------------------------------------------------------
// Linearised normal modes. The generic pieces are templated on the scalar so
// the same algebra can be evaluated in extended precision.

/// Hessian of V(z1, z2) at equilibrium: diag(u) + c [[1, -1], [-1, 1]],
/// with c = 2 Q1 Q2 / (4 pi eps0 z_sep^3).
template <class Scalar>
Mat2<Scalar> stiffness_matrix(Scalar u1, Scalar u2, Scalar coupling) {
  Mat2<Scalar> h;
  h << u1 + coupling, -coupling, -coupling, u2 + coupling;
  return h;
}

/// Dynamical matrix M^-1 H.
template <class Scalar>
Mat2<Scalar> dynamical_matrix(const Mat2<Scalar>& stiffness, const Vec2<Scalar>& masses) {
  return masses.cwiseInverse().asDiagonal() * stiffness;
}

template <class Scalar>
struct ModeSolution {
  Vec2<Scalar> omega2;  // (plus, minus), plus is the lower branch
  Mat2<Scalar> vectors;  // columns e+, e-, unit length, second entry > 0
  Vec2<Scalar> modal_mass;  // e_k^T M e_k
};

/// Solves H e = w^2 M e through the symmetric problem M^-1/2 H M^-1/2.
/// The coupling term keeps the two branches from ever crossing, so the
/// lower root is always the one continuously connected to the in-phase
/// motion and is labelled `plus`.
template <class Scalar>
ModeSolution<Scalar> solve_modes(const Mat2<Scalar>& stiffness, const Vec2<Scalar>& masses) {
  using std::sqrt;
  const Vec2<Scalar> inv_sqrt_m = masses.cwiseSqrt().cwiseInverse();
  const Mat2<Scalar> sym = inv_sqrt_m.asDiagonal() * stiffness * inv_sqrt_m.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat2<Scalar>> solver(sym);
  ModeSolution<Scalar> out;
  out.omega2 = solver.eigenvalues();  // ascending
  for (int k = 0; k < 2; ++k) {
    Vec2<Scalar> e = inv_sqrt_m.asDiagonal() * solver.eigenvectors().col(k);
    e.normalize();
    if (e(1) < Scalar(0)) e = -e;
    out.vectors.col(k) = e;
    out.modal_mass(k) = e.dot(masses.asDiagonal() * e);
  }
  return out;
}

/// Exact roots of the 2x2 characteristic polynomial written with the
/// A, B, C combinations of the charges and masses (returned ascending,
/// in (rad/s)^2). The cross term D vanishes when m1 == m2, where this
/// reduces to w^2 = (kappa U0 / z0^2)(A + B -/+ sqrt(C^2 + B^2)).
template <class Scalar>
Vec2<Scalar> closed_form_omega2(Scalar kappa_u0_over_z02, Scalar q1, Scalar q2, Scalar m1,
                                Scalar m2) {
  using std::sqrt;
  const Scalar ratio = q2 / q1;
  const Scalar a = q1 / m1 + q2 / m2;
  const Scalar coupling = Scalar(2) * q2 / (Scalar(1) + ratio);
  const Scalar b = coupling * (Scalar(1) / m1 + Scalar(1) / m2);
  const Scalar c = q1 / m1 - q2 / m2;
  const Scalar d = Scalar(2) * c * coupling * (Scalar(1) / m1 - Scalar(1) / m2);
  const Scalar root = sqrt(c * c + b * b + d);
  return Vec2<Scalar>(kappa_u0_over_z02 * (a + b - root), kappa_u0_over_z02 * (a + b + root));
}

/// Fraction of each particle's energy carried by the plus mode, from the
/// mixing ratios r = (particle-1 amplitude)/(particle-2 amplitude):
///   particle 1: r+^2/(r+^2 + 1), particle 2: r-^2/(r-^2 + 1).
/// The second form assumes m1 == m2, where r+ r- = -1.
struct EnergyFractions {
  double particle1_plus = 0.0;
  double particle2_plus = 0.0;
};
EnergyFractions energy_fractions(double r_plus, double r_minus);

struct ModeStructure {
  Equilibrium eq;
  Vec2d omega = Vec2d::Zero();  // (omega+, omega-), rad/s
  Vec2d r = Vec2d::Zero();
  Mat2d vectors = Mat2d::Zero();  // columns e+, e-
  Vec2d modal_mass = Vec2d::Zero();
  Mat2d stiffness = Mat2d::Zero();
  Mat2d dynamical = Mat2d::Zero();
  Vec2d masses = Vec2d::Zero();
  EnergyFractions fractions;

  double omega_plus() const { return omega(0); }
  double omega_minus() const { return omega(1); }
  double r_plus() const { return r(0); }
  double r_minus() const { return r(1); }
  double omega_of(Mode m) const { return omega(index_of(m)); }
  double r_of(Mode m) const { return r(index_of(m)); }
  Vec2d vector_of(Mode m) const { return vectors.col(index_of(m)); }
  /// Participation of particle i (0 or 1) in mode m: entry of e_m.
  double participation(int particle, Mode m) const { return vectors(particle, index_of(m)); }
  /// Share of particle i's mode energy (m_i w_k^2 <s_i^2>) carried by
  /// mode m at equipartition. Reduces to e_{m,i}^2 for equal masses.
  double particle_energy_share(int particle, Mode m) const;
};

ModeStructure mode_structure(const TrapConfig& trap, const ParticleSpec& p1,
                             const ParticleSpec& p2);

// ---------------------------------------------------------------------------
// Single-particle radial dynamics.

struct MathieuTrace {
  VecXd x;
  bool approximation_valid = true;
};

/// x(t) = A2 cos(w_n t)(1 - (q_n/2) cos(w_rf t)), A2 the combined amplitude
/// 2 A C0 (the two factors are not separately observable).
MathieuTrace mathieu_trajectory(std::span<const double> t, const TrapConfig& trap,
                                const ParticleSpec& p, Axis axis, double amplitude);

struct RadialMeasurement {
  double v0 = 0.0;
  double omega_rf = 0.0;
  double u0 = 0.0;
  double omega_radial = 0.0;
};

struct ChargeFit {
  double charge = 0.0;  // C, taken positive
  double charge_e = 0.0;
  double charge_to_mass = 0.0;
  double residual = 0.0;  // rms relative frequency residual
};

/// Least-squares inversion of w_rad = (w_rf/2) sqrt(a_x + q_x^2/2) for Q/m
/// over several drive settings, using the geometry (eta, kappa, r0, z0) of
/// `geometry`. Frequencies do not carry the sign of Q.
ChargeFit charge_from_radial(std::span<const RadialMeasurement> measurements,
                             const TrapConfig& geometry, double mass);

}  // namespace nanopair
