// Test-side oracles and generators. Nothing here calls into the library's
// numerical routines, so agreement with them is an independent check.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "nanopair/config.hpp"
#include "nanopair/constants.hpp"
#include "nanopair/trap_model.hpp"

namespace testsupport {

using nanopair::VecXd;

inline constexpr double kPi = std::numbers::pi;

inline nanopair::TrapConfig reference_trap(double u0 = 49.0) {
  return {120.0, u0, 2.0 * kPi * 1e4, 0.82, 0.071, 1.1e-3, 3.5e-3};
}

inline double reference_mass() { return 4.0 / 3.0 * kPi * std::pow(193.5e-9, 3) * 1850.0; }

inline nanopair::ParticleSpec particle(std::int64_t charge_e, double gamma0 = 0.0, double mass = reference_mass()) {
  return {mass, charge_e, gamma0};
}

/// Random trap and pair inside the stable, approximation-valid region.
struct RandomPair {
  nanopair::TrapConfig trap;
  nanopair::ParticleSpec p1, p2;
};

class PairGenerator {
 public:
  explicit PairGenerator(std::uint64_t seed, bool equal_masses = false) : rng_(seed), equal_(equal_masses) {}

  RandomPair next() {
    for (;;) {
      RandomPair r;
      r.trap = {uni(60.0, 180.0), uni(5.0, 80.0), 2.0 * kPi * uni(5e3, 15e3), uni(0.6, 1.0),
                uni(0.03, 0.2),   uni(0.5e-3, 2e-3), uni(2e-3, 6e-3)};
      const double rho = uni(1000.0, 3000.0);
      const double m1 = 4.0 / 3.0 * kPi * std::pow(uni(100e-9, 300e-9), 3) * rho;
      const double m2 = equal_ ? m1 : 4.0 / 3.0 * kPi * std::pow(uni(100e-9, 300e-9), 3) * rho;
      r.p1 = {m1, static_cast<std::int64_t>(uni(100.0, 5000.0)), 0.0};
      r.p2 = {m2, static_cast<std::int64_t>(uni(100.0, 5000.0)), 0.0};
      if (valid(r)) return r;
    }
  }

  double uni(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

 private:
  static bool valid(const RandomPair& r) {
    try {
      return nanopair::stability_params(r.trap, r.p1).approximation_valid &&
             nanopair::stability_params(r.trap, r.p2).approximation_valid;
    } catch (const nanopair::Error&) {
      return false;
    }
  }
  std::mt19937_64 rng_;
  bool equal_;
};

/// Stationary thermal trace of a damped harmonic oscillator from the exact
/// discretisation of the linear SDE (Van Loan), sampled at fs.
class ExactOscillator {
 public:
  ExactOscillator(double omega, double gamma, double variance, double fs, std::uint64_t seed)
      : rng_(seed) {
    Eigen::Matrix2d a;
    a << 0.0, 1.0, -omega * omega, -gamma;
    const double q = 2.0 * gamma * variance * omega * omega;  // velocity diffusion
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    const double dt = 1.0 / fs;
    m.block<2, 2>(0, 0) = -a * dt;
    m(1, 3) = q * dt;
    m.block<2, 2>(2, 2) = a.transpose() * dt;
    const Eigen::Matrix4d e = m.exp();
    phi_ = e.block<2, 2>(2, 2).transpose();
    const Eigen::Matrix2d cov = phi_ * e.block<2, 2>(0, 2);
    chol_ = Eigen::LLT<Eigen::Matrix2d>(0.5 * (cov + cov.transpose())).matrixL();
    std::normal_distribution<double> n;
    state_ << std::sqrt(variance) * n(rng_), omega * std::sqrt(variance) * n(rng_);
  }

  VecXd sample(Eigen::Index n) {
    VecXd out(n);
    std::normal_distribution<double> g;
    for (Eigen::Index i = 0; i < n; ++i) {
      out[i] = state_[0];
      state_ = phi_ * state_ + chol_ * Eigen::Vector2d(g(rng_), g(rng_));
    }
    return out;
  }

 private:
  std::mt19937_64 rng_;
  Eigen::Matrix2d phi_, chol_;
  Eigen::Vector2d state_;
};

/// Two-mode particle traces s = a+ (r+, 1)/|.| + a- (r-, 1)/|.|.
struct TwoModeData {
  VecXd s1, s2, a_plus, a_minus;
};

inline TwoModeData two_mode_traces(double r_plus, double r_minus, double f_plus, double f_minus, double gamma,
                                   double fs, Eigen::Index n, std::uint64_t seed) {
  ExactOscillator op(2 * kPi * f_plus, gamma, 1.0, fs, seed);
  ExactOscillator om(2 * kPi * f_minus, gamma, 1.0, fs, seed + 1);
  TwoModeData d;
  d.a_plus = op.sample(n);
  d.a_minus = om.sample(n);
  const double np = std::hypot(r_plus, 1.0), nm = std::hypot(r_minus, 1.0);
  d.s1 = d.a_plus * (r_plus / np) + d.a_minus * (r_minus / nm);
  d.s2 = d.a_plus / np + d.a_minus / nm;
  return d;
}

/// Direct O(n^2) DFT.
inline std::vector<std::complex<double>> naive_dft(const VecXd& x) {
  const Eigen::Index n = x.size();
  std::vector<std::complex<double>> out(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    std::complex<double> s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      s += x[j] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * j) / static_cast<double>(n));
    out[k] = s;
  }
  return out;
}

/// Classic fourth-order Runge-Kutta for x'' = f(t, x, v).
template <class F>
std::vector<double> rk4(F f, double x0, double v0, double dt, int steps, int every) {
  std::vector<double> out;
  double x = x0, v = v0, t = 0.0;
  for (int i = 0; i <= steps; ++i) {
    if (i % every == 0) out.push_back(x);
    const double k1x = v, k1v = f(t, x, v);
    const double k2x = v + 0.5 * dt * k1v, k2v = f(t + 0.5 * dt, x + 0.5 * dt * k1x, k2x);
    const double k3x = v + 0.5 * dt * k2v, k3v = f(t + 0.5 * dt, x + 0.5 * dt * k2x, k3x);
    const double k4x = v + dt * k3v, k4v = f(t + dt, x + dt * k3x, k4x);
    x += dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    v += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    t += dt;
  }
  return out;
}

/// Minimal valid config for the reference pair; callers adjust fields.
inline nanopair::ExperimentConfig small_config() {
  nanopair::ExperimentConfig c;
  c.trap_section = {120.0, 49.0, 1e4, 0.82, 0.071, 1.1e-3, 3.5e-3};
  for (int i = 0; i < 2; ++i) {
    c.particles[i].radius_m = 193.5e-9;
    c.particles[i].density_kg_m3 = 1850.0;
    c.particles[i].gamma0_rad_s = 20.0;
  }
  c.particles[0].charge_e = 2135;
  c.particles[1].charge_e = 906;
  c.temperature_k = 293.0;
  c.run.duration_s = 20.0;
  c.run.seed = 11;
  c.run.settle_s = 0.5;
  return c;
}

}  // namespace testsupport
