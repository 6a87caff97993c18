#include "nanopair/trap_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nanopair {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

// Mathieu parameters without the stability check.
StabilityParams raw_params(const TrapConfig& trap, const ParticleSpec& p) {
  const double qm = p.charge() / p.mass;
  const double w2 = trap.omega_rf * trap.omega_rf;
  StabilityParams s;
  const double qx = 2.0 * qm * trap.v0 * trap.eta / (w2 * trap.r0 * trap.r0);
  const double ax = -4.0 * qm * trap.u0 * trap.kappa / (w2 * trap.z0 * trap.z0);
  s.q = Eigen::Vector3d(qx, -qx, 0.0);
  s.a = Eigen::Vector3d(ax, ax, -2.0 * ax);
  for (int n = 0; n < 3; ++n) {
    const double arg = s.a[n] + 0.5 * s.q[n] * s.q[n];
    s.omega_sec[n] = arg > 0.0 ? 0.5 * trap.omega_rf * std::sqrt(arg) : 0.0;
    if (std::abs(s.q[n]) > kMathieuQLimit || std::abs(s.a[n]) > kMathieuALimit)
      s.approximation_valid = false;
  }
  return s;
}

void require_stable(const StabilityParams& s, Axis axis) {
  const int n = static_cast<int>(axis);
  const double arg = s.a[n] + 0.5 * s.q[n] * s.q[n];
  if (!(arg > 0.0)) throw UnstableAxis(name_of(axis), arg);
}

}  // namespace

void TrapConfig::validate() const {
  require(v0 >= 0.0, "trap: V0 must be >= 0");
  require(u0 > 0.0, "trap: U0 must be > 0");
  require(omega_rf > 0.0, "trap: omega_rf must be > 0");
  require(r0 > 0.0, "trap: r0 must be > 0");
  require(z0 > 0.0, "trap: z0 must be > 0");
  require(kappa > 0.0 && kappa <= 1.0, "trap: kappa must lie in (0, 1]");
  require(eta > 0.0 && eta <= 1.0, "trap: eta must lie in (0, 1]");
}

void ParticleSpec::validate() const {
  require(mass > 0.0 && std::isfinite(mass), "particle: mass must be > 0");
  require(charge_e != 0, "particle: charge must be non-zero");
  require(gamma0 >= 0.0, "particle: gamma0 must be >= 0");
}

double mass_from_radius(double radius, double density) {
  require(radius > 0.0 && density > 0.0, "radius and density must be > 0");
  return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius * density;
}

double gamma_from_pressure(double pressure_pa, double radius, double density,
                           double gas_temperature, double gas_molecular_mass) {
  require(pressure_pa >= 0.0, "pressure must be >= 0");
  require(radius > 0.0 && density > 0.0, "radius and density must be > 0");
  require(gas_temperature > 0.0 && gas_molecular_mass > 0.0, "invalid gas parameters");
  const double delta = 1.0 + std::numbers::pi / 8.0;
  return delta * pressure_pa *
         std::sqrt(8.0 * gas_molecular_mass / (std::numbers::pi * K::k_B * gas_temperature)) /
         (density * radius);
}

const char* name_of(Axis axis) {
  switch (axis) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::z: return "z";
  }
  return "?";
}

StabilityParams stability_params(const TrapConfig& trap, const ParticleSpec& p) {
  trap.validate();
  p.validate();
  const StabilityParams s = raw_params(trap, p);
  for (Axis ax : {Axis::x, Axis::y, Axis::z}) require_stable(s, ax);
  return s;
}

double axial_spring(const TrapConfig& trap, const ParticleSpec& p) {
  return 2.0 * p.charge() * trap.kappa * trap.u0 / (trap.z0 * trap.z0);
}

double axial_frequency(const TrapConfig& trap, const ParticleSpec& p) {
  const double u = axial_spring(trap, p);
  if (!(u > 0.0)) throw UnstableAxis("z", u);
  return std::sqrt(u / p.mass);
}

Equilibrium equilibrium_positions(const TrapConfig& trap, const ParticleSpec& p1,
                                  const ParticleSpec& p2) {
  trap.validate();
  p1.validate();
  p2.validate();
  if ((p1.charge_e > 0) != (p2.charge_e > 0))
    throw NoStableSeparation("charges of opposite sign attract: no stable separation");
  const double u1 = axial_spring(trap, p1);
  const double u2 = axial_spring(trap, p2);
  if (!(u1 > 0.0 && u2 > 0.0))
    throw NoStableSeparation("axial potential is not confining for these charges");
  const double kq = K::coulomb_k * p1.charge() * p2.charge();
  const double sep = std::cbrt(kq * (1.0 / u1 + 1.0 / u2));
  const double push = kq / (sep * sep);
  return Equilibrium{-push / u1, push / u2, sep};
}

EnergyFractions energy_fractions(double r_plus, double r_minus) {
  const double a = r_plus * r_plus;
  const double b = r_minus * r_minus;
  return EnergyFractions{a / (a + 1.0), b / (b + 1.0)};
}

double ModeStructure::particle_energy_share(int particle, Mode m) const {
  double total = 0.0;
  double own = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double e = vectors(particle, k);
    const double w = e * e / modal_mass(k);
    total += w;
    if (k == index_of(m)) own = w;
  }
  return own / total;
}

ModeStructure mode_structure(const TrapConfig& trap, const ParticleSpec& p1,
                             const ParticleSpec& p2) {
  ModeStructure ms;
  ms.eq = equilibrium_positions(trap, p1, p2);
  const double u1 = axial_spring(trap, p1);
  const double u2 = axial_spring(trap, p2);
  const double coupling =
      2.0 * K::coulomb_k * p1.charge() * p2.charge() / std::pow(ms.eq.separation, 3);
  ms.masses = Vec2d(p1.mass, p2.mass);
  ms.stiffness = stiffness_matrix(u1, u2, coupling);
  ms.dynamical = dynamical_matrix(ms.stiffness, ms.masses);
  const ModeSolution<double> sol = solve_modes(ms.stiffness, ms.masses);
  if (!(sol.omega2(0) > 0.0 && sol.omega2(1) > 0.0))
    throw ModeInstability(sol.omega2(0), sol.omega2(1));
  ms.omega = sol.omega2.cwiseSqrt();
  ms.vectors = sol.vectors;
  ms.modal_mass = sol.modal_mass;
  for (int k = 0; k < 2; ++k) ms.r(k) = ms.vectors(0, k) / ms.vectors(1, k);
  ms.fractions = energy_fractions(ms.r(0), ms.r(1));
  return ms;
}

MathieuTrace mathieu_trajectory(std::span<const double> t, const TrapConfig& trap,
                                const ParticleSpec& p, Axis axis, double amplitude) {
  trap.validate();
  p.validate();
  const StabilityParams s = raw_params(trap, p);
  require_stable(s, axis);
  const double q = s.q_of(axis);
  const double w = s.omega_of(axis);
  MathieuTrace out;
  out.approximation_valid = s.approximation_valid;
  out.x.resize(static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i)
    out.x[static_cast<Eigen::Index>(i)] =
        amplitude * std::cos(w * t[i]) * (1.0 - 0.5 * q * std::cos(trap.omega_rf * t[i]));
  return out;
}

ChargeFit charge_from_radial(std::span<const RadialMeasurement> measurements,
                             const TrapConfig& geometry, double mass) {
  require(mass > 0.0, "charge_from_radial: mass must be > 0");
  require(measurements.size() >= 2, "charge_from_radial: need at least two measurements");
  require(geometry.r0 > 0.0 && geometry.z0 > 0.0 && geometry.eta > 0.0 && geometry.kappa > 0.0,
          "charge_from_radial: invalid trap geometry");

  // w^2 = c1 x^2 - c2 x with x = Q/m.
  struct Row {
    double c1, c2, w;
  };
  std::vector<Row> rows;
  const double r04 = std::pow(geometry.r0, 4);
  const auto& first = measurements.front();
  bool distinct = false;
  for (const auto& m : measurements) {
    require(m.omega_rf > 0.0 && m.omega_radial > 0.0 && m.v0 >= 0.0,
            "charge_from_radial: invalid measurement");
    auto differs = [](double a, double b) {
      return std::abs(a - b) > 1e-12 * std::max(std::abs(a), std::abs(b));
    };
    if (differs(m.v0, first.v0) || differs(m.omega_rf, first.omega_rf) || differs(m.u0, first.u0))
      distinct = true;
    rows.push_back({m.v0 * m.v0 * geometry.eta * geometry.eta / (2.0 * m.omega_rf * m.omega_rf * r04),
                    geometry.kappa * m.u0 / (geometry.z0 * geometry.z0), m.omega_radial});
  }
  if (!distinct) throw InvalidInput("charge_from_radial: all drive settings identical (underdetermined)");

  std::vector<double> roots;
  for (const auto& r : rows) {
    if (r.c1 <= 0.0) continue;
    const double w2 = r.w * r.w;
    roots.push_back((r.c2 + std::sqrt(r.c2 * r.c2 + 4.0 * r.c1 * w2)) / (2.0 * r.c1));
  }
  if (roots.empty()) throw InvalidInput("charge_from_radial: no positive charge-to-mass solution");
  std::nth_element(roots.begin(), roots.begin() + roots.size() / 2, roots.end());
  double x = roots[roots.size() / 2];

  auto model = [](const Row& r, double xv) { return r.c1 * xv * xv - r.c2 * xv; };
  // Gauss-Newton on relative frequency residuals.
  for (int iter = 0; iter < 100; ++iter) {
    double jtj = 0.0, jtr = 0.0;
    for (const auto& r : rows) {
      const double w2 = model(r, x);
      if (w2 <= 0.0) continue;
      const double wm = std::sqrt(w2);
      const double res = (wm - r.w) / r.w;
      const double dres = (2.0 * r.c1 * x - r.c2) / (2.0 * wm * r.w);
      jtj += dres * dres;
      jtr += dres * res;
    }
    if (jtj <= 0.0) break;
    double step = jtr / jtj;
    while (x - step <= 0.0) step *= 0.5;
    x -= step;
    if (std::abs(step) < 1e-15 * x) break;
  }
  if (!(x > 0.0)) throw InvalidInput("charge_from_radial: no positive charge-to-mass solution");

  double sum = 0.0;
  for (const auto& r : rows) {
    const double w2 = model(r, x);
    const double wm = w2 > 0.0 ? std::sqrt(w2) : 0.0;
    sum += std::pow((wm - r.w) / r.w, 2);
  }
  ChargeFit fit;
  fit.charge_to_mass = x;
  fit.charge = x * mass;
  fit.charge_e = fit.charge / K::e;
  fit.residual = std::sqrt(sum / static_cast<double>(rows.size()));
  return fit;
}

}  // namespace nanopair
