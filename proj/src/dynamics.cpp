#include "nanopair/dynamics.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "nanopair/random.hpp"

namespace nanopair {

void NoiseModel::validate() const {
  if (!(t0 >= 0.0)) throw InvalidInput("noise: T0 must be >= 0");
  if (!(excess_force_psd.array() >= 0.0).all()) throw InvalidInput("noise: excess force PSD must be >= 0");
}

double thermal_kick_scale(const ParticleSpec& p, double t0, double dt) {
  return std::sqrt(2.0 * p.gamma0 * K::k_B * t0 * dt / p.mass);
}

ThermalBath::ThermalBath(const ParticleSpec& p1, const ParticleSpec& p2, const NoiseModel& noise,
                         double dt)
    : rng1_(make_stream(noise.seed, Stream::thermal_1)),
      rng2_(make_stream(noise.seed, Stream::thermal_2)) {
  const ParticleSpec* ps[2] = {&p1, &p2};
  for (int i = 0; i < 2; ++i) {
    const ParticleSpec& p = *ps[i];
    const double c = std::exp(-p.gamma0 * dt);
    // Time over which an OU step accumulates white-noise variance.
    const double dt_eff = p.gamma0 > 0.0 ? -std::expm1(-2.0 * p.gamma0 * dt) / (2.0 * p.gamma0) : dt;
    const double thermal = thermal_kick_scale(p, noise.t0, dt_eff);
    const double excess = std::sqrt(0.5 * noise.excess_force_psd(i) * dt_eff) / p.mass;
    decay_(i) = c;
    sigma_(i) = std::hypot(thermal, excess);
  }
}

Vec2d ThermalBath::draw() { return Vec2d(n1_(rng1_), n2_(rng2_)); }

void ThermalBath::apply(double& v1, double& v2) {
  v1 = decay_(0) * v1 + (sigma_(0) != 0.0 ? sigma_(0) * n1_(rng1_) : 0.0);
  v2 = decay_(1) * v2 + (sigma_(1) != 0.0 ? sigma_(1) * n2_(rng2_) : 0.0);
}

const char* name_of(Decimation d) { return d == Decimation::average ? "average" : "point"; }

void SimulationOptions::validate() const {
  if (!(duration > 0.0)) throw InvalidInput("simulation: duration must be > 0");
  if (!(dt > 0.0)) throw InvalidInput("simulation: dt must be > 0");
  if (!(sample_rate > 0.0)) throw InvalidInput("simulation: sample rate must be > 0");
  if (!(controller_rate > 0.0)) throw InvalidInput("simulation: controller rate must be > 0");
  if (detection.s_nn < 0.0) throw InvalidInput("simulation: S_nn must be >= 0");
}

int steps_per_sample(double hz, double dt, const char* what) {
  const double x = 1.0 / (hz * dt);
  const long n = std::lround(x);
  if (n < 1 || std::abs(x - static_cast<double>(n)) > 1e-6 * x)
    throw InvalidInput(std::string(what) + " must be an integer fraction of the integrator rate 1/dt");
  return static_cast<int>(n);
}

SimulationOptions resolve_timing(const SimulationOptions& options, const ModeStructure& modes) {
  SimulationOptions out = options;
  const double f_minus = modes.omega_minus() / two_pi;
  if (out.controller_rate <= 0.0) {
    if (out.dt > 0.0) {
      const double n = std::max(1.0, std::floor(1.0 / (20.0 * f_minus * out.dt)));
      out.controller_rate = 1.0 / (n * out.dt);
    } else {
      out.controller_rate = 20.0 * f_minus;
    }
  }
  if (out.dt <= 0.0) out.dt = 1.0 / (3.0 * out.controller_rate);
  if (out.sample_rate <= 0.0) out.sample_rate = out.controller_rate / 4.0;
  out.detection.sample_rate = out.controller_rate;
  return out;
}

namespace {

struct Forces {
  double u1, u2, kq, m1, m2;
  double z1_eq, z2_eq;
  bool coupling;

  // Conservative accelerations; returns false when the particles have crossed.
  bool accel(double z1, double z2, double& a1, double& a2) const {
    if (coupling) {
      const double d = z2 - z1;
      if (!(d > 0.0)) return false;
      const double f = kq / (d * d);
      a1 = (-u1 * z1 - f) / m1;
      a2 = (-u2 * z2 + f) / m2;
    } else {
      a1 = -u1 * (z1 - z1_eq) / m1;
      a2 = -u2 * (z2 - z2_eq) / m2;
    }
    return true;
  }
};

SystemState thermal_initial_state(const ModeStructure& modes, const ParticleSpec& p1,
                                  const ParticleSpec& p2, const NoiseModel& noise, bool coupling) {
  SystemState s;
  s.z1 = modes.eq.z1;
  s.z2 = modes.eq.z2;
  if (noise.t0 <= 0.0) return s;
  std::mt19937_64 rng = make_stream(noise.seed, Stream::initial_state);
  std::normal_distribution<double> normal;
  const double kt = K::k_B * noise.t0;
  if (coupling) {
    for (int k = 0; k < 2; ++k) {
      const double mu = modes.modal_mass(k);
      const double a = normal(rng) * std::sqrt(kt / (mu * modes.omega(k) * modes.omega(k)));
      const double va = normal(rng) * std::sqrt(kt / mu);
      s.z1 += a * modes.vectors(0, k);
      s.z2 += a * modes.vectors(1, k);
      s.v1 += va * modes.vectors(0, k);
      s.v2 += va * modes.vectors(1, k);
    }
  } else {
    const ParticleSpec* ps[2] = {&p1, &p2};
    double* z[2] = {&s.z1, &s.z2};
    double* v[2] = {&s.v1, &s.v2};
    for (int i = 0; i < 2; ++i) {
      const double m = ps[i]->mass;
      const double w2 = modes.stiffness(i, i) / m;
      *z[i] += normal(rng) * std::sqrt(kt / (m * w2));
      *v[i] += normal(rng) * std::sqrt(kt / m);
    }
  }
  return s;
}

}  // namespace

double potential_energy(const SystemState& s, const TrapConfig& trap, const ParticleSpec& p1,
                        const ParticleSpec& p2, bool coupling) {
  const double u1 = axial_spring(trap, p1);
  const double u2 = axial_spring(trap, p2);
  if (!coupling) {
    const Equilibrium eq = equilibrium_positions(trap, p1, p2);
    return 0.5 * u1 * std::pow(s.z1 - eq.z1, 2) + 0.5 * u2 * std::pow(s.z2 - eq.z2, 2);
  }
  const double kq = K::coulomb_k * p1.charge() * p2.charge();
  return 0.5 * u1 * s.z1 * s.z1 + 0.5 * u2 * s.z2 * s.z2 + kq / (s.z2 - s.z1);
}

double total_energy(const SystemState& s, const TrapConfig& trap, const ParticleSpec& p1,
                    const ParticleSpec& p2, bool coupling) {
  return 0.5 * p1.mass * s.v1 * s.v1 + 0.5 * p2.mass * s.v2 * s.v2 +
         potential_energy(s, trap, p1, p2, coupling);
}

Trajectory simulate(const TrapConfig& trap, const ParticleSpec& p1, const ParticleSpec& p2,
                    const NoiseModel& noise, std::span<const ControllerConfig> controllers,
                    const SimulationOptions& options) {
  noise.validate();
  options.validate();
  const ModeStructure modes = mode_structure(trap, p1, p2);
  const double dt = options.dt;

  const int n_ctrl = steps_per_sample(options.controller_rate, dt, "controller rate");
  const int n_out = steps_per_sample(options.sample_rate, dt, "output sample rate");
  const double fs_ctrl = 1.0 / (n_ctrl * dt);

  Trajectory tr;
  std::vector<Controller> ctrl;
  ctrl.reserve(controllers.size());
  double w_max = modes.omega_minus();
  for (const auto& c : controllers) {
    ctrl.emplace_back(c, modes, p1, p2, fs_ctrl);
    w_max = std::max(w_max, ctrl.back().plan().filter_corner);
    for (const auto& w : ctrl.back().warnings())
      tr.warnings.push_back(std::string("controller ") + std::to_string(ctrl.size() - 1) + ": " + w);
  }
  if (dt > two_pi / (50.0 * w_max))
    throw InvalidInput("simulation: dt exceeds 2 pi / (50 w_max) = " + std::to_string(two_pi / (50.0 * w_max)) + " s");
  if (options.duration < 100.0 * two_pi / modes.omega_plus())
    tr.warnings.push_back("duration shorter than 100 periods of the lower mode; spectra will be poorly resolved");

  DetectionModel det_model = options.detection;
  det_model.sample_rate = fs_ctrl;
  det_model.seed = noise.seed;
  Detector detector(det_model);
  ThermalBath bath(p1, p2, noise, dt);

  const Forces F{axial_spring(trap, p1), axial_spring(trap, p2),
                 K::coulomb_k * p1.charge() * p2.charge(), p1.mass, p2.mass,
                 modes.eq.z1, modes.eq.z2, options.coupling};

  SystemState s = options.initial_state ? *options.initial_state
                                        : thermal_initial_state(modes, p1, p2, noise, options.coupling);
  s.t = 0.0;

  const long long n_steps = std::llround(options.duration / dt);
  const Eigen::Index n_samples = static_cast<Eigen::Index>(n_steps / n_out);
  const std::size_t nc = ctrl.size();

  tr.sample_rate = 1.0 / (n_out * dt);
  tr.dt = dt;
  tr.controller_rate = fs_ctrl;
  tr.seed = noise.seed;
  tr.decimation = options.decimation;
  tr.decimation_factor = n_out;
  tr.t.resize(n_samples);
  tr.z1.resize(n_samples);
  tr.z2.resize(n_samples);
  tr.v1.resize(n_samples);
  tr.v2.resize(n_samples);
  tr.z1_measured.resize(n_samples);
  tr.controller_force.assign(nc, VecXd(n_samples));

  const bool average = options.decimation == Decimation::average;
  const double half = 0.5 * dt;

  std::vector<double> held(nc, 0.0);
  std::vector<double> force_sum(nc, 0.0);
  double a1 = 0.0, a2 = 0.0;
  double ext1 = 0.0;  // controller acceleration on particle 1
  if (!F.accel(s.z1, s.z2, a1, a2)) throw IntegrationFault("particles crossed (z2 <= z1)", 0.0);

  auto ctrl_accel = [&](double z1) {
    double f = 0.0;
    for (std::size_t c = 0; c < nc; ++c) f += held[c] * ctrl[c].config().beam.factor(z1);
    return f / F.m1;
  };

  double sz1 = 0, sz2 = 0, sv1 = 0, sv2 = 0, smeas = 0;
  int n_meas = 0;
  double last_meas = s.z1;
  long long step = 0;
  for (Eigen::Index j = 0; j < n_samples; ++j) {
    sz1 = sz2 = sv1 = sv2 = smeas = 0.0;
    n_meas = 0;
    std::fill(force_sum.begin(), force_sum.end(), 0.0);
    for (int sub = 0; sub < n_out; ++sub, ++step) {
      if (step % n_ctrl == 0) {
        last_meas = detector.detect(s.z1);
        smeas += last_meas;
        ++n_meas;
        for (std::size_t c = 0; c < nc; ++c) held[c] = ctrl[c].process_sample(last_meas);
        ext1 = nc ? ctrl_accel(s.z1) : 0.0;
      }
      // B
      s.v1 += half * (a1 + ext1);
      s.v2 += half * a2;
      // A
      s.z1 += half * s.v1;
      s.z2 += half * s.v2;
      // O
      bath.apply(s.v1, s.v2);
      // A
      s.z1 += half * s.v1;
      s.z2 += half * s.v2;
      // B
      s.t = static_cast<double>(step + 1) * dt;
      if (!F.accel(s.z1, s.z2, a1, a2)) throw IntegrationFault("particles crossed (z2 <= z1)", s.t);
      if (nc) ext1 = ctrl_accel(s.z1);
      s.v1 += half * (a1 + ext1);
      s.v2 += half * a2;

      if (average) {
        sz1 += s.z1;
        sz2 += s.z2;
        sv1 += s.v1;
        sv2 += s.v2;
      }
      for (std::size_t c = 0; c < nc; ++c) force_sum[c] += held[c];
    }
    if (average) {
      const double inv = 1.0 / n_out;
      tr.t[j] = (static_cast<double>(step - n_out) + 0.5 * (n_out + 1)) * dt;
      tr.z1[j] = sz1 * inv;
      tr.z2[j] = sz2 * inv;
      tr.v1[j] = sv1 * inv;
      tr.v2[j] = sv2 * inv;
      tr.z1_measured[j] = n_meas ? smeas / n_meas : last_meas;
      for (std::size_t c = 0; c < nc; ++c) tr.controller_force[c][j] = force_sum[c] * inv;
    } else {
      tr.t[j] = s.t;
      tr.z1[j] = s.z1;
      tr.z2[j] = s.z2;
      tr.v1[j] = s.v1;
      tr.v2[j] = s.v2;
      tr.z1_measured[j] = last_meas;
      for (std::size_t c = 0; c < nc; ++c) tr.controller_force[c][j] = held[c];
    }
    if (!std::isfinite(tr.z1[j] + tr.z2[j] + tr.v1[j] + tr.v2[j]))
      throw IntegrationFault("non-finite state", s.t);
  }

  for (const auto& c : ctrl) tr.saturation_events.push_back(c.saturation_events());
  tr.metadata["integrator"] = tr.integrator;
  tr.metadata["dt_s"] = std::to_string(dt);
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& p = ctrl[c].plan();
    const std::string key = "controller." + std::to_string(c) + ".";
    tr.metadata[key + "delay_samples"] = std::to_string(p.delay_samples);
    tr.metadata[key + "residual_phase_rad"] = std::to_string(p.residual_phase);
    tr.metadata[key + "chain_gain"] = std::to_string(p.chain_gain);
    tr.metadata[key + "g"] = std::to_string(p.g);
  }
  return tr;
}

}  // namespace nanopair
