#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nanopair/feedback.hpp"
#include "nanopair/trap_model.hpp"

namespace nanopair {

struct SystemState {
  double t = 0.0;
  double z1 = 0.0, z2 = 0.0;  // m, lab frame
  double v1 = 0.0, v2 = 0.0;  // m/s
};

/// Thermal bath and optional excess force noise.
///
/// The fluctuating force on particle i has autocorrelation
/// 2 m_i gamma_i k_B T0 delta(t - t'), i.e. a one-sided force PSD of
/// 4 m_i gamma_i k_B T0 in N^2/Hz. `excess_force_psd` adds independent
/// white force noise with the given one-sided PSD on each particle.
struct NoiseModel {
  double t0 = 0.0;  // K
  std::uint64_t seed = 0;
  Vec2d excess_force_psd = Vec2d::Zero();  // N^2/Hz

  void validate() const;
};

/// Per-step velocity kick standard deviation sqrt(2 gamma k_B T0 dt / m).
double thermal_kick_scale(const ParticleSpec& p, double t0, double dt);

/// Exact Ornstein-Uhlenbeck velocity update for both particles over a step
/// of length dt: v <- c v + sigma xi, c = exp(-gamma dt).
class ThermalBath {
 public:
  ThermalBath(const ParticleSpec& p1, const ParticleSpec& p2, const NoiseModel& noise, double dt);

  double decay(int i) const { return decay_[i]; }
  double sigma(int i) const { return sigma_[i]; }
  /// Unit normal draws for both particles (independent streams).
  Vec2d draw();
  void apply(double& v1, double& v2);

 private:
  Vec2d decay_, sigma_;
  std::mt19937_64 rng1_, rng2_;
  std::normal_distribution<double> n1_, n2_;
};

enum class Decimation { average, point };
const char* name_of(Decimation d);

struct SimulationOptions {
  double duration = 0.0;     // s
  double dt = 0.0;           // s, integrator step
  double sample_rate = 0.0;  // Hz, output
  /// Controller and detector rate, a whole number of integrator steps.
  double controller_rate = 0.0;  // Hz
  DetectionModel detection;
  Decimation decimation = Decimation::average;
  /// Diagnostic: drop the Coulomb interaction. Each particle then moves in
  /// its own trap about the coupled equilibrium position.
  bool coupling = true;
  /// Overrides the thermal draw at the equilibrium positions.
  std::optional<SystemState> initial_state;

  void validate() const;
};

/// Uniformly sampled record of one run. With average decimation each row is
/// the mean over the integrator steps it covers and `t` is the window centre.
struct Trajectory {
  double sample_rate = 0.0;
  double dt = 0.0;
  double controller_rate = 0.0;
  std::uint64_t seed = 0;
  std::string integrator = "BAOAB";
  Decimation decimation = Decimation::average;
  int decimation_factor = 1;
  VecXd t, z1, z2, v1, v2;
  VecXd z1_measured;
  std::vector<VecXd> controller_force;
  std::vector<std::int64_t> saturation_events;
  std::vector<std::string> warnings;
  /// Free-form key/value metadata, written into CSV headers.
  std::map<std::string, std::string> metadata;

  Eigen::Index size() const { return t.size(); }
};

/// Trap + Coulomb energy of a state (J), with the particles' own
/// spring constants u_i.
double potential_energy(const SystemState& s, const TrapConfig& trap, const ParticleSpec& p1,
                        const ParticleSpec& p2, bool coupling = true);
double total_energy(const SystemState& s, const TrapConfig& trap, const ParticleSpec& p1,
                    const ParticleSpec& p2, bool coupling = true);

/// Integrates the coupled axial equations of motion
///   m_i (z_i'' + gamma_i z_i') = -u_i z_i -/+ k Q1 Q2 / (z2 - z1)^2 + F_i
/// with BAOAB splitting: half kick, half drift, exact OU damping + noise,
/// half drift, half kick. Second order for the deterministic part and exact
/// in the stationary limit of the thermal stage.
Trajectory simulate(const TrapConfig& trap, const ParticleSpec& p1, const ParticleSpec& p2,
                    const NoiseModel& noise, std::span<const ControllerConfig> controllers,
                    const SimulationOptions& options);

/// Integer number of integrator steps per period of rate `hz`; throws if
/// 1/(hz dt) is not an integer to 1e-6.
int steps_per_sample(double hz, double dt, const char* what);

/// Fills the zero-valued timing fields of `options`: dt = 1/(3 f_c),
/// controller rate f_c = 20 f-, output rate f_c / 4.
SimulationOptions resolve_timing(const SimulationOptions& options, const ModeStructure& modes);

}  // namespace nanopair
