#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nanopair/filters.hpp"
#include "nanopair/trap_model.hpp"

namespace nanopair {

/// White position noise added to the particle-1 readout.
struct DetectionModel {
  double s_nn = 0.0;         // m^2/Hz, one-sided
  double sample_rate = 0.0;  // Hz
  std::uint64_t seed = 0;

  void validate() const;
  /// Per-sample standard deviation sqrt(S_nn fs / 2).
  double sigma() const;
};

/// Stateful detector; one draw per controller sample.
class Detector {
 public:
  explicit Detector(const DetectionModel& model);
  double detect(double z1_true);
  void reset();

 private:
  DetectionModel model_;
  double sigma_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

/// Free-function form of a single detection draw.
double detect(double z1_true, const DetectionModel& det, std::mt19937_64& rng);

enum class ControllerKind { velocity_damper, parametric_squeezer };
const char* name_of(ControllerKind kind);

/// Optional Gaussian intensity profile of the actuation beam along z:
/// the commanded force is scaled by exp(-2 (z1 - focus)^2 / waist^2).
struct BeamProfile {
  bool enabled = false;
  double focus = 0.0;  // m, lab frame
  double waist = 0.0;  // m

  double factor(double z1) const {
    if (!enabled) return 1.0;
    const double d = z1 - focus;
    return std::exp(-2.0 * d * d / (waist * waist));
  }
};

struct ControllerConfig {
  ControllerKind kind = ControllerKind::velocity_damper;
  Mode target = Mode::plus;

  // Resonant bandpass around the target mode. Zero selects the defaults:
  // centre = target mode frequency, bandwidth = |w- - w+| / 3.
  double bandpass_center = 0.0;     // rad/s
  double bandpass_bandwidth = 0.0;  // rad/s
  int bandpass_order = 1;           // cascaded sections

  // Notch sections at the untargeted mode; width 0 selects |w- - w+| / 5.
  int notch_sections = 2;
  double notch_width = 0.0;  // rad/s

  /// gamma_fb in rad/s for the damper, G in s^-2 for the squeezer.
  double gain = 0.0;
  /// Damper delay in controller samples; negative selects the automatic
  /// quarter-period value.
  int delay_samples = -1;

  /// Squeezer local oscillator; zero frequency selects 2 w_target.
  double drive_frequency = 0.0;  // rad/s
  double drive_phase = 0.0;      // rad

  int actuation_target = 1;
  /// Saturation level of the actuator; zero disables clipping.
  double force_limit = 0.0;  // N
  BeamProfile beam;

  void validate() const;
};

/// Everything the controller derives from its configuration and the mode
/// structure at construction.
struct ControllerPlan {
  double omega_target = 0.0;
  double omega_other = 0.0;
  double sample_rate = 0.0;
  double modal_mass = 0.0;
  double participation = 0.0;  // particle-1 entry of the target eigenvector
  double modal_gamma0 = 0.0;
  double filter_corner = 0.0;  // highest filter edge, rad/s
  double chain_gain = 1.0;   // |H(w_target)| of bandpass + notch
  double chain_phase = 0.0;  // arg H(w_target), negative = lag
  int delay_samples = 0;
  /// Damper: total loop phase lag at w_target minus pi/2.
  /// Squeezer: drive phase offset left after compensation.
  double residual_phase = 0.0;
  double drive_frequency = 0.0;
  double drive_phase_internal = 0.0;
  /// Squeezer parametric strength g = G / (2 gamma0 w_target).
  double g = 0.0;
  bool above_threshold = false;
};

/// Feedback loop acting on particle 1. Runs once per controller sample on
/// the measured particle-1 position and returns the force held until the
/// next sample.
///
/// The output is scaled by mu_k / e_1k^2 so the target mode coordinate
/// obeys the modal equation with the configured gamma_fb or G:
///   damper:   F1 = (mu/e1^2) gamma_fb w y(t - T/4)
///   squeezer: F1 = -(mu/e1^2) G y(t) sin(2 w t + phase)
/// with y the filtered displacement of particle 1.
class Controller {
 public:
  Controller(const ControllerConfig& cfg, const ModeStructure& modes, const ParticleSpec& p1,
             const ParticleSpec& p2, double sample_rate);

  double process_sample(double z1_measured);
  void reset();

  const ControllerConfig& config() const { return cfg_; }
  const ControllerPlan& plan() const { return plan_; }
  std::int64_t saturation_events() const { return saturations_; }
  std::int64_t samples() const { return n_; }
  double last_force() const { return last_force_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  ControllerConfig cfg_;
  ControllerPlan plan_;
  double z1_eq_ = 0.0;
  double scale_ = 0.0;
  FilterChain chain_;
  FilterChain initial_chain_;
  std::vector<double> delay_line_;
  std::size_t head_ = 0;
  std::int64_t n_ = 0;
  std::int64_t saturations_ = 0;
  double last_force_ = 0.0;
  std::vector<std::string> warnings_;
};

/// Damping rate of mode k for per-particle rates gamma_i:
///   sum_i m_i gamma_i e_ik^2 / mu_k.
double modal_damping(const ModeStructure& modes, Mode m, const Vec2d& gamma);

/// Analytic steady-state temperature of a velocity-damped mode.
inline double damped_temperature(double t0, double gamma0, double gamma_fb) {
  return t0 * gamma0 / (gamma0 + gamma_fb);
}

/// Same with white detection noise S_nn fed back through the damper on a
/// mode of modal mass mu whose particle-1 participation is e1:
///   T = (T0 gamma0 + mu w^2 gamma_fb^2 S_nn / (4 e1^2 k_B)) / (gamma0 + gamma_fb)
inline double damped_temperature(double t0, double gamma0, double gamma_fb, double modal_mass,
                                 double omega, double e1, double s_nn) {
  const double heating = modal_mass * omega * omega * gamma_fb * gamma_fb * s_nn / (4.0 * e1 * e1 * K::k_B);
  return (t0 * gamma0 + heating) / (gamma0 + gamma_fb);
}

/// Deamplified / amplified quadrature variance relative to thermal for
/// a below-threshold parametric drive of strength g.
inline double squeezed_variance_ratio(double g) { return 1.0 / (1.0 + g); }
inline double amplified_variance_ratio(double g) { return 1.0 / (1.0 - g); }

}  // namespace nanopair
