#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nanopair/analysis.hpp"
#include "nanopair/dynamics.hpp"
#include "nanopair/feedback.hpp"
#include "nanopair/trap_model.hpp"

namespace nanopair {

/// Particle as written in a config: mass directly or from radius and
/// density; damping directly or from gas pressure (Epstein drag).
struct ParticleConfig {
  std::optional<double> mass_kg;
  std::optional<double> radius_m;
  std::optional<double> density_kg_m3;
  std::int64_t charge_e = 0;
  std::optional<double> gamma0_rad_s;
  std::optional<double> pressure_mbar;
  double gas_temperature_k = 293.15;

  ParticleSpec resolve() const;
};

struct RunConfig {
  double duration_s = 0.0;
  double dt_s = 0.0;                // 0 = automatic
  double sample_rate_hz = 0.0;      // 0 = automatic
  double controller_rate_hz = 0.0;  // 0 = automatic
  std::uint64_t seed = 0;
  Decimation decimation = Decimation::average;
  bool coupling = true;
  double settle_s = 0.0;  // discarded from the start before analysis
  bool write_trajectory = true;
};

struct AnalysisConfig {
  Eigen::Index segment_length = 0;  // 0 = automatic
  double overlap = 0.5;
  Window window = Window::hann;
  double band_fwhm_multiple = 50.0;
  double demod_bandwidth_rad_s = 0.0;  // 0 = |w- - w+| / 4
  bool fit_r = true;
};

struct SweepConfig {
  std::string parameter;  // dotted path into the config, e.g. controllers.0.gain_rad_s
  std::vector<double> values;
  int workers = 1;
};

/// Trap as written in a config (RF drive given in Hz).
struct TrapSection {
  double v0_volts = 0.0;
  double u0_volts = 0.0;
  double rf_frequency_hz = 0.0;
  double eta = 1.0;
  double kappa = 1.0;
  double r0_m = 0.0;
  double z0_m = 0.0;

  TrapConfig resolve() const;
};

struct ExperimentConfig {
  TrapSection trap_section;
  ParticleConfig particles[2];
  double temperature_k = 0.0;
  Vec2d excess_force_psd = Vec2d::Zero();
  double s_nn_m2_hz = 0.0;
  std::vector<ControllerConfig> controllers;
  RunConfig run;
  AnalysisConfig analysis;
  std::optional<SweepConfig> sweep;

  TrapConfig trap() const { return trap_section.resolve(); }
  ParticleSpec particle(int i) const { return particles[i].resolve(); }
  NoiseModel noise() const;
  SimulationOptions simulation_options() const;
  /// Throws ConfigError on any invalid or inconsistent value.
  void validate() const;
};

/// Parses and validates. Unknown keys and missing required keys raise
/// ConfigError naming the offending key path.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Complete serialisation (every key written, defaults included).
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Sets the number at a dotted path ("controllers.0.gain_rad_s").
/// Throws ConfigError if the path does not resolve to a number.
void set_path(nlohmann::json& j, const std::string& path, double value);

}  // namespace nanopair
