#include "nanopair/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace nanopair {

using nlohmann::json;

namespace {

// Walks one JSON object, recording which keys were consumed so that
// anything left over can be rejected.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& require(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError("missing required key '" + key_path(key) + "'");
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = require(key);
    if (!v.is_number()) throw ConfigError("'" + key_path(key) + "' must be a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }
  std::optional<double> maybe_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  std::int64_t integer(const std::string& key) {
    const json& v = require(key);
    if (!v.is_number_integer()) throw ConfigError("'" + key_path(key) + "' must be an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) { return has(key) ? integer(key) : fallback; }

  std::uint64_t unsigned_integer(const std::string& key) {
    const json& v = require(key);
    if (!v.is_number_unsigned()) throw ConfigError("'" + key_path(key) + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = require(key);
    if (!v.is_boolean()) throw ConfigError("'" + key_path(key) + "' must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const json& v = require(key);
    if (!v.is_string()) throw ConfigError("'" + key_path(key) + "' must be a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) { return has(key) ? string(key) : fallback; }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.contains(k)) throw ConfigError("unknown key '" + key_path(k) + "'");
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class Fn>
auto wrap(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const InvalidInput& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

ParticleConfig parse_particle(Reader r) {
  ParticleConfig p;
  p.mass_kg = r.maybe_number("mass_kg");
  p.radius_m = r.maybe_number("radius_m");
  p.density_kg_m3 = r.maybe_number("density_kg_m3");
  p.charge_e = r.integer("charge_e");
  p.gamma0_rad_s = r.maybe_number("gamma0_rad_s");
  p.pressure_mbar = r.maybe_number("pressure_mbar");
  p.gas_temperature_k = r.number("gas_temperature_k", 293.15);
  r.finish();
  if (!p.mass_kg && !(p.radius_m && p.density_kg_m3))
    throw ConfigError("missing required key '" + r.key_path("mass_kg") + "' (or radius_m with density_kg_m3)");
  if (p.mass_kg && (p.radius_m || p.density_kg_m3))
    throw ConfigError("'" + r.key_path("mass_kg") + "' conflicts with radius_m/density_kg_m3; give one form");
  if (p.radius_m.has_value() != p.density_kg_m3.has_value())
    throw ConfigError("'" + r.key_path("radius_m") + "' and density_kg_m3 must be given together");
  if (p.gamma0_rad_s.has_value() == p.pressure_mbar.has_value())
    throw ConfigError("exactly one of '" + r.key_path("gamma0_rad_s") + "' or pressure_mbar is required");
  if (p.pressure_mbar && !p.radius_m)
    throw ConfigError("'" + r.key_path("pressure_mbar") + "' needs radius_m and density_kg_m3");
  return p;
}

ControllerKind parse_kind(const std::string& s, const std::string& path) {
  if (s == "velocity_damper") return ControllerKind::velocity_damper;
  if (s == "parametric_squeezer") return ControllerKind::parametric_squeezer;
  throw ConfigError("'" + path + "' must be velocity_damper or parametric_squeezer");
}

Mode parse_mode(const std::string& s, const std::string& path) {
  if (s == "plus") return Mode::plus;
  if (s == "minus") return Mode::minus;
  throw ConfigError("'" + path + "' must be plus or minus");
}

const char* gain_key(ControllerKind k) {
  return k == ControllerKind::velocity_damper ? "gain_rad_s" : "gain_s_minus2";
}

ControllerConfig parse_controller(Reader r) {
  ControllerConfig c;
  c.kind = parse_kind(r.string("kind"), r.key_path("kind"));
  c.target = parse_mode(r.string("target_mode", "plus"), r.key_path("target_mode"));
  const char* wrong = c.kind == ControllerKind::velocity_damper ? "gain_s_minus2" : "gain_rad_s";
  if (r.has(wrong))
    throw ConfigError("'" + r.key_path(wrong) + "' does not apply to " + name_of(c.kind) + "; use " + gain_key(c.kind));
  c.gain = r.number(gain_key(c.kind));
  c.bandpass_center = r.number("bandpass_center_rad_s", 0.0);
  c.bandpass_bandwidth = r.number("bandpass_bandwidth_rad_s", 0.0);
  c.bandpass_order = static_cast<int>(r.integer("bandpass_order", 1));
  c.notch_sections = static_cast<int>(r.integer("notch_sections", 2));
  c.notch_width = r.number("notch_width_rad_s", 0.0);
  c.delay_samples = static_cast<int>(r.integer("delay_samples", -1));
  c.drive_frequency = r.number("drive_frequency_rad_s", 0.0);
  c.drive_phase = r.number("drive_phase_rad", 0.0);
  c.actuation_target = static_cast<int>(r.integer("actuation_target", 1));
  c.force_limit = r.number("force_limit_n", 0.0);
  if (r.has("beam")) {
    Reader b(r.require("beam"), r.key_path("beam"));
    c.beam.enabled = b.boolean("enabled", false);
    c.beam.focus = b.number("focus_m", 0.0);
    c.beam.waist = b.number("waist_m", 0.0);
    b.finish();
  }
  r.finish();
  return c;
}

Decimation parse_decimation(const std::string& s, const std::string& path) {
  if (s == "average") return Decimation::average;
  if (s == "point") return Decimation::point;
  throw ConfigError("'" + path + "' must be average or point");
}

Window parse_window(const std::string& s, const std::string& path) {
  if (s == "hann") return Window::hann;
  if (s == "rectangular") return Window::rectangular;
  throw ConfigError("'" + path + "' must be hann or rectangular");
}

}  // namespace

TrapConfig TrapSection::resolve() const {
  TrapConfig t;
  t.v0 = v0_volts;
  t.u0 = u0_volts;
  t.omega_rf = two_pi * rf_frequency_hz;
  t.eta = eta;
  t.kappa = kappa;
  t.r0 = r0_m;
  t.z0 = z0_m;
  return t;
}

ParticleSpec ParticleConfig::resolve() const {
  ParticleSpec p;
  p.mass = mass_kg ? *mass_kg : mass_from_radius(*radius_m, *density_kg_m3);
  p.charge_e = charge_e;
  p.gamma0 = gamma0_rad_s ? *gamma0_rad_s
                          : gamma_from_pressure(mbar_to_pa(*pressure_mbar), *radius_m, *density_kg_m3,
                                                gas_temperature_k);
  return p;
}

NoiseModel ExperimentConfig::noise() const {
  NoiseModel n;
  n.t0 = temperature_k;
  n.seed = run.seed;
  n.excess_force_psd = excess_force_psd;
  return n;
}

SimulationOptions ExperimentConfig::simulation_options() const {
  SimulationOptions o;
  o.duration = run.duration_s;
  o.dt = run.dt_s;
  o.sample_rate = run.sample_rate_hz;
  o.controller_rate = run.controller_rate_hz;
  o.detection.s_nn = s_nn_m2_hz;
  o.detection.seed = run.seed;
  o.decimation = run.decimation;
  o.coupling = run.coupling;
  return resolve_timing(o, mode_structure(trap(), particle(0), particle(1)));
}

void ExperimentConfig::validate() const {
  wrap("trap", [&] { trap().validate(); });
  for (int i = 0; i < 2; ++i)
    wrap("particles." + std::to_string(i), [&] { particle(i).validate(); });
  if ((particles[0].charge_e > 0) != (particles[1].charge_e > 0))
    throw ConfigError("particles: charges must share sign (repulsive pair required)");
  if (!(temperature_k >= 0.0)) throw ConfigError("noise.temperature_k must be >= 0");
  if (!(excess_force_psd.array() >= 0.0).all()) throw ConfigError("noise.excess_force_psd_n2_hz must be >= 0");
  if (!(s_nn_m2_hz >= 0.0)) throw ConfigError("detection.s_nn_m2_hz must be >= 0");
  for (std::size_t i = 0; i < controllers.size(); ++i)
    wrap("controllers." + std::to_string(i), [&] { controllers[i].validate(); });
  if (!(run.duration_s > 0.0)) throw ConfigError("run.duration_s must be > 0");
  if (run.dt_s < 0.0 || run.sample_rate_hz < 0.0 || run.controller_rate_hz < 0.0)
    throw ConfigError("run: dt_s, sample_rate_hz and controller_rate_hz must be >= 0");
  if (!(run.settle_s >= 0.0 && run.settle_s < run.duration_s))
    throw ConfigError("run.settle_s must lie in [0, duration_s)");
  if (!(analysis.overlap >= 0.0 && analysis.overlap < 1.0)) throw ConfigError("analysis.overlap must lie in [0, 1)");
  if (analysis.segment_length < 0) throw ConfigError("analysis.segment_length must be >= 0");
  if (!(analysis.band_fwhm_multiple > 0.0)) throw ConfigError("analysis.band_fwhm_multiple must be > 0");
  if (analysis.demod_bandwidth_rad_s < 0.0) throw ConfigError("analysis.demod_bandwidth_rad_s must be >= 0");
  if (sweep) {
    if (sweep->parameter.empty()) throw ConfigError("sweep.parameter must not be empty");
    if (sweep->values.empty()) throw ConfigError("sweep.values must not be empty");
    if (sweep->workers < 1) throw ConfigError("sweep.workers must be >= 1");
  }
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  Reader top(j, "");

  {
    Reader r(top.require("trap"), "trap");
    auto& t = cfg.trap_section;
    t.v0_volts = r.number("v0_volts");
    t.u0_volts = r.number("u0_volts");
    t.rf_frequency_hz = r.number("rf_frequency_hz");
    t.eta = r.number("eta");
    t.kappa = r.number("kappa");
    t.r0_m = r.number("r0_m");
    t.z0_m = r.number("z0_m");
    r.finish();
  }
  {
    const json& ps = top.require("particles");
    if (!ps.is_array() || ps.size() != 2) throw ConfigError("'particles' must be an array of two particles");
    for (int i = 0; i < 2; ++i) cfg.particles[i] = parse_particle(Reader(ps[static_cast<std::size_t>(i)], "particles." + std::to_string(i)));
  }
  {
    Reader r(top.require("noise"), "noise");
    cfg.temperature_k = r.number("temperature_k");
    if (r.has("excess_force_psd_n2_hz")) {
      const json& a = r.require("excess_force_psd_n2_hz");
      if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
        throw ConfigError("'noise.excess_force_psd_n2_hz' must be an array of two numbers");
      cfg.excess_force_psd = Vec2d(a[0].get<double>(), a[1].get<double>());
    }
    r.finish();
  }
  if (top.has("detection")) {
    Reader r(top.require("detection"), "detection");
    cfg.s_nn_m2_hz = r.number("s_nn_m2_hz", 0.0);
    r.finish();
  }
  if (top.has("controllers")) {
    const json& cs = top.require("controllers");
    if (!cs.is_array()) throw ConfigError("'controllers' must be an array");
    for (std::size_t i = 0; i < cs.size(); ++i)
      cfg.controllers.push_back(parse_controller(Reader(cs[i], "controllers." + std::to_string(i))));
  }
  {
    Reader r(top.require("run"), "run");
    auto& run = cfg.run;
    run.duration_s = r.number("duration_s");
    run.seed = r.unsigned_integer("seed");
    run.dt_s = r.number("dt_s", 0.0);
    run.sample_rate_hz = r.number("sample_rate_hz", 0.0);
    run.controller_rate_hz = r.number("controller_rate_hz", 0.0);
    run.decimation = parse_decimation(r.string("decimation", "average"), r.key_path("decimation"));
    run.coupling = r.boolean("coupling", true);
    run.settle_s = r.number("settle_s", 0.0);
    run.write_trajectory = r.boolean("write_trajectory", true);
    r.finish();
  }
  if (top.has("analysis")) {
    Reader r(top.require("analysis"), "analysis");
    auto& a = cfg.analysis;
    a.segment_length = static_cast<Eigen::Index>(r.integer("segment_length", 0));
    a.overlap = r.number("overlap", 0.5);
    a.window = parse_window(r.string("window", "hann"), r.key_path("window"));
    a.band_fwhm_multiple = r.number("band_fwhm_multiple", 50.0);
    a.demod_bandwidth_rad_s = r.number("demod_bandwidth_rad_s", 0.0);
    a.fit_r = r.boolean("fit_r", true);
    r.finish();
  }
  if (top.has("sweep")) {
    Reader r(top.require("sweep"), "sweep");
    SweepConfig s;
    s.parameter = r.string("parameter");
    const json& v = r.require("values");
    if (!v.is_array()) throw ConfigError("'sweep.values' must be an array of numbers");
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError("'sweep.values' must be an array of numbers");
      s.values.push_back(x.get<double>());
    }
    s.workers = static_cast<int>(r.integer("workers", 1));
    r.finish();
    cfg.sweep = s;
  }
  top.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  const auto& t = cfg.trap_section;
  j["trap"] = {{"v0_volts", t.v0_volts}, {"u0_volts", t.u0_volts}, {"rf_frequency_hz", t.rf_frequency_hz},
               {"eta", t.eta},           {"kappa", t.kappa},       {"r0_m", t.r0_m},
               {"z0_m", t.z0_m}};
  j["particles"] = json::array();
  for (const auto& p : cfg.particles) {
    json pj;
    if (p.mass_kg) pj["mass_kg"] = *p.mass_kg;
    if (p.radius_m) pj["radius_m"] = *p.radius_m;
    if (p.density_kg_m3) pj["density_kg_m3"] = *p.density_kg_m3;
    pj["charge_e"] = p.charge_e;
    if (p.gamma0_rad_s) pj["gamma0_rad_s"] = *p.gamma0_rad_s;
    if (p.pressure_mbar) pj["pressure_mbar"] = *p.pressure_mbar;
    pj["gas_temperature_k"] = p.gas_temperature_k;
    j["particles"].push_back(pj);
  }
  j["noise"] = {{"temperature_k", cfg.temperature_k},
                {"excess_force_psd_n2_hz", {cfg.excess_force_psd(0), cfg.excess_force_psd(1)}}};
  j["detection"] = {{"s_nn_m2_hz", cfg.s_nn_m2_hz}};
  j["controllers"] = json::array();
  for (const auto& c : cfg.controllers) {
    json cj{{"kind", name_of(c.kind)},
            {"target_mode", name_of(c.target)},
            {gain_key(c.kind), c.gain},
            {"bandpass_center_rad_s", c.bandpass_center},
            {"bandpass_bandwidth_rad_s", c.bandpass_bandwidth},
            {"bandpass_order", c.bandpass_order},
            {"notch_sections", c.notch_sections},
            {"notch_width_rad_s", c.notch_width},
            {"delay_samples", c.delay_samples},
            {"drive_frequency_rad_s", c.drive_frequency},
            {"drive_phase_rad", c.drive_phase},
            {"actuation_target", c.actuation_target},
            {"force_limit_n", c.force_limit},
            {"beam", {{"enabled", c.beam.enabled}, {"focus_m", c.beam.focus}, {"waist_m", c.beam.waist}}}};
    j["controllers"].push_back(cj);
  }
  const auto& r = cfg.run;
  j["run"] = {{"duration_s", r.duration_s},
              {"dt_s", r.dt_s},
              {"sample_rate_hz", r.sample_rate_hz},
              {"controller_rate_hz", r.controller_rate_hz},
              {"seed", r.seed},
              {"decimation", name_of(r.decimation)},
              {"coupling", r.coupling},
              {"settle_s", r.settle_s},
              {"write_trajectory", r.write_trajectory}};
  const auto& a = cfg.analysis;
  j["analysis"] = {{"segment_length", a.segment_length},
                   {"overlap", a.overlap},
                   {"window", name_of(a.window)},
                   {"band_fwhm_multiple", a.band_fwhm_multiple},
                   {"demod_bandwidth_rad_s", a.demod_bandwidth_rad_s},
                   {"fit_r", a.fit_r}};
  if (cfg.sweep)
    j["sweep"] = {{"parameter", cfg.sweep->parameter}, {"values", cfg.sweep->values}, {"workers", cfg.sweep->workers}};
  return j;
}

void set_path(json& j, const std::string& path, double value) {
  json* node = &j;
  std::stringstream ss(path);
  std::string part;
  std::string walked;
  while (std::getline(ss, part, '.')) {
    walked += (walked.empty() ? "" : ".") + part;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(part, &used);
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        throw ConfigError("sweep path '" + path + "': '" + walked + "' is not an array index");
      }
      if (idx >= node->size()) throw ConfigError("sweep path '" + path + "': index out of range at '" + walked + "'");
      node = &(*node)[idx];
    } else if (node->is_object()) {
      if (!node->contains(part)) throw ConfigError("sweep path '" + path + "' does not resolve ('" + walked + "' missing)");
      node = &(*node)[part];
    } else {
      throw ConfigError("sweep path '" + path + "' does not resolve at '" + walked + "'");
    }
  }
  if (!node->is_number()) throw ConfigError("sweep path '" + path + "' does not name a numeric field");
  if (node->is_number_integer()) {
    if (value != std::floor(value)) throw ConfigError("sweep path '" + path + "' names an integer field");
    *node = static_cast<std::int64_t>(value);
  } else {
    *node = value;
  }
}

}  // namespace nanopair
