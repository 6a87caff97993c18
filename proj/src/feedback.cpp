#include "nanopair/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "nanopair/random.hpp"

namespace nanopair {

void DetectionModel::validate() const {
  if (!(s_nn >= 0.0)) throw InvalidInput("detection: S_nn must be >= 0");
  if (s_nn > 0.0 && !(sample_rate > 0.0))
    throw InvalidInput("detection: sample rate must be > 0");
}

double DetectionModel::sigma() const { return s_nn > 0.0 ? std::sqrt(0.5 * s_nn * sample_rate) : 0.0; }

Detector::Detector(const DetectionModel& model)
    : model_(model), sigma_(model.sigma()), rng_(make_stream(model.seed, Stream::detection)) {
  model_.validate();
}

double Detector::detect(double z1_true) {
  if (sigma_ == 0.0) return z1_true;
  return z1_true + sigma_ * normal_(rng_);
}

void Detector::reset() {
  rng_ = make_stream(model_.seed, Stream::detection);
  normal_.reset();
}

double detect(double z1_true, const DetectionModel& det, std::mt19937_64& rng) {
  const double sigma = det.sigma();
  if (sigma == 0.0) return z1_true;
  std::normal_distribution<double> normal;
  return z1_true + sigma * normal(rng);
}

const char* name_of(ControllerKind kind) {
  return kind == ControllerKind::velocity_damper ? "velocity_damper" : "parametric_squeezer";
}

void ControllerConfig::validate() const {
  if (!(gain >= 0.0)) throw InvalidInput("controller: gain must be >= 0");
  if (actuation_target != 1) throw InvalidInput("controller: actuation target must be particle 1");
  if (bandpass_order < 1) throw InvalidInput("controller: bandpass order must be >= 1");
  if (notch_sections < 0) throw InvalidInput("controller: notch sections must be >= 0");
  if (bandpass_center < 0.0 || bandpass_bandwidth < 0.0 || notch_width < 0.0)
    throw InvalidInput("controller: filter frequencies must be >= 0");
  if (drive_frequency < 0.0) throw InvalidInput("controller: drive frequency must be >= 0");
  if (force_limit < 0.0) throw InvalidInput("controller: force limit must be >= 0");
  if (beam.enabled && !(beam.waist > 0.0)) throw InvalidInput("controller: beam waist must be > 0");
}

double modal_damping(const ModeStructure& modes, Mode m, const Vec2d& gamma) {
  const int k = index_of(m);
  double sum = 0.0;
  for (int i = 0; i < 2; ++i) sum += modes.masses(i) * gamma(i) * std::pow(modes.vectors(i, k), 2);
  return sum / modes.modal_mass(k);
}

Controller::Controller(const ControllerConfig& cfg, const ModeStructure& modes,
                       const ParticleSpec& p1, const ParticleSpec& p2, double sample_rate)
    : cfg_(cfg), z1_eq_(modes.eq.z1) {
  cfg_.validate();
  if (!(sample_rate > 0.0)) throw InvalidInput("controller: sample rate must be > 0");
  const int k = index_of(cfg_.target);
  ControllerPlan& p = plan_;
  p.sample_rate = sample_rate;
  p.omega_target = modes.omega(k);
  p.omega_other = modes.omega(1 - k);
  p.modal_mass = modes.modal_mass(k);
  p.participation = modes.vectors(0, k);
  p.modal_gamma0 = modal_damping(modes, cfg_.target, Vec2d(p1.gamma0, p2.gamma0));
  if (std::abs(p.participation) < 1e-6)
    throw InvalidInput("controller: target mode has no particle-1 component");

  const double nyquist = std::numbers::pi * sample_rate;
  if (std::max(p.omega_target, p.omega_other) >= nyquist)
    throw InvalidInput("controller: sample rate below twice the mode frequencies");

  const double split = std::abs(p.omega_other - p.omega_target);
  const double center = cfg_.bandpass_center > 0.0 ? cfg_.bandpass_center : p.omega_target;
  const double bw = cfg_.bandpass_bandwidth > 0.0 ? cfg_.bandpass_bandwidth : split / 3.0;
  for (int i = 0; i < cfg_.bandpass_order; ++i) chain_.push_back(bandpass(center, bw, sample_rate));
  const double nw = cfg_.notch_width > 0.0 ? cfg_.notch_width : split / 5.0;
  for (int i = 0; i < cfg_.notch_sections; ++i) chain_.push_back(notch(p.omega_other, nw, sample_rate));
  initial_chain_ = chain_;
  p.filter_corner = center + 0.5 * bw;
  if (cfg_.notch_sections > 0) p.filter_corner = std::max(p.filter_corner, p.omega_other + 0.5 * nw);

  if (bw >= 0.5 * split)
    warnings_.push_back("bandpass bandwidth is not small against the mode splitting; the untargeted mode leaks into the loop");
  if (std::abs(center - p.omega_target) > 0.5 * bw)
    warnings_.push_back("bandpass centre is off the target mode");

  const std::complex<double> h = chain_.response(p.omega_target, sample_rate);
  p.chain_gain = std::abs(h);
  p.chain_phase = std::arg(h);
  if (p.chain_gain < 1e-3) throw InvalidInput("controller: filter chain rejects the target mode");
  scale_ = p.modal_mass / (p.participation * p.participation * p.chain_gain);

  const double step_phase = p.omega_target / sample_rate;
  const double hold_lag = 0.5 * step_phase;
  const double chain_lag = -p.chain_phase;

  if (cfg_.kind == ControllerKind::velocity_damper) {
    const double wanted = (0.5 * std::numbers::pi - chain_lag - hold_lag) / step_phase;
    int d = cfg_.delay_samples >= 0 ? cfg_.delay_samples : static_cast<int>(std::lround(wanted));
    if (d < 0) {
      warnings_.push_back("filter lag exceeds a quarter period; delay clamped to zero");
      d = 0;
    }
    p.delay_samples = d;
    p.residual_phase = chain_lag + hold_lag + d * step_phase - 0.5 * std::numbers::pi;
    delay_line_.assign(static_cast<std::size_t>(d) + 1, 0.0);
  } else {
    p.drive_frequency = cfg_.drive_frequency > 0.0 ? cfg_.drive_frequency : 2.0 * p.omega_target;
    p.drive_phase_internal = cfg_.drive_phase - chain_lag + hold_lag;
    p.residual_phase = 0.0;
    if (p.modal_gamma0 > 0.0) {
      p.g = cfg_.gain / (2.0 * p.modal_gamma0 * p.omega_target);
      p.above_threshold = p.g >= 1.0;
    } else {
      p.g = cfg_.gain > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
      p.above_threshold = cfg_.gain > 0.0;
    }
    if (p.above_threshold) warnings_.push_back("above parametric threshold");
    if (std::abs(p.drive_frequency - 2.0 * p.omega_target) > 1e-9 * p.omega_target)
      warnings_.push_back("drive frequency is not twice the target mode frequency");
  }
}

double Controller::process_sample(double z1_measured) {
  const double y = chain_.process(z1_measured - z1_eq_);
  double force = 0.0;
  if (cfg_.kind == ControllerKind::velocity_damper) {
    delay_line_[head_] = y;
    head_ = head_ + 1 == delay_line_.size() ? 0 : head_ + 1;
    // After the advance, head_ points at the oldest entry: y[n - d].
    force = scale_ * cfg_.gain * plan_.omega_target * delay_line_[head_];
  } else {
    const double t = static_cast<double>(n_) / plan_.sample_rate;
    force = -scale_ * cfg_.gain * y * std::sin(plan_.drive_frequency * t + plan_.drive_phase_internal);
  }
  if (cfg_.force_limit > 0.0 && std::abs(force) > cfg_.force_limit) {
    force = std::copysign(cfg_.force_limit, force);
    ++saturations_;
  }
  ++n_;
  last_force_ = force;
  return force;
}

void Controller::reset() {
  chain_ = initial_chain_;
  std::fill(delay_line_.begin(), delay_line_.end(), 0.0);
  head_ = 0;
  n_ = 0;
  saturations_ = 0;
  last_force_ = 0.0;
}

}  // namespace nanopair
