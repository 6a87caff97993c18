#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "nanopair/types.hpp"

namespace nanopair {

/// Second-order IIR section, transposed direct form II, a0 normalised to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
  double s1 = 0.0, s2 = 0.0;

  double process(double x) {
    const double y = b0 * x + s1;
    s1 = b1 * x - a1 * y + s2;
    s2 = b2 * x - a2 * y;
    return y;
  }
  void reset() { s1 = s2 = 0.0; }

  /// Frequency response at w (rad/s) for sample rate fs (Hz).
  std::complex<double> response(double w, double fs) const {
    const std::complex<double> z1 = std::polar(1.0, -w / fs);
    const std::complex<double> z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
  }
};

namespace detail {

inline Biquad normalised(double b0, double b1, double b2, double a0, double a1, double a2) {
  Biquad q;
  q.b0 = b0 / a0;
  q.b1 = b1 / a0;
  q.b2 = b2 / a0;
  q.a1 = a1 / a0;
  q.a2 = a2 / a0;
  return q;
}

// RBJ alpha for a band of width `bw` (rad/s) geometrically centred on w0,
// expressed in octaves so the bilinear warping of the edges is absorbed.
inline double band_alpha(double w0, double bw, double fs) {
  const double half = 0.5 * bw / w0;
  const double ratio = (half + std::sqrt(half * half + 1.0)) / (std::sqrt(half * half + 1.0) - half);
  const double octaves = std::log2(ratio);
  const double wd = w0 / fs;
  return std::sin(wd) * std::sinh(0.5 * std::numbers::ln2 * octaves * wd / std::sin(wd));
}

}  // namespace detail

/// Resonant bandpass with unit gain and zero phase at the centre.
inline Biquad bandpass(double center, double bandwidth, double fs) {
  const double alpha = detail::band_alpha(center, bandwidth, fs);
  const double c = std::cos(center / fs);
  return detail::normalised(alpha, 0.0, -alpha, 1.0 + alpha, -2.0 * c, 1.0 - alpha);
}

/// Band-reject section with a transmission zero at `center`.
inline Biquad notch(double center, double width, double fs) {
  const double alpha = detail::band_alpha(center, width, fs);
  const double c = std::cos(center / fs);
  return detail::normalised(1.0, -2.0 * c, 1.0, 1.0 + alpha, -2.0 * c, 1.0 - alpha);
}

/// Second-order Butterworth lowpass, -3 dB at `cutoff` (rad/s).
inline Biquad butterworth_lowpass(double cutoff, double fs) {
  const double wd = cutoff / fs;
  const double alpha = std::sin(wd) / std::numbers::sqrt2;
  const double c = std::cos(wd);
  return detail::normalised(0.5 * (1.0 - c), 1.0 - c, 0.5 * (1.0 - c), 1.0 + alpha, -2.0 * c,
                            1.0 - alpha);
}

/// Cascade of biquads run sample by sample.
class FilterChain {
 public:
  FilterChain() = default;
  explicit FilterChain(std::vector<Biquad> sections) : sections_(std::move(sections)) {}

  void push_back(const Biquad& q) { sections_.push_back(q); }

  double process(double x) {
    for (auto& q : sections_) x = q.process(x);
    return x;
  }
  void reset() {
    for (auto& q : sections_) q.reset();
  }
  std::complex<double> response(double w, double fs) const {
    std::complex<double> h = 1.0;
    for (const auto& q : sections_) h *= q.response(w, fs);
    return h;
  }
  bool empty() const { return sections_.empty(); }
  std::size_t size() const { return sections_.size(); }

 private:
  std::vector<Biquad> sections_;
};

/// Zero-phase forward-backward filtering. The section starts at rest in
/// both passes, so the first and last few time constants carry transients.
inline VecXd filtfilt(Biquad q, const VecXd& x) {
  VecXd y(x.size());
  q.reset();
  for (Eigen::Index i = 0; i < x.size(); ++i) y[i] = q.process(x[i]);
  q.reset();
  for (Eigen::Index i = x.size(); i-- > 0;) y[i] = q.process(y[i]);
  return y;
}

}  // namespace nanopair
