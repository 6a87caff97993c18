#include "nanopair/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <unsupported/Eigen/FFT>

#include "nanopair/filters.hpp"

namespace nanopair {

namespace {

using Index = Eigen::Index;
using cd = std::complex<double>;

VecXd make_window(Window w, Index n) {
  VecXd out(n);
  if (w == Window::rectangular) return VecXd::Ones(n);
  // Periodic Hann.
  for (Index i = 0; i < n; ++i)
    out[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return out;
}

struct SegmentPlan {
  Index length = 0;
  Index step = 0;
  Index count = 0;
};

SegmentPlan plan_segments(Index n, const WelchOptions& opts) {
  if (!(opts.overlap >= 0.0 && opts.overlap < 1.0)) throw AnalysisError("welch: overlap must lie in [0, 1)");
  SegmentPlan p;
  p.length = opts.segment_length > 0 ? opts.segment_length : auto_segment_length(n, 1.0, 0.0);
  if (p.length < 8) throw AnalysisError("welch: segment length must be >= 8");
  if (p.length > n)
    throw AnalysisError("welch: trace of " + std::to_string(n) + " samples is shorter than one segment (" +
                        std::to_string(p.length) + ")");
  p.step = std::max<Index>(1, p.length - static_cast<Index>(std::llround(opts.overlap * static_cast<double>(p.length))));
  p.count = 1 + (n - p.length) / p.step;
  return p;
}

// One-sided weight of bin k for a length-n transform.
double side_weight(Index k, Index n) {
  if (k == 0) return 1.0;
  if (n % 2 == 0 && k == n / 2) return 1.0;
  return 2.0;
}

// Calls fn(segment_index, spectrum) with the half spectrum of each
// detrended, windowed segment.
template <class Fn>
void for_each_segment(const VecXd& x, const SegmentPlan& p, const VecXd& w, bool detrend, Fn&& fn) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buf(static_cast<std::size_t>(p.length));
  std::vector<cd> spec;
  for (Index s = 0; s < p.count; ++s) {
    const auto seg = x.segment(s * p.step, p.length);
    const double mean = detrend ? seg.mean() : 0.0;
    for (Index i = 0; i < p.length; ++i) buf[static_cast<std::size_t>(i)] = (seg[i] - mean) * w[i];
    fft.fwd(spec, buf);
    fn(s, spec);
  }
}

VecXd bin_frequencies(Index n, double fs) {
  const Index nb = n / 2 + 1;
  VecXd f(nb);
  for (Index k = 0; k < nb; ++k) f[k] = static_cast<double>(k) * fs / static_cast<double>(n);
  return f;
}

}  // namespace

const char* name_of(Window w) { return w == Window::hann ? "hann" : "rectangular"; }

double Psd::integrate(double lo, double hi) const {
  double sum = 0.0;
  for (Index k = 0; k < value.size(); ++k)
    if (frequency[k] >= lo && frequency[k] <= hi) sum += value[k];
  return sum * resolution();
}

double Psd::integrate() const { return value.sum() * resolution(); }

Index auto_segment_length(Index n, double sample_rate, double linewidth_hz, int min_bins,
                          int min_averages, double overlap) {
  // Longest power of two that still gives min_averages segments.
  const double step_fraction = 1.0 - overlap;
  const double max_len = static_cast<double>(n) / (1.0 + step_fraction * (min_averages - 1));
  Index cap = 8;
  while (static_cast<double>(cap * 2) <= max_len) cap *= 2;
  if (!(linewidth_hz > 0.0)) return cap;
  Index len = 8;
  while (sample_rate / static_cast<double>(len) > linewidth_hz / min_bins && len < cap) len *= 2;
  return std::min(len, cap);
}

Psd welch_psd(const VecXd& x, double sample_rate, const WelchOptions& opts) {
  if (!(sample_rate > 0.0)) throw AnalysisError("welch: sample rate must be > 0");
  const SegmentPlan p = plan_segments(x.size(), opts);
  const VecXd w = make_window(opts.window, p.length);
  const double u = w.squaredNorm();
  const Index nb = p.length / 2 + 1;
  VecXd acc = VecXd::Zero(nb);
  for_each_segment(x, p, w, opts.detrend_mean, [&](Index, const std::vector<cd>& spec) {
    for (Index k = 0; k < nb; ++k) acc[k] += std::norm(spec[static_cast<std::size_t>(k)]);
  });
  Psd out;
  out.frequency = bin_frequencies(p.length, sample_rate);
  out.value.resize(nb);
  const double norm = 1.0 / (sample_rate * u * static_cast<double>(p.count));
  for (Index k = 0; k < nb; ++k) out.value[k] = acc[k] * norm * side_weight(k, p.length);
  out.sample_rate = sample_rate;
  out.window = opts.window;
  out.segment_length = p.length;
  out.overlap = opts.overlap;
  out.averages = p.count;
  return out;
}

CrossPsd cross_psd(const VecXd& x, const VecXd& y, double sample_rate, const WelchOptions& opts) {
  if (x.size() != y.size()) throw AnalysisError("cross_psd: traces differ in length");
  if (!(sample_rate > 0.0)) throw AnalysisError("cross_psd: sample rate must be > 0");
  const SegmentPlan p = plan_segments(x.size(), opts);
  const VecXd w = make_window(opts.window, p.length);
  const double u = w.squaredNorm();
  const Index nb = p.length / 2 + 1;
  std::vector<std::vector<cd>> xs(static_cast<std::size_t>(p.count));
  for_each_segment(x, p, w, opts.detrend_mean,
                   [&](Index s, const std::vector<cd>& spec) { xs[static_cast<std::size_t>(s)] = spec; });
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(nb);
  for_each_segment(y, p, w, opts.detrend_mean, [&](Index s, const std::vector<cd>& spec) {
    const auto& xs_s = xs[static_cast<std::size_t>(s)];
    for (Index k = 0; k < nb; ++k)
      acc[k] += xs_s[static_cast<std::size_t>(k)] * std::conj(spec[static_cast<std::size_t>(k)]);
  });
  CrossPsd out;
  out.frequency = bin_frequencies(p.length, sample_rate);
  out.value.resize(nb);
  const double norm = 1.0 / (sample_rate * u * static_cast<double>(p.count));
  for (Index k = 0; k < nb; ++k) out.value[k] = acc[k] * norm * side_weight(k, p.length);
  out.sample_rate = sample_rate;
  out.segment_length = p.length;
  out.averages = p.count;
  return out;
}

double boxcar_power_response(double f, double fs, int factor) {
  if (factor <= 1 || f == 0.0) return 1.0;
  const double x = std::numbers::pi * f / (fs * factor);
  const double h = std::sin(factor * x) / (factor * std::sin(x));
  return h * h;
}

Psd compensate_boxcar(const Psd& psd, int factor) {
  Psd out = psd;
  if (factor <= 1) return out;
  for (Index k = 0; k < out.value.size(); ++k)
    out.value[k] /= boxcar_power_response(out.frequency[k], out.sample_rate, factor);
  return out;
}

// ---------------------------------------------------------------------------

ModePeaks find_mode_peaks(const Psd& psd, double fwhm_multiple, std::optional<Vec2d> expected_hz) {
  const VecXd& P = psd.value;
  const Index n = P.size();
  if (n < 8) throw AnalysisError("find_mode_peaks: spectrum too short");
  const double df = psd.resolution();

  std::vector<Index> picks;
  if (expected_hz) {
    const double sep = std::abs((*expected_hz)(1) - (*expected_hz)(0));
    for (int m = 0; m < 2; ++m) {
      const double f0 = (*expected_hz)(m);
      Index best = -1;
      for (Index k = 1; k < n; ++k)
        if (std::abs(psd.frequency[k] - f0) <= 0.25 * sep && (best < 0 || P[k] > P[best])) best = k;
      if (best < 0) throw AnalysisError("find_mode_peaks: no bins near expected mode frequency");
      picks.push_back(best);
    }
  } else {
    const Index w = 2;
    std::vector<Index> maxima;
    for (Index k = 1; k < n; ++k) {
      bool is_max = true;
      for (Index j = std::max<Index>(1, k - w); j <= std::min(n - 1, k + w) && is_max; ++j)
        if (j != k && P[j] > P[k]) is_max = false;
      if (is_max) maxima.push_back(k);
    }
    std::sort(maxima.begin(), maxima.end(), [&](Index a, Index b) { return P[a] > P[b]; });
    if (maxima.empty()) throw AnalysisError("find_mode_peaks: no peaks found");
    const Index top = maxima.front();
    std::vector<double> sorted(P.data() + 1, P.data() + n);
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double floor = sorted[sorted.size() / 2];
    for (std::size_t i = 1; i < maxima.size(); ++i) {
      const Index c = maxima[i];
      if (P[c] < 10.0 * floor) break;
      const Index lo = std::min(top, c), hi = std::max(top, c);
      const double valley = P.segment(lo, hi - lo + 1).minCoeff();
      if (valley < 0.5 * std::min(P[top], P[c]) && hi - lo >= 3) {
        picks = {top, c};
        break;
      }
    }
    if (picks.empty()) throw AnalysisError("find_mode_peaks: two resolved mode peaks not found (peaks unresolved)");
  }
  std::sort(picks.begin(), picks.end());
  const Index kp = picks[0], km = picks[1];
  const Index valley_idx = [&] {
    Index v = kp;
    for (Index k = kp; k <= km; ++k)
      if (P[k] < P[v]) v = k;
    return v;
  }();
  if (!(P[valley_idx] < 0.5 * std::min(P[kp], P[km])))
    throw AnalysisError("find_mode_peaks: peaks unresolved (no valley between them)");

  auto half_width = [&](Index k, Index lo_limit, Index hi_limit) {
    const double half = 0.5 * P[k];
    double left = psd.frequency[k], right = psd.frequency[k];
    for (Index j = k; j > lo_limit; --j)
      if (P[j - 1] < half) {
        const double frac = (P[j] - half) / (P[j] - P[j - 1]);
        left = psd.frequency[j] - frac * df;
        break;
      }
    for (Index j = k; j < hi_limit; ++j)
      if (P[j + 1] < half) {
        const double frac = (P[j] - half) / (P[j] - P[j + 1]);
        right = psd.frequency[j] + frac * df;
        break;
      }
    return std::max(right - left, df);
  };

  ModePeaks out;
  out.plus = {psd.frequency[kp], P[kp], half_width(kp, 1, valley_idx)};
  out.minus = {psd.frequency[km], P[km], half_width(km, valley_idx, n - 1)};
  const double mid = 0.5 * (out.plus.frequency + out.minus.frequency);
  const double nyquist = psd.frequency[n - 1];
  out.band_plus = {std::max(df, out.plus.frequency - fwhm_multiple * out.plus.fwhm),
                   std::min(mid, out.plus.frequency + fwhm_multiple * out.plus.fwhm)};
  out.band_minus = {std::max(mid, out.minus.frequency - fwhm_multiple * out.minus.fwhm),
                    std::min(nyquist, out.minus.frequency + fwhm_multiple * out.minus.fwhm)};
  return out;
}

SeriesMean correlated_mean(const VecXd& x) {
  SeriesMean r;
  const Index n = x.size();
  if (n == 0) return r;
  r.mean = x.mean();
  r.effective_n = static_cast<double>(n);
  if (n < 3) return r;
  const VecXd d = x.array() - r.mean;
  const double c0 = d.squaredNorm() / static_cast<double>(n);
  if (c0 == 0.0) return r;
  const double c1 = d.head(n - 1).dot(d.tail(n - 1)) / static_cast<double>(n);
  r.lag1 = std::clamp(c1 / c0, 0.0, 0.99);
  r.effective_n = static_cast<double>(n) * (1.0 - r.lag1) / (1.0 + r.lag1);
  const double sd = std::sqrt(d.squaredNorm() / static_cast<double>(n - 1));
  r.standard_error = sd / std::sqrt(std::max(1.0, r.effective_n));
  return r;
}

VecXd segment_band_powers(const VecXd& trace, double sample_rate, Band band,
                          const WelchOptions& opts, int factor) {
  const SegmentPlan p = plan_segments(trace.size(), opts);
  const VecXd w = make_window(opts.window, p.length);
  const double u = w.squaredNorm();
  const VecXd f = bin_frequencies(p.length, sample_rate);
  std::vector<std::pair<Index, double>> bins;  // bin, weight
  for (Index k = 0; k < f.size(); ++k)
    if (band.contains(f[k]))
      bins.emplace_back(k, side_weight(k, p.length) / boxcar_power_response(f[k], sample_rate, factor));
  if (bins.empty()) throw AnalysisError("band contains no frequency bins");
  VecXd out(p.count);
  const double norm = 1.0 / (sample_rate * u) * (sample_rate / static_cast<double>(p.length));
  for_each_segment(trace, p, w, opts.detrend_mean, [&](Index s, const std::vector<cd>& spec) {
    double sum = 0.0;
    for (const auto& [k, wt] : bins) sum += wt * std::norm(spec[static_cast<std::size_t>(k)]);
    out[s] = sum * norm;
  });
  return out;
}

namespace {
void check_band(Band band, std::optional<double> forbidden_hz) {
  if (!(band.hi > band.lo)) throw AnalysisError("mode_temperature: empty band");
  if (forbidden_hz && band.contains(*forbidden_hz))
    throw AnalysisError("mode_temperature: band overlaps both modes");
}
}  // namespace

TemperatureEstimate mode_temperature(const Psd& psd, double modal_mass, double omega, Band band,
                                     std::optional<double> forbidden_hz) {
  check_band(band, forbidden_hz);
  const double scale = modal_mass * omega * omega / K::k_B;
  TemperatureEstimate t;
  t.value = scale * psd.integrate(band.lo, band.hi);
  t.segments = psd.averages;
  // Non-overlapping segment count; each treated as one independent draw.
  t.effective_segments = std::max(1.0, static_cast<double>(psd.averages) * (1.0 - psd.overlap));
  t.uncertainty = t.value / std::sqrt(t.effective_segments);
  return t;
}

TemperatureEstimate mode_temperature(const VecXd& trace, double sample_rate, double modal_mass,
                                     double omega, Band band, const WelchOptions& opts, int factor,
                                     std::optional<double> forbidden_hz) {
  check_band(band, forbidden_hz);
  const VecXd powers = segment_band_powers(trace, sample_rate, band, opts, factor);
  const SeriesMean m = correlated_mean(powers);
  const double scale = modal_mass * omega * omega / K::k_B;
  TemperatureEstimate t;
  t.value = scale * m.mean;
  t.uncertainty = scale * m.standard_error;
  t.segments = powers.size();
  t.effective_segments = m.effective_n;
  return t;
}

// ---------------------------------------------------------------------------

ModeTraces project_modes(const VecXd& s1, const VecXd& s2, double r_plus, double r_minus) {
  if (s1.size() != s2.size()) throw AnalysisError("project_modes: traces differ in length");
  if (!std::isfinite(r_plus) || !std::isfinite(r_minus)) throw AnalysisError("project_modes: r must be finite");
  const double det = r_plus - r_minus;
  if (std::abs(det) < 1e-12 * std::max(1.0, std::abs(r_plus)))
    throw AnalysisError("project_modes: r+ == r- (degenerate basis)");
  const double n_plus = std::hypot(r_plus, 1.0);
  const double n_minus = std::hypot(r_minus, 1.0);
  ModeTraces m;
  m.r_plus = r_plus;
  m.r_minus = r_minus;
  m.z_plus = (n_plus / det) * (s1 - r_minus * s2);
  m.z_minus = (n_minus / det) * (r_plus * s2 - s1);
  return m;
}

std::pair<VecXd, VecXd> reconstruct(const ModeTraces& m) {
  const double n_plus = std::hypot(m.r_plus, 1.0);
  const double n_minus = std::hypot(m.r_minus, 1.0);
  VecXd s1 = (m.r_plus / n_plus) * m.z_plus + (m.r_minus / n_minus) * m.z_minus;
  VecXd s2 = (1.0 / n_plus) * m.z_plus + (1.0 / n_minus) * m.z_minus;
  return {std::move(s1), std::move(s2)};
}

double leakage_db(const Mat2d& own, const Mat2d& other, double r) {
  const Vec2d v(1.0, -r);
  return 10.0 * std::log10(v.dot(other * v) / v.dot(own * v));
}

namespace {

Mat2d band_matrix(const Psd& p11, const Psd& p22, const CrossPsd& p12, Band b) {
  Mat2d m = Mat2d::Zero();
  for (Index k = 0; k < p11.value.size(); ++k) {
    if (!b.contains(p11.frequency[k])) continue;
    m(0, 0) += p11.value[k];
    m(1, 1) += p22.value[k];
    m(0, 1) += p12.value[k].real();
  }
  m(1, 0) = m(0, 1);
  return m;
}

// Minimises f(tan(theta)) over theta in (-pi/2, pi/2).
double minimise_over_r(const std::function<double(double)>& f, int& evaluations) {
  const int n = 2001;
  const double lim = 0.5 * std::numbers::pi;
  const double h = 2.0 * lim / (n + 1);
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double th = -lim + (i + 1) * h;
    const double v = f(std::tan(th));
    ++evaluations;
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  if (best == 0 || best == n - 1)
    throw AnalysisError("fit_r_pm: leakage minimum at |r| -> infinity; optimiser did not converge (best |r| = " +
                        std::to_string(std::abs(std::tan(-lim + (best + 1) * h))) + ")");
  double a = -lim + best * h, b = -lim + (best + 2) * h;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(std::tan(c)), fd = f(std::tan(d));
  evaluations += 2;
  while (b - a > 1e-12) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(std::tan(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(std::tan(d));
    }
    ++evaluations;
  }
  return std::tan(0.5 * (a + b));
}

}  // namespace

RFit fit_r_pm(const VecXd& s1, const VecXd& s2, double sample_rate, const WelchOptions& opts,
              double fwhm_multiple) {
  if (s1.size() != s2.size()) throw AnalysisError("fit_r_pm: traces differ in length");
  const Psd p11 = welch_psd(s1, sample_rate, opts);
  const Psd p22 = welch_psd(s2, sample_rate, opts);
  const CrossPsd p12 = cross_psd(s1, s2, sample_rate, opts);
  Psd total = p11;
  total.value += p22.value;

  RFit fit;
  fit.peaks = find_mode_peaks(total, fwhm_multiple);
  const Mat2d b_plus = band_matrix(p11, p22, p12, fit.peaks.band_plus);
  const Mat2d b_minus = band_matrix(p11, p22, p12, fit.peaks.band_minus);

  // z+ ~ s1 - r- s2 must not contain the upper mode; z- ~ s1 - r+ s2 must
  // not contain the lower one.
  fit.r_minus = minimise_over_r([&](double r) { return leakage_db(b_plus, b_minus, r); }, fit.evaluations);
  fit.r_plus = minimise_over_r([&](double r) { return leakage_db(b_minus, b_plus, r); }, fit.evaluations);
  if (std::abs(fit.r_plus - fit.r_minus) < 1e-6)
    throw AnalysisError("fit_r_pm: fitted r+ and r- coincide; modes not separable");
  fit.leakage_plus_db = leakage_db(b_plus, b_minus, fit.r_minus);
  fit.leakage_minus_db = leakage_db(b_minus, b_plus, fit.r_plus);
  return fit;
}

// ---------------------------------------------------------------------------

QuadratureTrace demodulate(const VecXd& trace, double sample_rate, double omega,
                           const DemodOptions& opts, double t0) {
  const double bw = opts.bandwidth;
  if (!(sample_rate > 0.0 && omega > 0.0)) throw AnalysisError("demodulate: invalid sample rate or frequency");
  if (!(bw > 0.0)) throw AnalysisError("demodulate: lowpass bandwidth must be > 0");
  if (opts.mode_separation > 0.0 && !(bw < opts.mode_separation))
    throw AnalysisError("demodulate: bandwidth must be below the mode separation");
  if (!(bw > opts.min_bandwidth)) throw AnalysisError("demodulate: bandwidth must exceed the mode linewidth");
  if (!(bw < omega)) throw AnalysisError("demodulate: bandwidth must be below the demodulation frequency");
  if (!(omega + bw < std::numbers::pi * sample_rate)) throw AnalysisError("demodulate: frequency above Nyquist");

  const Index n = trace.size();
  VecXd xc(n), xs(n);
  for (Index i = 0; i < n; ++i) {
    const double ph = omega * (t0 + static_cast<double>(i) / sample_rate);
    xc[i] = 2.0 * trace[i] * std::cos(ph);
    xs[i] = 2.0 * trace[i] * std::sin(ph);
  }
  const Biquad lp = butterworth_lowpass(bw, sample_rate);
  const VecXd fx = filtfilt(lp, xc);
  const VecXd fy = filtfilt(lp, xs);

  const Index trim = static_cast<Index>(std::ceil(opts.trim_time_constants * sample_rate / bw));
  if (n <= 2 * trim + 1) throw AnalysisError("demodulate: trace too short for the filter settling time");
  Index dec = opts.output_decimation;
  if (dec <= 0) dec = std::max<Index>(1, static_cast<Index>(std::floor(sample_rate * two_pi / (20.0 * bw))));
  const Index m = (n - 2 * trim + dec - 1) / dec;

  QuadratureTrace q;
  q.omega = omega;
  q.bandwidth = bw;
  q.sample_rate = sample_rate / static_cast<double>(dec);
  q.t.resize(m);
  q.x.resize(m);
  q.y.resize(m);
  for (Index j = 0; j < m; ++j) {
    const Index i = trim + j * dec;
    q.t[j] = t0 + static_cast<double>(i) / sample_rate;
    q.x[j] = fx[i];
    q.y[j] = fy[i];
  }
  return q;
}

Covariance2 quadrature_covariance(const QuadratureTrace& q) {
  const Index n = q.x.size();
  if (n < 2) throw AnalysisError("quadrature covariance needs at least two samples");
  Eigen::Matrix<double, Eigen::Dynamic, 2> d(n, 2);
  d.col(0) = q.x.array() - q.x.mean();
  d.col(1) = q.y.array() - q.y.mean();
  Covariance2 c;
  c.cov = d.transpose() * d / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Mat2d> es(c.cov);
  c.eigenvalues = es.eigenvalues();
  c.eigenvectors = es.eigenvectors();
  c.angle = std::atan2(c.eigenvectors(1, 0), c.eigenvectors(0, 0));
  if (c.angle > 0.5 * std::numbers::pi) c.angle -= std::numbers::pi;
  if (c.angle <= -0.5 * std::numbers::pi) c.angle += std::numbers::pi;
  return c;
}

double variance_correlation_time(const VecXd& x, double sample_rate) {
  const Index n = x.size();
  if (n < 4) return static_cast<double>(n) / sample_rate;
  Index m = 1;
  while (m < 2 * n) m *= 2;
  std::vector<double> buf(static_cast<std::size_t>(m), 0.0);
  const double mean = x.mean();
  for (Index i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = x[i] - mean;
  Eigen::FFT<double> fft;
  std::vector<cd> spec;
  fft.fwd(spec, buf);
  for (auto& v : spec) v = std::norm(v);
  std::vector<cd> ac;
  fft.inv(ac, spec);
  const double c0 = ac[0].real();
  if (c0 <= 0.0) return 1.0 / sample_rate;
  double sum = 1.0;
  for (Index k = 1; k < n / 4; ++k) {
    const double rho = ac[static_cast<std::size_t>(k)].real() / c0;
    if (rho <= 0.0) break;
    sum += 2.0 * rho * rho;
  }
  return sum / sample_rate;
}

SqueezingResult squeezing_db(const QuadratureTrace& q, double reference_variance) {
  if (!(reference_variance > 0.0)) throw AnalysisError("squeezing_db: reference variance must be > 0");
  const Covariance2 c = quadrature_covariance(q);
  SqueezingResult r;
  r.min_variance = c.eigenvalues(0);
  r.max_variance = c.eigenvalues(1);
  r.angle = c.angle;
  r.db = 10.0 * std::log10(r.min_variance / reference_variance);
  const VecXd p = c.eigenvectors(0, 0) * q.x + c.eigenvectors(1, 0) * q.y;
  r.correlation_time = variance_correlation_time(p, q.sample_rate);
  const double record = static_cast<double>(q.x.size()) / q.sample_rate;
  r.correlation_times = record / r.correlation_time;
  const double rel = std::sqrt(2.0 * r.correlation_time / record);
  r.uncertainty_db = 10.0 / std::numbers::ln10 * rel;
  r.reliable = r.correlation_times >= 100.0;
  return r;
}

SqueezingResult squeezing_db(const QuadratureTrace& q, const QuadratureTrace& reference) {
  const Covariance2 rc = quadrature_covariance(reference);
  const double ref_var = 0.5 * rc.cov.trace();
  SqueezingResult r = squeezing_db(q, ref_var);
  const double tau = 0.5 * (variance_correlation_time(reference.x, reference.sample_rate) +
                            variance_correlation_time(reference.y, reference.sample_rate));
  const double record = static_cast<double>(reference.x.size()) / reference.sample_rate;
  // Two quadratures averaged.
  const double rel_ref = std::sqrt(tau / record);
  const double rel = r.uncertainty_db * std::numbers::ln10 / 10.0;
  r.uncertainty_db = 10.0 / std::numbers::ln10 * std::hypot(rel, rel_ref);
  r.reliable = r.reliable && record / tau >= 100.0;
  return r;
}

}  // namespace nanopair
