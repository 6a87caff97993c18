#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "nanopair/trap_model.hpp"
#include "nanopair/types.hpp"

namespace nanopair {

enum class Window { hann, rectangular };
const char* name_of(Window w);

struct WelchOptions {
  Eigen::Index segment_length = 0;  // samples
  double overlap = 0.5;             // fraction of a segment
  Window window = Window::hann;
  bool detrend_mean = true;
};

/// One-sided power spectral density. `value` integrates over frequency to
/// the variance of the (detrended) trace.
struct Psd {
  VecXd frequency;  // Hz
  VecXd value;      // units^2 / Hz
  double sample_rate = 0.0;
  Window window = Window::hann;
  Eigen::Index segment_length = 0;
  double overlap = 0.0;
  Eigen::Index averages = 0;

  double resolution() const { return sample_rate / static_cast<double>(segment_length); }
  /// Rectangle-rule integral over bins whose centre lies in [lo, hi].
  double integrate(double lo, double hi) const;
  double integrate() const;
};

/// One-sided cross spectral density <X conj(Y)>, same normalisation as Psd.
struct CrossPsd {
  VecXd frequency;
  Eigen::VectorXcd value;
  double sample_rate = 0.0;
  Eigen::Index segment_length = 0;
  Eigen::Index averages = 0;
};

/// Averaged modified periodogram (Welch), one-sided, window-power
/// corrected.
Psd welch_psd(const VecXd& x, double sample_rate, const WelchOptions& opts);
CrossPsd cross_psd(const VecXd& x, const VecXd& y, double sample_rate, const WelchOptions& opts);

/// Undo the sinc^2 response of a boxcar average over `factor` integrator
/// steps that produced samples at `psd.sample_rate`.
Psd compensate_boxcar(const Psd& psd, int factor);
/// |H(f)|^2 of a `factor`-point boxcar at output rate fs.
double boxcar_power_response(double f, double fs, int factor);

/// Segment length (power of two) such that `linewidth_hz` spans at least
/// `min_bins` bins, shortened as needed to keep `min_averages` averages.
Eigen::Index auto_segment_length(Eigen::Index n, double sample_rate, double linewidth_hz,
                                 int min_bins = 20, int min_averages = 50, double overlap = 0.5);

struct Band {
  double lo = 0.0;  // Hz
  double hi = 0.0;  // Hz
  bool contains(double f) const { return f >= lo && f <= hi; }
};

struct ModePeak {
  double frequency = 0.0;  // Hz
  double height = 0.0;
  double fwhm = 0.0;  // Hz
};

struct ModePeaks {
  ModePeak plus, minus;  // lower and upper peak
  Band band_plus, band_minus;
};

/// Locates the two mode peaks of a two-mode spectrum and derives the
/// integration bands: +-`fwhm_multiple` FWHM around each peak, clipped at
/// the midpoint between the peaks (and at DC / Nyquist).
/// Without `expected_hz` the second peak must stand 10x above the median
/// spectral level. Throws AnalysisError when two separated peaks are not found.
ModePeaks find_mode_peaks(const Psd& psd, double fwhm_multiple = 50.0,
                          std::optional<Vec2d> expected_hz = std::nullopt);

struct TemperatureEstimate {
  double value = 0.0;        // K
  double uncertainty = 0.0;  // K, one standard error
  Eigen::Index segments = 0;
  double effective_segments = 0.0;
};

/// T = mu w^2 (integral of PSD over band) / k_B. Without the segment
/// series the uncertainty is T / sqrt(non-overlapping segments), the
/// exponential-statistics bound for a mode narrower than one bin.
TemperatureEstimate mode_temperature(const Psd& psd, double modal_mass, double omega, Band band,
                                     std::optional<double> forbidden_hz = std::nullopt);

/// Same from a trace; the uncertainty comes from the spread of per-segment
/// band powers with an AR(1) correction for their correlation. `factor`
/// is the boxcar decimation factor of the trace (1 for point samples).
TemperatureEstimate mode_temperature(const VecXd& trace, double sample_rate, double modal_mass,
                                     double omega, Band band, const WelchOptions& opts,
                                     int factor = 1,
                                     std::optional<double> forbidden_hz = std::nullopt);

/// Per-segment band-integrated power (units^2), boxcar-compensated.
VecXd segment_band_powers(const VecXd& trace, double sample_rate, Band band,
                          const WelchOptions& opts, int factor = 1);

/// Mean and standard error of a correlated series, AR(1) corrected.
struct SeriesMean {
  double mean = 0.0;
  double standard_error = 0.0;
  double lag1 = 0.0;
  double effective_n = 0.0;
};
SeriesMean correlated_mean(const VecXd& x);

// ---------------------------------------------------------------------------
// Normal-mode projection.

/// Mode coordinates a+, a- with s = a+ e+ + a- e-, e = (r, 1)/|(r, 1)|.
struct ModeTraces {
  VecXd z_plus, z_minus;
  double r_plus = 0.0, r_minus = 0.0;
};

ModeTraces project_modes(const VecXd& s1, const VecXd& s2, double r_plus, double r_minus);
/// Inverse of project_modes: (s1, s2).
std::pair<VecXd, VecXd> reconstruct(const ModeTraces& modes);

struct RFit {
  double r_plus = 0.0, r_minus = 0.0;
  /// Off-band / on-band power of each projected trace, in dB (negative).
  double leakage_plus_db = 0.0, leakage_minus_db = 0.0;
  ModePeaks peaks;
  int evaluations = 0;
};

/// Finds r+ (lower peak) and r- (upper peak) by minimising, for each
/// projected trace, the ratio of power in the other mode's band to power
/// in its own band. The z+ trace depends only on r- and vice versa, so the
/// search is a pair of one-dimensional problems: a coarse scan in
/// atan(r) followed by golden-section refinement.
RFit fit_r_pm(const VecXd& s1, const VecXd& s2, double sample_rate, const WelchOptions& opts,
              double fwhm_multiple = 50.0);

/// Band-power leakage metric (dB) of a projected trace for a given r:
///   10 log10(P_other_band / P_own_band).
double leakage_db(const Mat2d& band_power_own, const Mat2d& band_power_other, double r_other);

// ---------------------------------------------------------------------------
// Quadratures and squeezing.

struct QuadratureTrace {
  VecXd t, x, y;
  double omega = 0.0;      // demodulation frequency, rad/s
  double bandwidth = 0.0;  // lowpass cutoff, rad/s
  double sample_rate = 0.0;
};

struct DemodOptions {
  double bandwidth = 0.0;                  // rad/s, Butterworth cutoff
  double mode_separation = 0.0;            // rad/s, 0 skips the check
  double min_bandwidth = 0.0;              // rad/s, typically gamma0
  double trim_time_constants = 20.0;       // settling trimmed from each end
  int output_decimation = 0;               // 0 = automatic (about 20 samples per cutoff period)
};

/// X = LP(2 z cos wt), Y = LP(2 z sin wt) with a zero-phase second-order
/// Butterworth lowpass, so z ~ X cos wt + Y sin wt.
QuadratureTrace demodulate(const VecXd& trace, double sample_rate, double omega,
                           const DemodOptions& opts, double t0 = 0.0);

struct Covariance2 {
  Mat2d cov = Mat2d::Zero();
  Vec2d eigenvalues = Vec2d::Zero();  // ascending
  Mat2d eigenvectors = Mat2d::Identity();
  double angle = 0.0;  // rad, direction of the minor axis
};
Covariance2 quadrature_covariance(const QuadratureTrace& q);

struct SqueezingResult {
  double db = 0.0;
  double angle = 0.0;  // rad
  double uncertainty_db = 0.0;
  double min_variance = 0.0;
  double max_variance = 0.0;
  double correlation_time = 0.0;  // s
  double correlation_times = 0.0;  // record length / correlation time
  bool reliable = true;
};

/// 10 log10(lambda_min / reference_variance).
SqueezingResult squeezing_db(const QuadratureTrace& q, double reference_variance);
/// Reference taken from a drive-off trace as the mean quadrature variance;
/// its own statistical error enters the uncertainty.
SqueezingResult squeezing_db(const QuadratureTrace& q, const QuadratureTrace& reference);

/// Integrated autocorrelation time sum_k rho_k^2 dt of a series, the
/// quantity controlling the variance of a variance estimate.
double variance_correlation_time(const VecXd& x, double sample_rate);

}  // namespace nanopair
