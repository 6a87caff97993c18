// Acceptance checks for the coupled-pair simulator. One PASS/FAIL line per
// criterion; exit status is non-zero if any criterion fails.
//
//   acceptance            run everything
//   acceptance 3 5        run the named criteria only

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "nanopair/analysis.hpp"
#include "nanopair/experiment.hpp"
#include "nanopair/feedback.hpp"
#include "support.hpp"

using namespace nanopair;
using namespace testsupport;

namespace {

// Tolerances.
constexpr double kRatioTol = 1e-10;        // sqrt(3) frequency ratio, relative
constexpr double kResidualTol = 1e-12;     // eigen residual, relative to w^2
constexpr double kFastRuntime = 1.0;       // s
constexpr double kRStretch = -1.60, kRStretchTol = 0.03;
constexpr double kRCom = 0.61, kRComTol = 0.04;
constexpr double kShare = 0.72, kShareTol = 0.03;
constexpr double kSep = 198e-6, kSepTol = 2e-6;
constexpr double kSigmas = 3.0;
constexpr int kMinAverages = 50;
constexpr double kCoolingTol = 0.10;
constexpr double kSpectatorTol = 0.05;
constexpr double kSqueezeTol = 0.10;
constexpr double kSqueezeLimitDb = -3.0;
constexpr double kTargetSqueezeDb = -1.7, kTargetSqueezeTol = 0.2;
constexpr double kParsevalTol = 0.01;
constexpr double kTonePowerTol = 0.01;
constexpr double kIsotropyLo = 0.9, kIsotropyHi = 1.1;
constexpr double kFitTol = 0.05;
constexpr double kLeakageDb = -30.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string config_path(const std::string& name) { return std::string(NANOPAIR_SOURCE_DIR) + "/configs/" + name; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Mean of equal-length runs with the combined one-sigma error.
struct Pooled {
  double value = 0.0, sigma = 0.0;
};

Pooled pool(const std::vector<ReportEntry>& xs) {
  Pooled p;
  for (const auto& e : xs) {
    p.value += e.value;
    p.sigma += e.uncertainty * e.uncertainty;
  }
  p.value /= static_cast<double>(xs.size());
  p.sigma = std::sqrt(p.sigma) / static_cast<double>(xs.size());
  return p;
}

// ---------------------------------------------------------------------------

Outcome normal_mode_theory() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_ratio = 0.0, worst_residual = 0.0;
  PairGenerator equal(17, true);
  for (int i = 0; i < 1000; ++i) {
    RandomPair r = equal.next();
    r.p2.charge_e = r.p1.charge_e;
    const ModeStructure ms = mode_structure(r.trap, r.p1, r.p2);
    worst_ratio = std::max(worst_ratio, std::abs(ms.omega_minus() / ms.omega_plus() / std::sqrt(3.0) - 1.0));
  }
  PairGenerator gen(23);
  for (int i = 0; i < 1000; ++i) {
    const RandomPair r = gen.next();
    const ModeStructure ms = mode_structure(r.trap, r.p1, r.p2);
    const double k = r.trap.kappa * r.trap.u0 / (r.trap.z0 * r.trap.z0);
    const double u1 = 2.0 * r.p1.charge() * k, u2 = 2.0 * r.p2.charge() * k;
    const double c = 2.0 * K::coulomb_k * r.p1.charge() * r.p2.charge() / std::pow(ms.eq.separation, 3);
    Mat2d v;
    v << (u1 + c) / r.p1.mass, -c / r.p1.mass, -c / r.p2.mass, (u2 + c) / r.p2.mass;
    for (int m = 0; m < 2; ++m) {
      const Vec2d e = ms.vectors.col(m).normalized();
      const double w2 = ms.omega(m) * ms.omega(m);
      worst_residual = std::max(worst_residual, (v * e - w2 * e).norm() / w2);
    }
  }
  const double runtime = seconds_since(t0);
  return {worst_ratio < kRatioTol && worst_residual < kResidualTol && runtime < kFastRuntime,
          fmt("max |w-/w+ / sqrt3 - 1| = %.2e (< %.0e), max residual = %.2e (< %.0e), %.3f s", worst_ratio, kRatioTol,
              worst_residual, kResidualTol, runtime)};
}

Outcome reference_characterisation() {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = load_config(config_path("pair_thermal.json"));
  const ModeStructure ms = mode_structure(cfg.trap(), cfg.particle(0), cfg.particle(1));
  // Values are compared per physical branch: the stretch-connected (upper)
  // and the centre-of-mass-connected (lower) eigenvector.
  const double r_stretch = ms.r_minus(), r_com = ms.r_plus();
  const double share = ms.particle_energy_share(0, Mode::minus);
  const double sep = ms.eq.separation;
  const double runtime = seconds_since(t0);
  const bool ok = std::abs(r_stretch - kRStretch) <= kRStretchTol && std::abs(r_com - kRCom) <= kRComTol &&
                  std::abs(share - kShare) <= kShareTol && std::abs(sep - kSep) <= kSepTol && runtime < kFastRuntime;
  return {ok, fmt("stretch branch r = %.4f (%.2f +- %.2f), CoM branch r = %.4f (%.2f +- %.2f), "
                  "E1 share of stretch = %.4f (%.2f +- %.2f), z_sep = %.2f um (%.0f +- %.0f), %.3f s",
                  r_stretch, kRStretch, kRStretchTol, r_com, kRCom, kRComTol, share, kShare, kShareTol, sep * 1e6,
                  kSep * 1e6, kSepTol * 1e6, runtime)};
}

Outcome thermalization() {
  const ExperimentConfig cfg = load_config(config_path("pair_thermal.json"));
  const RunReport rep = run_experiment(cfg).products.report;
  const double averages = rep.value("analysis.averages");
  bool ok = averages >= kMinAverages;
  std::string detail = fmt("p = %.1e mbar, %.0f averages;", *cfg.particles[0].pressure_mbar, averages);
  for (const char* m : {"plus", "minus"}) {
    const ReportEntry& t = rep.at(std::string("temperature.mode_") + m + "_k");
    const double z = (t.value - cfg.temperature_k) / t.uncertainty;
    ok = ok && std::abs(z) <= kSigmas;
    detail += fmt(" T%s = %.1f +- %.1f K (%.1f sigma);", m[0] == 'p' ? "+" : "-", t.value, t.uncertainty, z);
  }
  return {ok, detail};
}

// Noise-free cooling at low damping so the feedback filter is fast compared
// with the cooled linewidth.
constexpr double kGamma0 = 0.1;

ExperimentConfig cooling_base() {
  ExperimentConfig c = small_config();
  for (auto& p : c.particles) p.gamma0_rad_s = kGamma0;
  c.s_nn_m2_hz = 0.0;
  c.run.write_trajectory = false;
  c.analysis.fit_r = false;
  return c;
}

struct CoolingPoint {
  double ratio = 0.0;
  Pooled t_plus, t1_plus, t2_plus;
};

// Several independent chunks per point keep the memory footprint bounded.
// The record length follows the cooled linewidth.
CoolingPoint cooling_point(double ratio) {
  const double gamma = kGamma0 * (1.0 + ratio);
  const double total = std::max(400.0, 2200.0 / gamma);
  const int chunks = static_cast<int>(std::ceil(total / 2000.0));
  std::vector<ReportEntry> tp, t1, t2;
  for (int k = 0; k < chunks; ++k) {
    ExperimentConfig c = cooling_base();
    c.run.duration_s = total / chunks;
    c.run.settle_s = std::min(0.2 * c.run.duration_s, 6.0 / gamma);
    c.run.seed = 1000 + static_cast<std::uint64_t>(k);
    ControllerConfig d;
    d.gain = ratio * kGamma0;
    c.controllers.push_back(d);
    const RunReport rep = run_experiment(c).products.report;
    tp.push_back(rep.at("temperature.mode_plus_k"));
    t1.push_back(rep.at("temperature.particle1_plus_k"));
    t2.push_back(rep.at("temperature.particle2_plus_k"));
  }
  return {ratio, pool(tp), pool(t1), pool(t2)};
}

std::vector<CoolingPoint>& cooling_sweep() {
  static std::vector<CoolingPoint> pts;
  if (pts.empty())
    for (double ratio : {0.1, 1.0, 10.0, 100.0}) pts.push_back(cooling_point(ratio));
  return pts;
}

// Spectator checks run at gas damping, where a long record is cheap: the
// anharmonic Coulomb coupling decorrelates the untargeted mode between runs,
// so its temperature must be resolved in each run separately.
struct SpectatorRun {
  double gain = 0.0;
  RunReport report;
};

std::vector<SpectatorRun>& spectator_runs() {
  static std::vector<SpectatorRun> runs;
  if (runs.empty())
    for (double gain : {0.0, 50.0, 100.0}) {
      ExperimentConfig c = load_config(config_path("pair_damper.json"));
      c.run.duration_s = 1000.0;
      c.run.write_trajectory = false;
      c.analysis.fit_r = false;
      if (gain > 0.0)
        c.controllers.at(0).gain = gain;
      else
        c.controllers.clear();
      runs.push_back({gain, run_experiment(c).products.report});
    }
  return runs;
}

Outcome cooling_law() {
  const double t0 = small_config().temperature_k;
  bool ok = true;
  std::string detail = fmt("gamma0 = %.1f rad/s, S_nn = 0;", kGamma0);
  for (const auto& p : cooling_sweep()) {
    const double theory = t0 / (1.0 + p.ratio);
    const double dev = p.t_plus.value / theory - 1.0;
    ok = ok && std::abs(dev) <= kCoolingTol;
    detail += fmt(" gfb/g0 = %g: T+ = %.3g +- %.2g K vs %.3g K (%+.1f%%);", p.ratio, p.t_plus.value, p.t_plus.sigma,
                  theory, 100.0 * dev);
  }
  return {ok, detail};
}

Outcome spectator_mode() {
  const auto& runs = spectator_runs();
  const ReportEntry& off = runs.front().report.at("temperature.mode_minus_k");
  bool ok = true;
  std::string detail = fmt("gamma0 = %.1f rad/s, T- without feedback %.1f +- %.1f K;",
                           runs.front().report.value("theory.gamma0_minus_rad_s"), off.value, off.uncertainty);
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const ReportEntry& on = runs[i].report.at("temperature.mode_minus_k");
    const double change = on.value / off.value - 1.0;
    ok = ok && std::abs(change) < kSpectatorTol;
    detail += fmt(" gfb = %g: T- = %.1f +- %.1f K (%+.2f%%);", runs[i].gain, on.value, on.uncertainty, 100.0 * change);
  }
  return {ok, detail};
}

// Cooling ratio of each particle's z+ component relative to the bath
// temperature, at the strongest noise-free gain point.
Outcome equal_particle_cooling() {
  const CoolingPoint& on = cooling_sweep().back();
  const double t0 = small_config().temperature_k;
  const Pooled c1{on.t1_plus.value / t0, on.t1_plus.sigma / t0}, c2{on.t2_plus.value / t0, on.t2_plus.sigma / t0};
  const double joint = std::hypot(c1.sigma, c2.sigma);
  const bool ok = std::abs(c1.value - c2.value) <= kSigmas * joint;
  return {ok, fmt("gfb/g0 = %g: particle 1 z+ cooled to %.5f +- %.5f of T0, particle 2 to %.5f +- %.5f "
                  "(diff %.1e, %g sigma bound %.1e)",
                  on.ratio, c1.value, c1.sigma, c2.value, c2.sigma, std::abs(c1.value - c2.value), kSigmas,
                  kSigmas * joint)};
}

Outcome noise_floor_minimum() {
  const ExperimentConfig cfg = load_config(config_path("sweep_noise_floor.json"));
  const SweepResult sw = run_sweep(cfg, 1);
  if (!sw.all_ok()) return {false, "sweep point failed"};
  std::string detail = fmt("S_nn = %.0e m^2/Hz, gamma0 = %.1e rad/s;", cfg.s_nn_m2_hz, *cfg.particles[0].gamma0_rad_s);
  std::size_t best = 0;
  for (std::size_t i = 0; i < sw.rows.size(); ++i) {
    const ReportEntry& t = sw.rows[i].report.at("temperature.mode_plus_k");
    if (t.value < sw.rows[best].report.value("temperature.mode_plus_k")) best = i;
    detail += fmt(" gfb = %g: T+ = %.3g +- %.1g K;", sw.rows[i].value, t.value, t.uncertainty);
  }
  const ReportEntry& tmin = sw.rows[best].report.at("temperature.mode_plus_k");
  const ReportEntry& lo = sw.rows.front().report.at("temperature.mode_plus_k");
  const ReportEntry& hi = sw.rows.back().report.at("temperature.mode_plus_k");
  const bool interior = best > 0 && best + 1 < sw.rows.size();
  const bool resolved = lo.value - tmin.value > kSigmas * std::hypot(lo.uncertainty, tmin.uncertainty) &&
                        hi.value - tmin.value > kSigmas * std::hypot(hi.uncertainty, tmin.uncertainty);
  detail += fmt(" minimum at gfb = %g (%s, %s vs both ends at %g sigma), %s", sw.rows[best].value,
                interior ? "interior" : "endpoint", resolved ? "resolved" : "unresolved", kSigmas,
                tmin.value < 1.0 ? "sub-kelvin" : "above 1 K");
  return {interior && resolved && tmin.value < 1.0, detail};
}

// ---------------------------------------------------------------------------

struct SqueezePoint {
  double g = 0.0;
  RunReport driven, reference;
};

SqueezePoint squeeze_point(double g) {
  ExperimentConfig cfg = load_config(config_path("pair_squeezer.json"));
  cfg.run.write_trajectory = false;
  const ModeStructure ms = mode_structure(cfg.trap(), cfg.particle(0), cfg.particle(1));
  const double gamma0 = modal_damping(ms, Mode::plus, Vec2d(cfg.particle(0).gamma0, cfg.particle(1).gamma0));
  cfg.controllers.at(0).gain = g * 2.0 * gamma0 * ms.omega_plus();
  const ExperimentResult res = run_experiment(cfg);
  const ExperimentConfig ref_cfg = reference_config(cfg);
  return {g, res.products.report, analyze_trajectory(ref_cfg, *res.reference).report};
}

std::vector<SqueezePoint>& squeeze_sweep() {
  static std::vector<SqueezePoint> pts;
  if (pts.empty())
    for (double g : {0.25, 0.5, 0.75, 0.9}) pts.push_back(squeeze_point(g));
  return pts;
}

Outcome squeezing_law() {
  bool ok = true;
  std::string detail;
  for (const auto& p : squeeze_sweep()) {
    const ReportEntry& s = p.driven.at("squeezing.mode_plus_db");
    const double ratio = std::pow(10.0, s.value / 10.0), theory = 1.0 / (1.0 + p.g);
    const double dev = ratio / theory - 1.0;
    ok = ok && std::abs(dev) <= kSqueezeTol && p.driven.value("controller.0.above_threshold") == 0.0;
    detail += fmt(" g = %.3g: var ratio %.3f vs %.3f (%+.1f%%);", p.driven.value("controller.0.g"), ratio, theory,
                  100.0 * dev);
  }
  return {ok, detail};
}

Outcome squeezing_limit() {
  bool ok = true;
  std::string detail = "deepest squeezing per g:";
  for (const auto& p : squeeze_sweep()) {
    double deepest = 0.0;
    for (const char* k : {"squeezing.mode_plus_db", "squeezing.particle1_plus_db", "squeezing.particle2_plus_db"})
      deepest = std::min(deepest, p.driven.value(k));
    ok = ok && deepest > kSqueezeLimitDb;
    detail += fmt(" g = %.2f: %.2f dB;", p.g, deepest);
  }
  return {ok, detail + fmt(" bound %.0f dB", kSqueezeLimitDb)};
}

Outcome sympathetic_squeezing() {
  // Drive strength at which particle 1 shows about -1.7 dB.
  const double g = 0.53;
  const SqueezePoint p = squeeze_point(g);
  const ReportEntry& s1 = p.driven.at("squeezing.particle1_plus_db");
  const ReportEntry& s2 = p.driven.at("squeezing.particle2_plus_db");
  const double joint = std::hypot(s1.uncertainty, s2.uncertainty);
  const bool ok = std::abs(s1.value - kTargetSqueezeDb) <= kTargetSqueezeTol && std::abs(s1.value - s2.value) <= joint &&
                  p.driven.value("squeezing.particle1_plus_reliable") == 1.0;
  return {ok, fmt("g = %.3f: particle 1 %.3f +- %.3f dB, particle 2 %.3f +- %.3f dB (joint error %.3f dB)", g,
                  s1.value, s1.uncertainty, s2.value, s2.uncertainty, joint)};
}

Outcome squeezing_spectator() {
  bool ok = true;
  std::string detail = "T- driven vs drive-off reference:";
  for (const auto& p : squeeze_sweep()) {
    const double on = p.driven.value("temperature.mode_minus_k"), off = p.reference.value("temperature.mode_minus_k");
    const double change = on / off - 1.0;
    ok = ok && std::abs(change) < kSpectatorTol;
    detail += fmt(" g = %.2f: %+.2f%%;", p.g, 100.0 * change);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------

VecXd white(Eigen::Index n, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  VecXd x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

Outcome estimator_suite() {
  std::string detail;
  bool ok = true;

  const double fs = 1000.0, sigma = 0.5;
  const VecXd x = white(1 << 20, sigma, 5);
  WelchOptions wo;
  wo.segment_length = 4096;
  const Psd psd = welch_psd(x, fs, wo);
  const double var = (x.array() - x.mean()).square().mean();
  const double parseval = psd.integrate() / var - 1.0;
  ok = ok && std::abs(parseval) <= kParsevalTol;
  detail += fmt(" Parseval %+.2e;", parseval);

  // Mean over interior bins; each bin has relative error 1/sqrt(averages).
  const Eigen::Index bins = psd.value.size() - 2;
  const double level = psd.value.segment(1, bins).mean();
  const double expected = sigma * sigma / (fs / 2.0);
  const double level_err = expected / std::sqrt(static_cast<double>(psd.averages) * static_cast<double>(bins));
  ok = ok && std::abs(level - expected) <= kSigmas * level_err;
  detail += fmt(" white level %+.2e rel (%.0f sigma bound %.1e);", level / expected - 1.0, kSigmas,
                kSigmas * level_err / expected);

  VecXd tone(1 << 18);
  for (Eigen::Index i = 0; i < tone.size(); ++i) tone[i] = 2.0 * std::cos(2.0 * kPi * 123.4 * i / fs + 0.4);
  wo.segment_length = 8192;
  const double tone_err = welch_psd(tone, fs, wo).integrate() / 2.0 - 1.0;
  ok = ok && std::abs(tone_err) <= kTonePowerTol;
  detail += fmt(" tone power %+.2e;", tone_err);

  const double w = 2.0 * kPi * 240.0;
  ExactOscillator osc(w, 20.0, 1.0, 2000.0, 9);
  DemodOptions dopt;
  dopt.bandwidth = 300.0;
  const Covariance2 c = quadrature_covariance(demodulate(osc.sample(2000 * 1000), 2000.0, w, dopt));
  const double iso = c.eigenvalues(0) / c.eigenvalues(1);
  ok = ok && iso >= kIsotropyLo && iso <= kIsotropyHi;
  detail += fmt(" quadrature eigenvalue ratio %.3f", iso);
  return {ok, detail};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / "nanopair_acceptance_determinism";
  std::filesystem::remove_all(root);
  bool ok = true;
  std::string detail;
  for (const char* name : {"pair_damper.json", "pair_squeezer.json"}) {
    ExperimentConfig cfg = load_config(config_path(name));
    cfg.run.duration_s = 20.0;
    cfg.run.settle_s = 1.0;
    cfg.run.write_trajectory = true;
    const auto a = root / (std::string(name) + ".a"), b = root / (std::string(name) + ".b");
    write_outputs(a.string(), cfg, run_experiment(cfg));
    write_outputs(b.string(), cfg, run_experiment(cfg));
    for (const char* f : {"trajectory.csv", "report.txt", "psd.csv"}) {
      const std::string da = slurp(a / f), db = slurp(b / f);
      const bool same = !da.empty() && da == db;
      ok = ok && same;
      detail += fmt(" %s/%s %s;", name, f, same ? "identical" : "DIFFERS");
    }
  }
  std::filesystem::remove_all(root);
  return {ok, detail};
}

Outcome fit_round_trip() {
  struct Case {
    double rp, rm;
  };
  const Case cases[] = {{0.6275, -1.5936}, {1.0, -1.0}, {0.3, -2.5}, {2.0, -0.45}};
  bool ok = true;
  std::string detail;
  std::uint64_t seed = 40;
  for (const Case& k : cases) {
    const double fs = 2000.0;
    const TwoModeData d = two_mode_traces(k.rp, k.rm, 238.0, 415.5, 2.0, fs, 1 << 19, seed += 2);
    WelchOptions wo;
    wo.segment_length = 8192;
    const RFit fit = fit_r_pm(d.s1, d.s2, fs, wo);
    // Leakage measured against the known mode amplitudes: regress each
    // projected trace on a+ and a-.
    const ModeTraces m = project_modes(d.s1, d.s2, fit.r_plus, fit.r_minus);
    Eigen::MatrixXd basis(d.a_plus.size(), 2);
    basis << d.a_plus, d.a_minus;
    const Vec2d cp = basis.colPivHouseholderQr().solve(m.z_plus);
    const Vec2d cm = basis.colPivHouseholderQr().solve(m.z_minus);
    const double leak_p = 20.0 * std::log10(std::abs(cp(1) / cp(0)));
    const double leak_m = 20.0 * std::log10(std::abs(cm(0) / cm(1)));
    const bool good = std::abs(fit.r_plus - k.rp) <= kFitTol && std::abs(fit.r_minus - k.rm) <= kFitTol &&
                      leak_p < kLeakageDb && leak_m < kLeakageDb;
    ok = ok && good;
    detail += fmt(" (%.3f, %.3f) -> (%.4f, %.4f), leakage %.0f/%.0f dB;", k.rp, k.rm, fit.r_plus, fit.r_minus, leak_p,
                  leak_m);
  }
  return {ok, detail};
}

struct Criterion {
  std::string id, name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"1", "normal-mode theory", normal_mode_theory},
      {"2", "reference pair characterisation", reference_characterisation},
      {"3", "thermalization", thermalization},
      {"4a", "sympathetic cooling law", cooling_law},
      {"4b", "untargeted mode unchanged by cooling", spectator_mode},
      {"4c", "both particles cooled by the same ratio", equal_particle_cooling},
      {"4d", "detection noise gives a gain-temperature minimum", noise_floor_minimum},
      {"5a", "squeezing follows 1/(1+g)", squeezing_law},
      {"5b", "squeezing never beyond 3 dB", squeezing_limit},
      {"5c", "particle 2 squeezed like particle 1", sympathetic_squeezing},
      {"5d", "untargeted mode unchanged by squeezing", squeezing_spectator},
      {"6", "estimator suite", estimator_suite},
      {"7", "determinism", determinism},
      {"8", "mixing-ratio fit round trip", fit_round_trip},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s [%s] %s (%.1f s):%s%s\n", o.pass ? "PASS" : "FAIL", c.id.c_str(), c.name.c_str(),
                seconds_since(t0), o.detail.empty() || o.detail[0] == ' ' ? "" : " ", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
