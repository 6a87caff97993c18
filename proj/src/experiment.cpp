#include "nanopair/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include "nanopair/trajectory_io.hpp"

namespace nanopair {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

const char* mode_key(Mode m) { return m == Mode::plus ? "plus" : "minus"; }

VecXd tail(const VecXd& x, Eigen::Index start) { return x.segment(start, x.size() - start); }

// Output samples per detector sample window; 1 for point sampling.
int measured_boxcar(const Trajectory& tr) {
  if (tr.decimation != Decimation::average || !(tr.controller_rate > 0.0)) return 1;
  return std::max(1, static_cast<int>(std::lround(tr.controller_rate / tr.sample_rate)));
}

}  // namespace

// ---------------------------------------------------------------------------

void RunReport::add(const std::string& key, double value, double uncertainty) {
  entries.push_back({key, value, uncertainty, false});
}

void RunReport::add_exact(const std::string& key, double value) { entries.push_back({key, value, 0.0, true}); }

void RunReport::append(const RunReport& other) {
  entries.insert(entries.end(), other.entries.begin(), other.entries.end());
  notes.insert(notes.end(), other.notes.begin(), other.notes.end());
}

bool RunReport::has(const std::string& key) const {
  for (const auto& e : entries)
    if (e.key == key) return true;
  return false;
}

const ReportEntry& RunReport::at(const std::string& key) const {
  for (const auto& e : entries)
    if (e.key == key) return e;
  throw Error("report has no entry '" + key + "'");
}

std::string RunReport::to_text() const {
  std::string out;
  for (const auto& e : entries) {
    out += e.key + " = " + fmt(e.value);
    out += e.exact ? " exact\n" : " +- " + fmt(e.uncertainty) + "\n";
  }
  for (const auto& n : notes) out += "# " + n + "\n";
  return out;
}

// ---------------------------------------------------------------------------

RunReport modes_report(const ExperimentConfig& cfg) {
  const TrapConfig trap = cfg.trap();
  const ParticleSpec p[2] = {cfg.particle(0), cfg.particle(1)};
  RunReport rep;
  for (int i = 0; i < 2; ++i) {
    const std::string pre = "particle" + std::to_string(i + 1) + ".";
    rep.add_exact(pre + "mass_kg", p[i].mass);
    rep.add_exact(pre + "charge_e", static_cast<double>(p[i].charge_e));
    rep.add_exact(pre + "gamma0_rad_s", p[i].gamma0);
    const StabilityParams sp = stability_params(trap, p[i]);
    for (Axis ax : {Axis::x, Axis::y, Axis::z}) {
      rep.add_exact(pre + "q_" + name_of(ax), sp.q_of(ax));
      rep.add_exact(pre + "a_" + name_of(ax), sp.a_of(ax));
      rep.add_exact(pre + "f_" + name_of(ax) + "_hz", sp.omega_of(ax) / two_pi);
    }
    rep.add_exact(pre + "approximation_valid", sp.approximation_valid ? 1.0 : 0.0);
    if (!sp.approximation_valid)
      rep.notes.push_back("particle " + std::to_string(i + 1) +
                          ": Mathieu parameters outside the secular approximation range");
  }
  const ModeStructure ms = mode_structure(trap, p[0], p[1]);
  rep.add_exact("theory.z1_eq_m", ms.eq.z1);
  rep.add_exact("theory.z2_eq_m", ms.eq.z2);
  rep.add_exact("theory.z_sep_m", ms.eq.separation);
  for (Mode m : {Mode::plus, Mode::minus}) {
    const std::string k = mode_key(m);
    rep.add_exact("theory.f_" + k + "_hz", ms.omega_of(m) / two_pi);
    rep.add_exact("theory.omega_" + k + "_rad_s", ms.omega_of(m));
    rep.add_exact("theory.r_" + k, ms.r_of(m));
    rep.add_exact("theory.modal_mass_" + k + "_kg", ms.modal_mass(index_of(m)));
    rep.add_exact("theory.gamma0_" + k + "_rad_s", modal_damping(ms, m, Vec2d(p[0].gamma0, p[1].gamma0)));
    for (int i = 0; i < 2; ++i)
      rep.add_exact("theory.energy_share_p" + std::to_string(i + 1) + "_" + k, ms.particle_energy_share(i, m));
  }
  rep.add_exact("theory.frequency_ratio", ms.omega_minus() / ms.omega_plus());
  return rep;
}

ExperimentConfig reference_config(const ExperimentConfig& cfg) {
  ExperimentConfig ref = cfg;
  std::erase_if(ref.controllers,
                [](const ControllerConfig& c) { return c.kind == ControllerKind::parametric_squeezer; });
  return ref;
}

bool has_squeezer(const ExperimentConfig& cfg) {
  for (const auto& c : cfg.controllers)
    if (c.kind == ControllerKind::parametric_squeezer) return true;
  return false;
}

// ---------------------------------------------------------------------------

namespace {

struct Prepared {
  VecXd s1, s2, measured;
  double t0 = 0.0;
};

Prepared prepare(const Trajectory& tr, const ModeStructure& ms, double settle_s) {
  const Eigen::Index n = tr.size();
  const Eigen::Index start = std::min<Eigen::Index>(n, std::llround(settle_s * tr.sample_rate));
  if (n - start < 16) throw AnalysisError("trajectory too short after discarding settle_s");
  Prepared p;
  p.s1 = tail(tr.z1, start).array() - ms.eq.z1;
  p.s2 = tail(tr.z2, start).array() - ms.eq.z2;
  p.measured = tail(tr.z1_measured, start).array() - ms.eq.z1;
  p.t0 = tr.t[start];
  return p;
}

DemodOptions demod_options(const ExperimentConfig& cfg, const ModeStructure& ms, double gamma) {
  DemodOptions o;
  const double sep = std::abs(ms.omega_minus() - ms.omega_plus());
  o.bandwidth = cfg.analysis.demod_bandwidth_rad_s > 0.0 ? cfg.analysis.demod_bandwidth_rad_s : sep / 4.0;
  o.mode_separation = sep;
  o.min_bandwidth = gamma;
  return o;
}

}  // namespace

AnalysisProducts analyze_trajectory(const ExperimentConfig& cfg, const Trajectory& tr, const Trajectory* reference) {
  const TrapConfig trap = cfg.trap();
  const ParticleSpec p1 = cfg.particle(0), p2 = cfg.particle(1);
  const ModeStructure ms = mode_structure(trap, p1, p2);
  const Vec2d gamma0(p1.gamma0, p2.gamma0);
  const double fs = tr.sample_rate;
  const int factor = tr.decimation == Decimation::average ? tr.decimation_factor : 1;

  AnalysisProducts out;
  RunReport& rep = out.report;
  rep.append(modes_report(cfg));
  rep.add_exact("run.seed", static_cast<double>(tr.seed));
  rep.add_exact("run.dt_s", tr.dt);
  rep.add_exact("run.sample_rate_hz", fs);
  rep.add_exact("run.controller_rate_hz", tr.controller_rate);
  rep.add_exact("run.samples", static_cast<double>(tr.size()));

  // Controllers: plans, theory predictions, counters.
  Vec2d extra_damping = Vec2d::Zero();
  std::vector<ControllerPlan> plans;
  for (std::size_t c = 0; c < cfg.controllers.size(); ++c) {
    const ControllerConfig& cc = cfg.controllers[c];
    const ControllerPlan plan = Controller(cc, ms, p1, p2, tr.controller_rate).plan();
    plans.push_back(plan);
    const std::string pre = "controller." + std::to_string(c) + ".";
    rep.add_exact(pre + "delay_samples", plan.delay_samples);
    rep.add_exact(pre + "residual_phase_rad", plan.residual_phase);
    rep.add_exact(pre + "chain_gain", plan.chain_gain);
    rep.add_exact(pre + "saturation_events",
                  c < tr.saturation_events.size() ? static_cast<double>(tr.saturation_events[c]) : 0.0);
    const std::string k = mode_key(cc.target);
    if (cc.kind == ControllerKind::velocity_damper) {
      extra_damping(index_of(cc.target)) += cc.gain;
      rep.add_exact("theory.temperature_" + k + "_k",
                    damped_temperature(cfg.temperature_k, plan.modal_gamma0, cc.gain, plan.modal_mass,
                                       plan.omega_target, plan.participation, cfg.s_nn_m2_hz));
    } else {
      rep.add_exact(pre + "g", plan.g);
      rep.add_exact(pre + "above_threshold", plan.above_threshold ? 1.0 : 0.0);
      if (!plan.above_threshold)
        rep.add_exact("theory.squeezing_" + k + "_db", 10.0 * std::log10(squeezed_variance_ratio(plan.g)));
    }
  }
  rep.add_exact("run.warnings", static_cast<double>(tr.warnings.size()));
  for (const auto& w : tr.warnings) rep.notes.push_back("warning: " + w);

  const Prepared prep = prepare(tr, ms, cfg.run.settle_s);
  const Eigen::Index n = prep.s1.size();

  WelchOptions wo;
  wo.overlap = cfg.analysis.overlap;
  wo.window = cfg.analysis.window;
  if (cfg.analysis.segment_length > 0) {
    wo.segment_length = cfg.analysis.segment_length;
  } else {
    double linewidth = std::numeric_limits<double>::infinity();
    for (Mode m : {Mode::plus, Mode::minus})
      linewidth = std::min(linewidth, (modal_damping(ms, m, gamma0) + extra_damping(index_of(m))) / two_pi);
    wo.segment_length = auto_segment_length(n, fs, linewidth, 20, 50, wo.overlap);
  }
  rep.add_exact("analysis.segment_length", static_cast<double>(wo.segment_length));

  out.psd_s1 = compensate_boxcar(welch_psd(prep.s1, fs, wo), factor);
  out.psd_s2 = compensate_boxcar(welch_psd(prep.s2, fs, wo), factor);
  out.psd_measured = compensate_boxcar(welch_psd(prep.measured, fs, wo), measured_boxcar(tr));
  Psd total = out.psd_s1;
  total.value += out.psd_s2.value;
  const ModePeaks peaks = find_mode_peaks(total, cfg.analysis.band_fwhm_multiple,
                                          Vec2d(ms.omega_plus() / two_pi, ms.omega_minus() / two_pi));
  rep.add_exact("analysis.averages", static_cast<double>(out.psd_s1.averages));
  const double df = out.psd_s1.resolution();
  const double root_k = std::sqrt(static_cast<double>(out.psd_s1.averages));
  rep.add("measured.f_plus_hz", peaks.plus.frequency, std::max(df / 2.0, peaks.plus.fwhm / root_k));
  rep.add("measured.f_minus_hz", peaks.minus.frequency, std::max(df / 2.0, peaks.minus.fwhm / root_k));
  rep.add("measured.fwhm_plus_hz", peaks.plus.fwhm, df);
  rep.add("measured.fwhm_minus_hz", peaks.minus.fwhm, df);
  rep.add_exact("analysis.band_plus_lo_hz", peaks.band_plus.lo);
  rep.add_exact("analysis.band_plus_hi_hz", peaks.band_plus.hi);
  rep.add_exact("analysis.band_minus_lo_hz", peaks.band_minus.lo);
  rep.add_exact("analysis.band_minus_hi_hz", peaks.band_minus.hi);

  if (cfg.analysis.fit_r) {
    try {
      const RFit full = fit_r_pm(prep.s1, prep.s2, fs, wo, cfg.analysis.band_fwhm_multiple);
      const Eigen::Index h = n / 2;
      WelchOptions half = wo;
      half.segment_length = std::min(wo.segment_length, auto_segment_length(h, fs, 0.0, 20, 25, wo.overlap));
      const RFit a = fit_r_pm(prep.s1.head(h), prep.s2.head(h), fs, half, cfg.analysis.band_fwhm_multiple);
      const RFit b = fit_r_pm(prep.s1.tail(h), prep.s2.tail(h), fs, half, cfg.analysis.band_fwhm_multiple);
      rep.add("fit.r_plus", full.r_plus, std::abs(a.r_plus - b.r_plus) / 2.0);
      rep.add("fit.r_minus", full.r_minus, std::abs(a.r_minus - b.r_minus) / 2.0);
      rep.add("fit.leakage_plus_db", full.leakage_plus_db, std::abs(a.leakage_plus_db - b.leakage_plus_db) / 2.0);
      rep.add("fit.leakage_minus_db", full.leakage_minus_db,
              std::abs(a.leakage_minus_db - b.leakage_minus_db) / 2.0);
    } catch (const AnalysisError& e) {
      rep.notes.push_back(std::string("r fit skipped: ") + e.what());
    }
  }

  // Out-of-loop temperatures: projected modes (theory basis) and each
  // particle's own trace in each mode band.
  const ModeTraces modes = project_modes(prep.s1, prep.s2, ms.r_plus(), ms.r_minus());
  out.psd_plus = compensate_boxcar(welch_psd(modes.z_plus, fs, wo), factor);
  out.psd_minus = compensate_boxcar(welch_psd(modes.z_minus, fs, wo), factor);
  const VecXd* mode_trace[2] = {&modes.z_plus, &modes.z_minus};
  const VecXd* particle_trace[2] = {&prep.s1, &prep.s2};
  const Band bands[2] = {peaks.band_plus, peaks.band_minus};
  const double peak_hz[2] = {peaks.plus.frequency, peaks.minus.frequency};
  for (Mode m : {Mode::plus, Mode::minus}) {
    const int k = index_of(m);
    const double mu = ms.modal_mass(k), w = ms.omega(k);
    const std::string key = mode_key(m);
    const auto t = mode_temperature(*mode_trace[k], fs, mu, w, bands[k], wo, factor, peak_hz[1 - k]);
    rep.add("temperature.mode_" + key + "_k", t.value, t.uncertainty);
    for (int i = 0; i < 2; ++i) {
      const double e = ms.participation(i, m);
      const auto ti = mode_temperature(*particle_trace[i], fs, mu / (e * e), w, bands[k], wo, factor, peak_hz[1 - k]);
      rep.add("temperature.particle" + std::to_string(i + 1) + "_" + key + "_k", ti.value, ti.uncertainty);
    }
    const double e1 = ms.participation(0, m);
    const auto tin = mode_temperature(prep.measured, fs, mu / (e1 * e1), w, bands[k], wo, measured_boxcar(tr),
                                      peak_hz[1 - k]);
    rep.add("temperature.inloop_" + key + "_k", tin.value, tin.uncertainty);
  }

  // Squeezing.
  for (std::size_t c = 0; c < cfg.controllers.size(); ++c) {
    const ControllerConfig& cc = cfg.controllers[c];
    if (cc.kind != ControllerKind::parametric_squeezer) continue;
    if (!reference) {
      rep.notes.push_back("squeezing not evaluated: no drive-off reference");
      break;
    }
    const Prepared ref = prepare(*reference, ms, cfg.run.settle_s);
    if (ref.s1.size() != n) throw AnalysisError("reference trajectory length differs from the driven run");
    const ModeTraces ref_modes = project_modes(ref.s1, ref.s2, ms.r_plus(), ms.r_minus());
    const int k = index_of(cc.target);
    const double omega = plans[c].drive_frequency / 2.0;
    const DemodOptions dopt = demod_options(cfg, ms, modal_damping(ms, cc.target, gamma0));

    QuadratureSet q;
    q.target = cc.target;
    q.mode = demodulate(*mode_trace[k], fs, omega, dopt, prep.t0);
    q.particle1 = demodulate(prep.s1, fs, omega, dopt, prep.t0);
    q.particle2 = demodulate(prep.s2, fs, omega, dopt, prep.t0);
    q.reference_mode = demodulate(k == 0 ? ref_modes.z_plus : ref_modes.z_minus, fs, omega, dopt, ref.t0);
    q.reference_particle1 = demodulate(ref.s1, fs, omega, dopt, ref.t0);
    q.reference_particle2 = demodulate(ref.s2, fs, omega, dopt, ref.t0);

    const std::string key = mode_key(cc.target);
    auto put = [&](const std::string& name, const QuadratureTrace& a, const QuadratureTrace& b) {
      const SqueezingResult s = squeezing_db(a, b);
      rep.add("squeezing." + name + "_db", s.db, s.uncertainty_db);
      rep.add_exact("squeezing." + name + "_angle_rad", s.angle);
      rep.add_exact("squeezing." + name + "_reliable", s.reliable ? 1.0 : 0.0);
      const double ref_var = s.min_variance / std::pow(10.0, s.db / 10.0);
      rep.add("squeezing." + name + "_amplified_db", 10.0 * std::log10(s.max_variance / ref_var), s.uncertainty_db);
      if (!s.reliable) rep.notes.push_back("squeezing." + name + ": fewer than 100 correlation times");
    };
    put("mode_" + key, q.mode, q.reference_mode);
    put("particle1_" + key, q.particle1, q.reference_particle1);
    put("particle2_" + key, q.particle2, q.reference_particle2);
    out.quadratures = std::move(q);
    break;
  }
  return out;
}

// ---------------------------------------------------------------------------

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult res;
  const TrapConfig trap = cfg.trap();
  const ParticleSpec p1 = cfg.particle(0), p2 = cfg.particle(1);
  res.trajectory = simulate(trap, p1, p2, cfg.noise(), cfg.controllers, cfg.simulation_options());
  if (has_squeezer(cfg)) {
    const ExperimentConfig ref = reference_config(cfg);
    res.reference = simulate(trap, p1, p2, ref.noise(), ref.controllers, ref.simulation_options());
  }
  res.products = analyze_trajectory(cfg, res.trajectory, res.reference ? &*res.reference : nullptr);
  return res;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

constexpr const char* kPlotScript = R"(# Plot the spectra and quadratures written next to this file.
import csv, os, sys
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))

def load(name):
    with open(os.path.join(here, name)) as f:
        rows = [r for r in f if not r.startswith('#')]
    reader = csv.reader(rows)
    head = next(reader)
    cols = list(zip(*[[float(v) for v in r] for r in reader]))
    return dict(zip(head, cols))

psd = load('psd.csv')
fig, ax = plt.subplots()
for key in ('z_plus', 'z_minus', 's1', 's2'):
    ax.semilogy(psd['frequency_hz'], psd[key], label=key)
ax.set_xlabel('frequency (Hz)')
ax.set_ylabel('PSD (m^2/Hz)')
ax.legend()

if os.path.exists(os.path.join(here, 'quadratures.csv')):
    q = load('quadratures.csv')
    fig2, ax2 = plt.subplots()
    ax2.plot(q['x_ref'], q['y_ref'], ',', label='drive off')
    ax2.plot(q['x_mode'], q['y_mode'], ',', label='drive on')
    ax2.set_aspect('equal')
    ax2.legend()

if len(sys.argv) > 1:
    fig.savefig(sys.argv[1])
else:
    plt.show()
)";

}  // namespace

void write_analysis_outputs(const std::string& dir, const ExperimentConfig& cfg, const AnalysisProducts& products) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path d(dir);
  write_text(d / "config.json", to_json(cfg).dump(2) + "\n");
  write_text(d / "report.txt", products.report.to_text());
  const auto& p = products;
  std::vector<std::pair<std::string, std::string>> meta{
      {"window", name_of(p.psd_s1.window)},
      {"segment_length", std::to_string(p.psd_s1.segment_length)},
      {"overlap", format_double(p.psd_s1.overlap)},
      {"averages", std::to_string(p.psd_s1.averages)},
      {"convention", "one-sided"}};
  write_columns((d / "psd.csv").string(),
                {{"frequency_hz", &p.psd_s1.frequency},
                 {"s1", &p.psd_s1.value},
                 {"s2", &p.psd_s2.value},
                 {"z_plus", &p.psd_plus.value},
                 {"z_minus", &p.psd_minus.value},
                 {"z1_measured", &p.psd_measured.value}},
                meta);
  if (p.quadratures) {
    const QuadratureSet& q = *p.quadratures;
    write_columns((d / "quadratures.csv").string(),
                  {{"t", &q.mode.t},
                   {"x_mode", &q.mode.x},
                   {"y_mode", &q.mode.y},
                   {"x_1", &q.particle1.x},
                   {"y_1", &q.particle1.y},
                   {"x_2", &q.particle2.x},
                   {"y_2", &q.particle2.y},
                   {"x_ref", &q.reference_mode.x},
                   {"y_ref", &q.reference_mode.y}},
                  {{"omega_rad_s", format_double(q.mode.omega)},
                   {"bandwidth_rad_s", format_double(q.mode.bandwidth)},
                   {"mode", mode_key(q.target)}});
  }
  write_text(d / "plot_psd.py", kPlotScript);
}

void write_outputs(const std::string& dir, const ExperimentConfig& cfg, const ExperimentResult& result) {
  write_analysis_outputs(dir, cfg, result.products);
  if (cfg.run.write_trajectory)
    write_trajectory_csv((std::filesystem::path(dir) / "trajectory.csv").string(), result.trajectory,
                         to_json(cfg).dump());
}

// ---------------------------------------------------------------------------

bool SweepResult::all_ok() const {
  for (const auto& r : rows)
    if (!r.ok) return false;
  return true;
}

SweepResult run_sweep(const ExperimentConfig& cfg, int workers, const std::string& out_dir) {
  if (!cfg.sweep) throw ConfigError("sweep: config has no sweep section");
  const SweepConfig& sw = *cfg.sweep;
  SweepResult res;
  res.parameter = sw.parameter;
  res.rows.resize(sw.values.size());

  nlohmann::json base = to_json(cfg);
  base.erase("sweep");
  if (!sw.values.empty()) {
    nlohmann::json probe = base;
    set_path(probe, sw.parameter, sw.values.front());
  }

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < sw.values.size(); i = next++) {
      SweepRow& row = res.rows[i];
      row.value = sw.values[i];
      try {
        nlohmann::json j = base;
        set_path(j, sw.parameter, row.value);
        const ExperimentConfig point = parse_config(j);
        const ExperimentResult r = run_experiment(point);
        row.report = r.products.report;
        if (!out_dir.empty()) write_outputs(out_dir + "/run_" + std::to_string(i), point, r);
        row.ok = true;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(sw.values.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return res;
}

void write_sweep_csv(const std::string& path, const SweepResult& sweep) {
  std::vector<std::string> keys;
  for (const auto& r : sweep.rows)
    if (r.ok) {
      for (const auto& e : r.report.entries) keys.push_back(e.key);
      break;
    }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "# parameter=" << sweep.parameter << '\n';
  for (std::size_t i = 0; i < sweep.rows.size(); ++i)
    if (!sweep.rows[i].ok) out << "# error." << i << '=' << sweep.rows[i].error << '\n';
  out << "value,ok";
  for (const auto& k : keys) out << ',' << k << ',' << k << "_unc";
  out << '\n';
  for (const auto& r : sweep.rows) {
    out << format_double(r.value) << ',' << (r.ok ? 1 : 0);
    for (const auto& k : keys) {
      if (r.ok && r.report.has(k)) {
        const ReportEntry& e = r.report.at(k);
        out << ',' << format_double(e.value) << ',' << format_double(e.uncertainty);
      } else {
        out << ",nan,nan";
      }
    }
    out << '\n';
  }
}

}  // namespace nanopair
