#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nanopair/analysis.hpp"
#include "nanopair/config.hpp"
#include "nanopair/dynamics.hpp"

namespace nanopair {

/// One line of a report. Theory values and counters are `exact`; every
/// measured value carries a one-sigma uncertainty.
struct ReportEntry {
  std::string key;
  double value = 0.0;
  double uncertainty = 0.0;
  bool exact = false;
};

/// Flat key/value record, written one entry per line as
///   key = value +- uncertainty   or   key = value exact
struct RunReport {
  std::vector<ReportEntry> entries;
  std::vector<std::string> notes;

  void add(const std::string& key, double value, double uncertainty);
  void add_exact(const std::string& key, double value);
  void append(const RunReport& other);
  bool has(const std::string& key) const;
  const ReportEntry& at(const std::string& key) const;
  double value(const std::string& key) const { return at(key).value; }
  std::string to_text() const;
};

/// Mode-structure and stability tables for a config.
RunReport modes_report(const ExperimentConfig& cfg);

struct QuadratureSet {
  QuadratureTrace mode;       // projected target mode
  QuadratureTrace particle1;  // raw particle traces at the same frequency
  QuadratureTrace particle2;
  QuadratureTrace reference_mode, reference_particle1, reference_particle2;
  Mode target = Mode::plus;
};

struct AnalysisProducts {
  RunReport report;
  Psd psd_s1, psd_s2, psd_plus, psd_minus, psd_measured;
  std::optional<QuadratureSet> quadratures;
};

/// The config with all squeezers removed: the drive-off reference.
ExperimentConfig reference_config(const ExperimentConfig& cfg);
bool has_squeezer(const ExperimentConfig& cfg);

/// Analysis of one trajectory. Squeezing figures need the drive-off
/// reference trajectory of the same config and seed.
AnalysisProducts analyze_trajectory(const ExperimentConfig& cfg, const Trajectory& tr,
                                    const Trajectory* reference = nullptr);

struct ExperimentResult {
  Trajectory trajectory;
  std::optional<Trajectory> reference;
  AnalysisProducts products;
};

/// Simulate, run the drive-off reference if needed, analyse.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes config.json, report.txt, psd.csv, quadratures.csv (squeezer
/// runs), trajectory.csv (when enabled) and plot_psd.py into `dir`.
void write_outputs(const std::string& dir, const ExperimentConfig& cfg, const ExperimentResult& result);
void write_analysis_outputs(const std::string& dir, const ExperimentConfig& cfg,
                            const AnalysisProducts& products);

struct SweepRow {
  double value = 0.0;
  bool ok = false;
  std::string error;
  RunReport report;
};

struct SweepResult {
  std::string parameter;
  std::vector<SweepRow> rows;
  bool all_ok() const;
};

/// One isolated run per sweep value on up to `workers` threads; a failed
/// run is recorded and the sweep continues. Each run writes into
/// `out_dir/run_<index>` when `out_dir` is non-empty.
SweepResult run_sweep(const ExperimentConfig& cfg, int workers, const std::string& out_dir = "");

/// Aggregated table: value, ok, then `<key>` and `<key>_unc` for every
/// report entry of the first successful run.
void write_sweep_csv(const std::string& path, const SweepResult& sweep);

}  // namespace nanopair
