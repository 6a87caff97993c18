// nanopair: batch front end for the coupled-pair simulator.
//
//   nanopair modes    --config pair.json
//   nanopair simulate --config pair.json --out runs/a [--seed 7]
//   nanopair sweep    --config sweep.json --out runs/s [--workers 8]
//   nanopair analyze  runs/a/trajectory.csv --out runs/a2
//
// Exit codes: 0 success, 2 config or input error, 3 runtime fault, 4 partial sweep failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nanopair/config.hpp"
#include "nanopair/experiment.hpp"
#include "nanopair/trajectory_io.hpp"

using namespace nanopair;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeFault = 3;
constexpr int kPartialSweep = 4;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int workers = 0;
  std::string trajectory;
};

ExperimentConfig load(const Flags& f) {
  if (f.config.empty()) throw ConfigError("--config is required");
  ExperimentConfig cfg = load_config(f.config);
  if (f.seed) cfg.run.seed = *f.seed;
  return cfg;
}

int cmd_modes(const Flags& f) {
  const ExperimentConfig cfg = load(f);
  const RunReport rep = modes_report(cfg);
  std::cout << rep.to_text();
  if (!f.out.empty()) {
    std::filesystem::create_directories(f.out);
    std::ofstream(std::filesystem::path(f.out) / "modes.txt", std::ios::binary) << rep.to_text();
  }
  return kOk;
}

int cmd_simulate(const Flags& f) {
  const ExperimentConfig cfg = load(f);
  const ExperimentResult res = run_experiment(cfg);
  std::cout << res.products.report.to_text();
  if (!f.out.empty()) write_outputs(f.out, cfg, res);
  return kOk;
}

int cmd_sweep(const Flags& f) {
  const ExperimentConfig cfg = load(f);
  if (!cfg.sweep) throw ConfigError("sweep: config has no sweep section");
  const int workers = f.workers > 0 ? f.workers : cfg.sweep->workers;
  const SweepResult res = run_sweep(cfg, workers, f.out);
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const SweepRow& r = res.rows[i];
    std::cout << cfg.sweep->parameter << " = " << format_double(r.value) << ": "
              << (r.ok ? "ok" : "FAILED (" + r.error + ")") << '\n';
  }
  if (!f.out.empty()) {
    std::filesystem::create_directories(f.out);
    write_sweep_csv((std::filesystem::path(f.out) / "sweep.csv").string(), res);
  }
  return res.all_ok() ? kOk : kPartialSweep;
}

int cmd_analyze(const Flags& f) {
  std::string config_text;
  const Trajectory tr = read_trajectory_csv(f.trajectory, &config_text);
  ExperimentConfig cfg = f.config.empty() ? parse_config_text(config_text) : load_config(f.config);
  std::optional<Trajectory> ref;
  if (has_squeezer(cfg)) {
    const ExperimentConfig rc = reference_config(cfg);
    ref = simulate(rc.trap(), rc.particle(0), rc.particle(1), rc.noise(), rc.controllers, rc.simulation_options());
  }
  const AnalysisProducts p = analyze_trajectory(cfg, tr, ref ? &*ref : nullptr);
  std::cout << p.report.to_text();
  if (!f.out.empty()) write_analysis_outputs(f.out, cfg, p);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and analysis of two Coulomb-coupled nanoparticles in a linear Paul trap"};
  app.require_subcommand(1);
  Flags f;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "Experiment config (JSON)");
    sub->add_option("--seed", f.seed, "Override run.seed");
    sub->add_option("--out", f.out, "Output directory");
  };
  CLI::App* modes = app.add_subcommand("modes", "Mode structure and stability tables");
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Run one simulation and its analysis");
  CLI::App* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  CLI::App* analyze = app.add_subcommand("analyze", "Analyse a saved trajectory");
  for (CLI::App* sub : {modes, simulate_cmd, sweep, analyze}) common(sub);
  sweep->add_option("--workers", f.workers, "Parallel runs (default: sweep.workers)")->check(CLI::PositiveNumber);
  analyze->add_option("trajectory", f.trajectory, "Trajectory CSV written by simulate")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*modes) return cmd_modes(f);
    if (*simulate_cmd) return cmd_simulate(f);
    if (*sweep) return cmd_sweep(f);
    return cmd_analyze(f);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const IntegrationFault& e) {
    std::cerr << "integration fault: " << e.what() << '\n';
    return kRuntimeFault;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFault;
  }
}
