#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nanopair/experiment.hpp"
#include "nanopair/trajectory_io.hpp"
#include "support.hpp"

using namespace nanopair;
using namespace testsupport;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("nanopair_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("format_double round trips") {
  for (double x : {0.0, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 197.548e-6})
    CHECK(std::stod(format_double(x)) == x);
}

TEST_CASE("modes report for equal charges") {
  ExperimentConfig c = small_config();
  c.particles[1].charge_e = c.particles[0].charge_e;
  const RunReport r = modes_report(c);
  CHECK_THAT(r.value("theory.frequency_ratio"), WithinRel(std::sqrt(3.0), 1e-10));
  CHECK_THAT(r.value("theory.r_plus"), WithinRel(1.0, 1e-10));
  CHECK(r.at("theory.f_plus_hz").exact);
  CHECK(r.has("particle1.q_x"));
  CHECK_THROWS_AS(r.at("no.such.key"), Error);
}

TEST_CASE("report text lists every entry") {
  RunReport r;
  r.add("a", 1.5, 0.25);
  r.add_exact("b", 2.0);
  r.notes.push_back("hello");
  const std::string text = r.to_text();
  CHECK_THAT(text, Catch::Matchers::ContainsSubstring("a = 1.5 +- 0.25"));
  CHECK_THAT(text, Catch::Matchers::ContainsSubstring("b = 2 exact"));
  CHECK_THAT(text, Catch::Matchers::ContainsSubstring("# hello"));
}

TEST_CASE("thermal run report carries measured values with uncertainties") {
  const ExperimentConfig c = small_config();
  const ExperimentResult res = run_experiment(c);
  const RunReport& r = res.products.report;
  for (const auto& e : r.entries) {
    INFO(e.key);
    CHECK(std::isfinite(e.value));
    if (!e.exact) CHECK(e.uncertainty > 0.0);
  }
  const ModeStructure ms = mode_structure(c.trap(), c.particle(0), c.particle(1));
  CHECK_THAT(r.value("measured.f_plus_hz"), WithinAbs(ms.omega_plus() / two_pi, 1.0));
  CHECK_THAT(r.value("measured.f_minus_hz"), WithinAbs(ms.omega_minus() / two_pi, 1.0));
  const auto& t = r.at("temperature.mode_plus_k");
  CHECK(std::abs(t.value - 293.0) < 4.0 * t.uncertainty);
  CHECK_FALSE(res.reference.has_value());
}

TEST_CASE("trajectory csv round trips and re-analysis reproduces the report") {
  ExperimentConfig c = small_config();
  c.run.duration_s = 8.0;
  c.controllers.push_back(ControllerConfig{});
  c.controllers.back().gain = 10.0;
  const ExperimentResult res = run_experiment(c);
  const auto dir = scratch("roundtrip");
  write_outputs(dir.string(), c, res);
  std::string cfg_text;
  const Trajectory back = read_trajectory_csv((dir / "trajectory.csv").string(), &cfg_text);
  CHECK(back.z1 == res.trajectory.z1);
  CHECK(back.v2 == res.trajectory.v2);
  CHECK(back.z1_measured == res.trajectory.z1_measured);
  REQUIRE(back.controller_force.size() == 1);
  CHECK(back.controller_force[0] == res.trajectory.controller_force[0]);
  CHECK(back.sample_rate == res.trajectory.sample_rate);
  CHECK(back.seed == c.run.seed);
  const ExperimentConfig c2 = parse_config_text(cfg_text);
  CHECK(to_json(c2) == to_json(c));
  const AnalysisProducts again = analyze_trajectory(c2, back);
  CHECK(again.report.to_text() == res.products.report.to_text());
}

TEST_CASE("outputs are byte-identical for a fixed seed") {
  ExperimentConfig c = small_config();
  c.run.duration_s = 5.0;
  const auto a = scratch("det_a"), b = scratch("det_b");
  write_outputs(a.string(), c, run_experiment(c));
  write_outputs(b.string(), c, run_experiment(c));
  for (const char* f : {"report.txt", "psd.csv", "trajectory.csv", "config.json"}) {
    INFO(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("squeezer runs carry a drive-off reference") {
  ExperimentConfig c = small_config();
  c.run.duration_s = 10.0;
  ControllerConfig sq;
  sq.kind = ControllerKind::parametric_squeezer;
  const ModeStructure ms = mode_structure(c.trap(), c.particle(0), c.particle(1));
  sq.gain = 0.3 * 4.0 * 20.0 * ms.omega_plus();
  c.controllers.push_back(sq);
  CHECK(has_squeezer(c));
  CHECK_FALSE(has_squeezer(reference_config(c)));
  const ExperimentResult res = run_experiment(c);
  REQUIRE(res.reference.has_value());
  CHECK(res.products.quadratures.has_value());
  CHECK(res.products.report.has("squeezing.mode_plus_db"));
  CHECK(res.products.report.has("theory.squeezing_plus_db"));
}

TEST_CASE("sweep records failed points and continues") {
  ExperimentConfig c = small_config();
  c.run.duration_s = 4.0;
  c.run.settle_s = 0.0;
  c.controllers.push_back(ControllerConfig{});
  c.controllers.back().gain = 1.0;
  c.sweep = SweepConfig{"controllers.0.gain_rad_s", {1.0, -5.0, 10.0}, 2};
  const SweepResult s = run_sweep(c, 2);
  REQUIRE(s.rows.size() == 3);
  CHECK(s.rows[0].ok);
  CHECK_FALSE(s.rows[1].ok);
  CHECK_FALSE(s.rows[1].error.empty());
  CHECK(s.rows[2].ok);
  CHECK_FALSE(s.all_ok());
  CHECK(s.rows[2].report.has("controller.0.chain_gain"));

  const auto dir = scratch("sweep");
  write_sweep_csv((dir / "sweep.csv").string(), s);
  const CsvTable t = read_columns((dir / "sweep.csv").string());
  CHECK(t.column("value").size() == 3);
  CHECK(std::isnan(t.column("temperature.mode_plus_k")[1]));
  CHECK(t.has_meta("error.1"));

  c.sweep->parameter = "controllers.0.nonexistent";
  CHECK_THROWS_AS(run_sweep(c, 1), ConfigError);
}
