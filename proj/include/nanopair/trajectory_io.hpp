#pragma once

#include <map>
#include <string>
#include <vector>

#include "nanopair/dynamics.hpp"

namespace nanopair {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

struct Column {
  std::string name;
  const VecXd* data;
};

/// CSV with '# key=value' metadata lines, one header line, then rows.
void write_columns(const std::string& path, const std::vector<Column>& columns,
                   const std::vector<std::pair<std::string, std::string>>& metadata = {});

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> names;
  std::vector<VecXd> columns;

  const VecXd& column(const std::string& name) const;
  std::string meta(const std::string& key) const;
  bool has_meta(const std::string& key) const;
};

CsvTable read_columns(const std::string& path);

/// Trajectory CSV: columns t, z1, z2, v1, v2, z1_measured, force_<i>...
/// plus metadata (sample rate, dt, seed, integrator, decimation and the
/// one-line resolved config under `config`).
void write_trajectory_csv(const std::string& path, const Trajectory& tr, const std::string& config_json);
Trajectory read_trajectory_csv(const std::string& path, std::string* config_json = nullptr);

}  // namespace nanopair
