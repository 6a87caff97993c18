#include "nanopair/trajectory_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace nanopair {

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void write_columns(const std::string& path, const std::vector<Column>& columns,
                   const std::vector<std::pair<std::string, std::string>>& metadata) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  for (const auto& [k, v] : metadata) out << "# " << k << '=' << v << '\n';
  Eigen::Index rows = columns.empty() ? 0 : columns.front().data->size();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].data->size() != rows) throw Error("write_columns: column lengths differ");
    out << (c ? "," : "") << columns[c].name;
  }
  out << '\n';
  std::string line;
  char buf[32];
  for (Eigen::Index i = 0; i < rows; ++i) {
    line.clear();
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) line.push_back(',');
      const auto res = std::to_chars(buf, buf + sizeof(buf), (*columns[c].data)[i]);
      line.append(buf, res.ptr);
    }
    line.push_back('\n');
    out << line;
  }
  if (!out) throw Error("error while writing '" + path + "'");
}

const VecXd& CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return columns[i];
  throw Error("CSV has no column '" + name + "'");
}

bool CsvTable::has_meta(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return true;
  return false;
}

std::string CsvTable::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return v;
  throw Error("CSV metadata has no key '" + key + "'");
}

CsvTable read_columns(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  bool header = false;
  std::vector<std::vector<double>> cols;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!header && line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::size_t start = line.size() > 1 && line[1] == ' ' ? 2 : 1;
      t.metadata.emplace_back(line.substr(start, eq - start), line.substr(eq + 1));
      continue;
    }
    if (!header) {
      std::stringstream ss(line);
      std::string name;
      while (std::getline(ss, name, ',')) t.names.push_back(name);
      cols.resize(t.names.size());
      header = true;
      continue;
    }
    ++row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t c = 0; c < cols.size(); ++c) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw Error(path + ": bad number in row " + std::to_string(row));
      cols[c].push_back(v);
      p = res.ptr;
      if (c + 1 < cols.size()) {
        if (p == end || *p != ',') throw Error(path + ": too few columns in row " + std::to_string(row));
        ++p;
      }
    }
  }
  if (!header) throw Error(path + ": no header line");
  for (auto& c : cols) t.columns.push_back(Eigen::Map<VecXd>(c.data(), static_cast<Eigen::Index>(c.size())));
  return t;
}

void write_trajectory_csv(const std::string& path, const Trajectory& tr, const std::string& config_json) {
  std::vector<std::pair<std::string, std::string>> meta{
      {"format", "nanopair-trajectory-1"},
      {"sample_rate_hz", format_double(tr.sample_rate)},
      {"dt_s", format_double(tr.dt)},
      {"controller_rate_hz", format_double(tr.controller_rate)},
      {"seed", std::to_string(tr.seed)},
      {"integrator", tr.integrator},
      {"decimation", name_of(tr.decimation)},
      {"decimation_factor", std::to_string(tr.decimation_factor)},
  };
  for (std::size_t c = 0; c < tr.saturation_events.size(); ++c)
    meta.emplace_back("saturation_events." + std::to_string(c), std::to_string(tr.saturation_events[c]));
  for (const auto& [k, v] : tr.metadata) meta.emplace_back("run." + k, v);
  for (const auto& w : tr.warnings) meta.emplace_back("warning", w);
  meta.emplace_back("config", config_json);

  std::vector<Column> cols{{"t", &tr.t},   {"z1", &tr.z1}, {"z2", &tr.z2},
                           {"v1", &tr.v1}, {"v2", &tr.v2}, {"z1_measured", &tr.z1_measured}};
  for (std::size_t c = 0; c < tr.controller_force.size(); ++c)
    cols.push_back({"force_" + std::to_string(c), &tr.controller_force[c]});
  write_columns(path, cols, meta);
}

Trajectory read_trajectory_csv(const std::string& path, std::string* config_json) {
  const CsvTable t = read_columns(path);
  Trajectory tr;
  auto num = [&](const std::string& key) {
    const std::string s = t.meta(key);
    double v = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
  };
  tr.sample_rate = num("sample_rate_hz");
  tr.dt = num("dt_s");
  tr.controller_rate = num("controller_rate_hz");
  tr.seed = std::stoull(t.meta("seed"));
  tr.integrator = t.meta("integrator");
  tr.decimation = t.meta("decimation") == "point" ? Decimation::point : Decimation::average;
  tr.decimation_factor = std::stoi(t.meta("decimation_factor"));
  tr.t = t.column("t");
  tr.z1 = t.column("z1");
  tr.z2 = t.column("z2");
  tr.v1 = t.column("v1");
  tr.v2 = t.column("v2");
  tr.z1_measured = t.column("z1_measured");
  for (std::size_t c = 0;; ++c) {
    const std::string name = "force_" + std::to_string(c);
    bool found = false;
    for (const auto& n : t.names) found = found || n == name;
    if (!found) break;
    tr.controller_force.push_back(t.column(name));
    const std::string key = "saturation_events." + std::to_string(c);
    tr.saturation_events.push_back(t.has_meta(key) ? std::stoll(t.meta(key)) : 0);
  }
  for (const auto& [k, v] : t.metadata) {
    if (k == "warning") tr.warnings.push_back(v);
    if (k.rfind("run.", 0) == 0) tr.metadata[k.substr(4)] = v;
  }
  if (config_json) *config_json = t.meta("config");
  return tr;
}

}  // namespace nanopair
