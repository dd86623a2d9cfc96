#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rfrac/config.hpp"
#include "rfrac/error.hpp"

namespace rfrac {

struct TimeseriesRow {
  double time = 0.0;
  double total_u_mass = 0.0;
  double total_w_mass = 0.0;
  double boundary_in = 0.0;   // cumulative
  double boundary_out = 0.0;  // cumulative
  double min_phi = 0.0;
  double min_eps = 0.0;
  std::vector<double> probes;  // u at the probe cells
};

inline std::string timeseries_csv(const std::vector<TimeseriesRow>& rows, std::size_t num_probes) {
  std::ostringstream o;
  o << "time,total_u_mass,total_w_mass,boundary_in,boundary_out,min_phi,min_eps";
  for (std::size_t k = 0; k < num_probes; ++k) o << ",probe" << k << "_u";
  o << '\n';
  for (const auto& r : rows) {
    o << format_double(r.time) << ',' << format_double(r.total_u_mass) << ','
      << format_double(r.total_w_mass) << ',' << format_double(r.boundary_in) << ','
      << format_double(r.boundary_out) << ',' << format_double(r.min_phi) << ','
      << format_double(r.min_eps);
    for (double v : r.probes) o << ',' << format_double(v);
    o << '\n';
  }
  return o.str();
}

inline void write_timeseries(const std::vector<TimeseriesRow>& rows, std::size_t num_probes,
                             const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open output file", path);
  out << timeseries_csv(rows, num_probes);
  out.flush();
  if (!out) throw IoError("write failed", path);
}

/// Minimal reader for numeric CSV with a header line.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    throw IoError("CSV has no column '" + name + "'", "");
  }
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (!std::getline(in, line)) return t;
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& c : split(line)) row.push_back(std::stod(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open CSV file", path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace rfrac
