#pragma once

// Legacy ASCII VTK output. Values are printed with 17 significant digits so a
// read-back reproduces them bit for bit.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rfrac/config.hpp"
#include "rfrac/coupler.hpp"
#include "rfrac/error.hpp"
#include "rfrac/mesh.hpp"

namespace rfrac {

using NamedField = std::pair<std::string, std::vector<double>>;

namespace detail {

inline void write_scalars(std::ostream& o, const std::vector<NamedField>& fields) {
  for (const auto& [name, values] : fields) {
    o << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : values) o << format_double(v) << '\n';
  }
}

inline void write_coordinates(std::ostream& o, const char* axis, const std::vector<double>& e) {
  o << axis << "_COORDINATES " << e.size() << " double\n";
  for (std::size_t k = 0; k < e.size(); ++k) o << (k ? " " : "") << format_double(e[k]);
  o << '\n';
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open output file", path);
  out << text;
  out.flush();
  if (!out) throw IoError("write failed", path);
}

}  // namespace detail

/// Cell data on the matrix grid: STRUCTURED_POINTS for uniform grids,
/// RECTILINEAR_GRID otherwise.
inline std::string matrix_vtk(const MatrixGrid& g, const std::vector<NamedField>& fields, double time) {
  std::ostringstream o;
  o << "# vtk DataFile Version 3.0\nrfrac matrix t=" << format_double(time) << "\nASCII\n";
  if (g.is_uniform()) {
    o << "DATASET STRUCTURED_POINTS\n";
    o << "DIMENSIONS " << g.nx() + 1 << ' ' << g.ny() + 1 << " 1\n";
    o << "ORIGIN " << format_double(g.x_edges().front()) << ' ' << format_double(g.y_edges().front())
      << " 0\n";
    o << "SPACING " << format_double(g.hx(0)) << ' ' << format_double(g.hy(0)) << " 1\n";
  } else {
    o << "DATASET RECTILINEAR_GRID\n";
    o << "DIMENSIONS " << g.nx() + 1 << ' ' << g.ny() + 1 << " 1\n";
    detail::write_coordinates(o, "X", g.x_edges());
    detail::write_coordinates(o, "Y", g.y_edges());
    detail::write_coordinates(o, "Z", {0.0});
  }
  o << "CELL_DATA " << g.num_cells() << '\n';
  detail::write_scalars(o, fields);
  return o.str();
}

/// Fracture cells as POLYDATA line segments.
inline std::string fracture_vtk(const MixedDimMesh& mesh, const std::vector<NamedField>& fields,
                                double time) {
  std::vector<Vec2> points;
  std::vector<std::pair<int, int>> lines;
  for (const auto& fr : mesh.fractures()) {
    const int t = index(fr.tangent);
    const int base = static_cast<int>(points.size());
    points.push_back(fr.tips[0].point);
    for (const auto& c : fr.cells) {
      Vec2 p = c.center;
      p[t] += 0.5 * c.length;
      points.push_back(p);
    }
    for (int l = 0; l < fr.size(); ++l) lines.emplace_back(base + l, base + l + 1);
  }
  std::ostringstream o;
  o << "# vtk DataFile Version 3.0\nrfrac fracture t=" << format_double(time) << "\nASCII\n";
  o << "DATASET POLYDATA\nPOINTS " << points.size() << " double\n";
  for (const auto& p : points) o << format_double(p[0]) << ' ' << format_double(p[1]) << " 0\n";
  o << "LINES " << lines.size() << ' ' << 3 * lines.size() << '\n';
  for (const auto& [a, b] : lines) o << "2 " << a << ' ' << b << '\n';
  o << "CELL_DATA " << lines.size() << '\n';
  detail::write_scalars(o, fields);
  return o.str();
}

inline std::vector<NamedField> matrix_fields(const SimState& s) {
  return {{"p", s.flow.p}, {"u", s.transport.u}, {"w", s.transport.w},
          {"phi", s.phi},  {"k", s.k.x},         {"k_y", s.k.y}};
}

inline std::vector<NamedField> fracture_fields(const SimState& s) {
  return {{"p_gamma", s.flow.p_gamma}, {"u_gamma", s.transport.u_gamma}, {"w_gamma", s.transport.w_gamma},
          {"eps", s.eps},              {"k_gamma", s.k_gamma},           {"kappa", s.kappa}};
}

/// Paths written by write_fields.
struct FieldFiles {
  std::string matrix;
  std::optional<std::string> fracture;  // absent when the mesh has no fractures
};

/// Writes `<stem>_matrix_NNNNNN.vtk` and, if fractures exist, `<stem>_fracture_NNNNNN.vtk`.
inline FieldFiles write_fields(const MixedDimMesh& mesh, const SimState& s, const std::string& stem,
                               int index) {
  char num[16];
  std::snprintf(num, sizeof num, "%06d", index);
  FieldFiles files{stem + "_matrix_" + num + ".vtk", std::nullopt};
  detail::write_file(files.matrix, matrix_vtk(mesh.grid(), matrix_fields(s), s.time));
  if (mesh.num_fracture_cells() > 0) {
    files.fracture = stem + "_fracture_" + num + ".vtk";
    detail::write_file(*files.fracture, fracture_vtk(mesh, fracture_fields(s), s.time));
  }
  return files;
}

/// Parsed legacy VTK file (the subset produced above).
struct VtkData {
  std::string dataset;
  std::vector<int> dimensions;
  std::vector<double> origin, spacing;
  std::map<std::string, std::vector<double>> coordinates;  // "X", "Y", "Z"
  std::vector<double> points;                              // xyz triples
  std::vector<std::pair<int, int>> lines;                  // two-point polylines
  int num_cells = 0;
  std::vector<NamedField> cell_data;

  const std::vector<double>& field(const std::string& name) const {
    for (const auto& f : cell_data)
      if (f.first == name) return f.second;
    throw IoError("VTK file has no cell field '" + name + "'", "");
  }
  bool has_field(const std::string& name) const {
    for (const auto& f : cell_data)
      if (f.first == name) return true;
    return false;
  }
};

inline VtkData parse_vtk(const std::string& text, const std::string& path = "<memory>") {
  std::istringstream in(text);
  std::string line;
  auto fail = [&](const std::string& what) { throw IoError("malformed VTK (" + what + ")", path); };
  auto number = [&](const std::string& tok) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) fail("bad number '" + tok + "'");
    return v;
  };
  auto read_numbers = [&](std::size_t n) {
    std::vector<double> out;
    out.reserve(n);
    std::string tok;
    while (out.size() < n && in >> tok) out.push_back(number(tok));
    if (out.size() != n) fail("truncated data");
    return out;
  };
  if (!std::getline(in, line) || line.rfind("# vtk DataFile", 0) != 0) fail("header");
  std::getline(in, line);  // title
  if (!std::getline(in, line) || line != "ASCII") fail("only ASCII files are supported");
  VtkData d;
  std::string key;
  while (in >> key) {
    if (key == "DATASET") {
      in >> d.dataset;
    } else if (key == "DIMENSIONS") {
      int a = 0, b = 0, c = 0;
      in >> a >> b >> c;
      d.dimensions = {a, b, c};
    } else if (key == "ORIGIN") {
      d.origin = read_numbers(3);
    } else if (key == "SPACING") {
      d.spacing = read_numbers(3);
    } else if (key == "X_COORDINATES" || key == "Y_COORDINATES" || key == "Z_COORDINATES") {
      std::size_t n = 0;
      std::string type;
      in >> n >> type;
      d.coordinates[key.substr(0, 1)] = read_numbers(n);
    } else if (key == "POINTS") {
      std::size_t n = 0;
      std::string type;
      in >> n >> type;
      d.points = read_numbers(3 * n);
    } else if (key == "LINES") {
      std::size_t n = 0, size = 0;
      in >> n >> size;
      const auto conn = read_numbers(size);
      for (std::size_t k = 0; k + 2 < conn.size(); k += 3) {
        if (conn[k] != 2.0) fail("only two-point lines are supported");
        d.lines.emplace_back(static_cast<int>(conn[k + 1]), static_cast<int>(conn[k + 2]));
      }
    } else if (key == "CELL_DATA") {
      in >> d.num_cells;
    } else if (key == "SCALARS") {
      std::string name, type, rest;
      in >> name >> type;
      std::getline(in, rest);
      std::string lt, table;
      in >> lt >> table;
      if (lt != "LOOKUP_TABLE") fail("missing LOOKUP_TABLE");
      d.cell_data.emplace_back(name, read_numbers(static_cast<std::size_t>(d.num_cells)));
    } else {
      fail("unexpected keyword '" + key + "'");
    }
  }
  return d;
}

inline VtkData read_vtk(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open VTK file", path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_vtk(ss.str(), path);
}

}  // namespace rfrac
