#pragma once

// Run configuration: INI-style `[section]` headers with `key = value` lines.
// `#` and `;` start comments. Unknown keys, duplicate sections and duplicate
// keys are errors; all problems are collected before throwing.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rfrac/bc.hpp"
#include "rfrac/chemistry.hpp"
#include "rfrac/error.hpp"
#include "rfrac/linalg.hpp"
#include "rfrac/mesh.hpp"

namespace rfrac {

struct FractureSpec {
  std::string name;
  Axis normal = Axis::y;  // horizontal fractures have a y normal
  double position = 0.0;  // coordinate of the hosting grid line
  double start = 0.0;
  double end = 0.0;

  friend bool operator==(const FractureSpec&, const FractureSpec&) = default;
};

/// Box override of the initial matrix data (cells whose centre lies inside).
struct RegionSpec {
  std::string name;
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
  std::optional<double> u, w;

  friend bool operator==(const RegionSpec&, const RegionSpec&) = default;
};

struct InitialData {
  double u = 0.0;
  double w = 0.0;
  double u_gamma = 0.0;
  double w_gamma = 0.0;
  std::vector<RegionSpec> regions;

  friend bool operator==(const InitialData&, const InitialData&) = default;
};

struct TimeControls {
  double t_end = 0.0;
  double dt = 1.0;
  bool fixed_point = false;
  int fixed_point_max_iter = 50;
  double fixed_point_tol = 1e-10;

  int num_steps() const noexcept {
    if (!(t_end > 0.0)) return 0;
    return static_cast<int>(std::ceil(t_end / dt - 1e-9));
  }
  friend bool operator==(const TimeControls&, const TimeControls&) = default;
};

enum class CflMode : std::uint8_t { off, warn, enforce };

struct OutputControls {
  std::string directory = "output";
  int every = 1;
  std::vector<Vec2> probes;
  friend bool operator==(const OutputControls&, const OutputControls&) = default;
};

struct EquidimOptions {
  int across = 5;
  int refine = 1;
  bool auto_grading = true;
  friend bool operator==(const EquidimOptions&, const EquidimOptions&) = default;
};

struct Config {
  int nx = 0, ny = 0;
  double lx = 0.0, ly = 0.0;
  std::vector<FractureSpec> fractures;
  ChemParams chem;
  double clog_fraction = 1e-6;
  BcSet bc;
  InitialData initial;
  double f = 0.0;
  double f_gamma = 0.0;
  TimeControls time;
  CflMode cfl = CflMode::off;
  SolverOptions flow_solver{1e-12, 10000};
  SolverOptions transport_solver{1e-12, 10000};
  OutputControls output;
  EquidimOptions equidim;
  std::vector<std::string> warnings;  // non-fatal findings of validation
};

inline bool same_settings(const Config& a, const Config& b) {
  auto chem_eq = [](const ChemParams& x, const ChemParams& y) {
    return x.lambda == y.lambda && x.zeta == y.zeta && x.eta == y.eta && x.eta_gamma == y.eta_gamma &&
           x.phi_ref == y.phi_ref && x.k_ref == y.k_ref && x.alpha == y.alpha &&
           x.k_gamma_ref == y.k_gamma_ref && x.kappa_ref == y.kappa_ref && x.eps_ref == y.eps_ref &&
           x.eps_max == y.eps_max && x.d == y.d && x.d_gamma == y.d_gamma && x.delta == y.delta &&
           x.paper_literal_reaction_sign == y.paper_literal_reaction_sign;
  };
  auto bc_eq = [](const BcSet& x, const BcSet& y) {
    for (std::size_t k = 0; k < 4; ++k) {
      const auto &p = x.edges[k], &q = y.edges[k];
      if (p.kind != q.kind || p.pressure != q.pressure || p.flux != q.flux ||
          p.concentration != q.concentration || p.frac_pressure != q.frac_pressure ||
          p.frac_flux != q.frac_flux || p.frac_concentration != q.frac_concentration)
        return false;
    }
    return true;
  };
  auto solver_eq = [](const SolverOptions& x, const SolverOptions& y) {
    return x.rel_tol == y.rel_tol && x.max_iter == y.max_iter;
  };
  return a.nx == b.nx && a.ny == b.ny && a.lx == b.lx && a.ly == b.ly && a.fractures == b.fractures &&
         chem_eq(a.chem, b.chem) && a.clog_fraction == b.clog_fraction && bc_eq(a.bc, b.bc) &&
         a.initial == b.initial && a.f == b.f && a.f_gamma == b.f_gamma && a.time == b.time &&
         a.cfl == b.cfl && solver_eq(a.flow_solver, b.flow_solver) &&
         solver_eq(a.transport_solver, b.transport_solver) && a.output == b.output &&
         a.equidim == b.equidim;
}

/// Shortest-round-trip-safe decimal representation (17 significant digits).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct IniEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

struct IniSection {
  std::string name;
  int line = 0;
  std::map<std::string, IniEntry> entries;
};

inline std::vector<IniSection> parse_ini(std::string_view text, std::vector<std::string>& problems) {
  std::vector<IniSection> sections;
  std::set<std::string> seen;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    for (std::size_t k = 0; k < line.size(); ++k) {
      if ((line[k] == '#' || line[k] == ';') && (k == 0 || line[k - 1] == ' ' || line[k - 1] == '\t')) {
        line = line.substr(0, k);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') {
        problems.push_back(where + ": malformed section header");
        continue;
      }
      std::string name(trim(line.substr(1, line.size() - 2)));
      if (!seen.insert(name).second) problems.push_back(where + ": duplicate section [" + name + "]");
      sections.push_back({name, lineno, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      problems.push_back(where + ": expected key = value");
      continue;
    }
    if (sections.empty()) {
      problems.push_back(where + ": key outside of any section");
      continue;
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    auto& sec = sections.back();
    if (sec.entries.count(key) != 0) {
      problems.push_back(where + ": duplicate key " + sec.name + "." + key);
      continue;
    }
    sec.entries[key] = {value, lineno, false};
  }
  return sections;
}

/// Typed access to one section with per-key error collection.
class SectionReader {
 public:
  SectionReader(IniSection* sec, std::string prefix, std::vector<std::string>& problems)
      : sec_(sec), prefix_(std::move(prefix)), problems_(problems) {}

  bool has(const std::string& key) const { return sec_ != nullptr && sec_->entries.count(key) != 0; }

  std::optional<std::string> raw(const std::string& key) {
    if (!has(key)) return std::nullopt;
    auto& e = sec_->entries.at(key);
    e.used = true;
    return e.value;
  }

  void number(const std::string& key, double& out, bool required = false) {
    auto v = raw(key);
    if (!v) {
      if (required) problems_.push_back(path(key) + ": missing required key");
      return;
    }
    double d = 0.0;
    const char* b = v->data();
    const char* e = b + v->size();
    auto [ptr, ec] = std::from_chars(b, e, d);
    if (ec != std::errc() || ptr != e || !std::isfinite(d)) {
      problems_.push_back(path(key) + ": not a number: '" + *v + "'");
      return;
    }
    out = d;
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (!has(key)) return;
    double d = 0.0;
    number(key, d);
    out = d;
  }

  void integer(const std::string& key, int& out, bool required = false) {
    auto v = raw(key);
    if (!v) {
      if (required) problems_.push_back(path(key) + ": missing required key");
      return;
    }
    int i = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), i);
    if (ec != std::errc() || ptr != v->data() + v->size()) {
      problems_.push_back(path(key) + ": not an integer: '" + *v + "'");
      return;
    }
    out = i;
  }

  void flag(const std::string& key, bool& out) {
    auto v = raw(key);
    if (!v) return;
    if (*v == "on" || *v == "true" || *v == "yes" || *v == "1")
      out = true;
    else if (*v == "off" || *v == "false" || *v == "no" || *v == "0")
      out = false;
    else
      problems_.push_back(path(key) + ": expected on/off, got '" + *v + "'");
  }

  void text(const std::string& key, std::string& out) {
    if (auto v = raw(key)) out = *v;
  }

  void check(bool ok, const std::string& key, const std::string& rule) {
    if (!ok) problems_.push_back(path(key) + ": must be " + rule);
  }

  void reject_unused() {
    if (sec_ == nullptr) return;
    for (const auto& [k, e] : sec_->entries)
      if (!e.used) problems_.push_back(path(k) + ": unknown key (line " + std::to_string(e.line) + ")");
  }

  std::string path(const std::string& key) const { return prefix_ + "." + key; }

 private:
  IniSection* sec_;
  std::string prefix_;
  std::vector<std::string>& problems_;
};

inline std::optional<BcKind> parse_bc_kind(std::string_view s) {
  if (s == "pressure") return BcKind::pressure;
  if (s == "outflux") return BcKind::outflux;
  if (s == "noflow") return BcKind::noflow;
  return std::nullopt;
}

}  // namespace detail

/// Parse and validate a configuration. Throws ParseError listing every problem.
inline Config parse_config(std::string_view text) {
  std::vector<std::string> problems;
  auto sections = detail::parse_ini(text, problems);
  Config cfg;

  std::map<std::string, detail::IniSection*> by_name;
  for (auto& s : sections) by_name.emplace(s.name, &s);
  auto section = [&](const std::string& name) -> detail::IniSection* {
    auto it = by_name.find(name);
    return it == by_name.end() ? nullptr : it->second;
  };
  const std::set<std::string> known{"geometry", "chem", "bc", "initial", "source", "time",
                                    "flags", "solver", "output", "equidim"};
  for (const auto& s : sections) {
    if (known.count(s.name) || s.name.rfind("fracture.", 0) == 0 || s.name.rfind("region.", 0) == 0)
      continue;
    problems.push_back("[" + s.name + "]: unknown section (line " + std::to_string(s.line) + ")");
  }

  {
    detail::SectionReader r(section("geometry"), "geometry", problems);
    if (!section("geometry")) problems.push_back("[geometry]: missing required section");
    r.integer("nx", cfg.nx, true);
    r.integer("ny", cfg.ny, true);
    r.number("lx", cfg.lx, true);
    r.number("ly", cfg.ly, true);
    if (r.has("nx")) r.check(cfg.nx >= 1, "nx", ">= 1");
    if (r.has("ny")) r.check(cfg.ny >= 1, "ny", ">= 1");
    if (r.has("lx")) r.check(cfg.lx > 0.0, "lx", "> 0");
    if (r.has("ly")) r.check(cfg.ly > 0.0, "ly", "> 0");
    r.reject_unused();
  }

  for (auto& s : sections) {
    if (s.name.rfind("fracture.", 0) != 0) continue;
    detail::SectionReader r(&s, s.name, problems);
    FractureSpec fs;
    fs.name = s.name.substr(9);
    std::string orient;
    r.text("orientation", orient);
    if (orient == "horizontal")
      fs.normal = Axis::y;
    else if (orient == "vertical")
      fs.normal = Axis::x;
    else
      problems.push_back(r.path("orientation") + ": expected horizontal or vertical");
    r.number("position", fs.position, true);
    r.number("start", fs.start, true);
    r.number("end", fs.end, true);
    r.reject_unused();
    cfg.fractures.push_back(fs);
  }

  {
    detail::SectionReader r(section("chem"), "chem", problems);
    ChemParams& c = cfg.chem;
    r.number("lambda", c.lambda);
    r.integer("zeta", c.zeta);
    r.number("eta", c.eta);
    r.number("eta_gamma", c.eta_gamma);
    r.number("phi_ref", c.phi_ref);
    r.number("k_ref", c.k_ref);
    r.number("alpha", c.alpha);
    r.number("k_gamma_ref", c.k_gamma_ref);
    r.number("kappa_ref", c.kappa_ref);
    r.number("eps_ref", c.eps_ref);
    r.number("eps_max", c.eps_max);
    r.number("d", c.d);
    r.number("d_gamma", c.d_gamma);
    r.number("delta", c.delta);
    r.number("clog_fraction", cfg.clog_fraction);
    r.check(cfg.clog_fraction >= 0.0 && cfg.clog_fraction < 1.0, "clog_fraction", "in [0, 1)");
    r.reject_unused();
    for (auto& p : c.validate()) problems.push_back(p);
    if (!cfg.fractures.empty() && !(c.eps_ref > 0.0))
      problems.push_back("chem.eps_ref: must be > 0 when fractures are present");
  }

  {
    detail::SectionReader r(section("bc"), "bc", problems);
    if (!section("bc")) problems.push_back("[bc]: missing required section");
    for (Edge e : kEdges) {
      const std::string n(to_string(e));
      EdgeBc& b = cfg.bc[e];
      auto kind = r.raw(n + ".kind");
      if (!kind) {
        problems.push_back(r.path(n + ".kind") + ": missing required key");
        continue;
      }
      if (auto k = detail::parse_bc_kind(*kind)) {
        b.kind = *k;
      } else {
        problems.push_back(r.path(n + ".kind") + ": expected pressure, outflux or noflow");
        continue;
      }
      if (b.kind == BcKind::pressure) {
        r.number(n + ".pressure", b.pressure, true);
        r.number(n + ".concentration", b.concentration);
        r.optional_number(n + ".frac_pressure", b.frac_pressure);
        r.optional_number(n + ".frac_concentration", b.frac_concentration);
        r.check(b.concentration >= 0.0, n + ".concentration", ">= 0");
      } else if (b.kind == BcKind::outflux) {
        r.number(n + ".flux", b.flux, true);
        r.optional_number(n + ".frac_flux", b.frac_flux);
        if (!(b.flux > 0.0))
          cfg.warnings.push_back(r.path(n + ".flux") + ": outflux should be > 0");
      }
    }
    r.reject_unused();
  }

  {
    detail::SectionReader r(section("initial"), "initial", problems);
    InitialData& d = cfg.initial;
    r.number("u", d.u);
    r.number("w", d.w);
    d.u_gamma = d.u;
    d.w_gamma = d.w;
    r.number("u_gamma", d.u_gamma);
    r.number("w_gamma", d.w_gamma);
    r.check(d.u >= 0.0, "u", ">= 0");
    r.check(d.w >= 0.0, "w", ">= 0");
    r.check(d.u_gamma >= 0.0, "u_gamma", ">= 0");
    r.check(d.w_gamma >= 0.0, "w_gamma", ">= 0");
    r.reject_unused();
  }
  for (auto& s : sections) {
    if (s.name.rfind("region.", 0) != 0) continue;
    detail::SectionReader r(&s, s.name, problems);
    RegionSpec reg;
    reg.name = s.name.substr(7);
    r.number("x0", reg.x0, true);
    r.number("x1", reg.x1, true);
    r.number("y0", reg.y0, true);
    r.number("y1", reg.y1, true);
    r.optional_number("u", reg.u);
    r.optional_number("w", reg.w);
    r.check(!reg.u || *reg.u >= 0.0, "u", ">= 0");
    r.check(!reg.w || *reg.w >= 0.0, "w", ">= 0");
    r.reject_unused();
    cfg.initial.regions.push_back(reg);
  }

  {
    detail::SectionReader r(section("source"), "source", problems);
    r.number("f", cfg.f);
    r.number("f_gamma", cfg.f_gamma);
    r.reject_unused();
  }

  {
    detail::SectionReader r(section("time"), "time", problems);
    TimeControls& t = cfg.time;
    r.number("t_end", t.t_end);
    r.number("dt", t.dt);
    r.flag("fixed_point", t.fixed_point);
    r.integer("fixed_point_max_iter", t.fixed_point_max_iter);
    r.number("fixed_point_tol", t.fixed_point_tol);
    r.check(t.t_end >= 0.0, "t_end", ">= 0");
    r.check(t.dt > 0.0, "dt", "> 0");
    r.check(t.fixed_point_max_iter >= 1, "fixed_point_max_iter", ">= 1");
    r.check(t.fixed_point_tol > 0.0, "fixed_point_tol", "> 0");
    r.reject_unused();
  }

  {
    detail::SectionReader r(section("flags"), "flags", problems);
    r.flag("paper_literal_reaction_sign", cfg.chem.paper_literal_reaction_sign);
    std::string mode = "off";
    r.text("cfl_mode", mode);
    if (mode == "off")
      cfg.cfl = CflMode::off;
    else if (mode == "warn")
      cfg.cfl = CflMode::warn;
    else if (mode == "enforce")
      cfg.cfl = CflMode::enforce;
    else
      problems.push_back(r.path("cfl_mode") + ": expected off, warn or enforce");
    r.reject_unused();
  }

  {
    detail::SectionReader r(section("solver"), "solver", problems);
    r.number("flow_rel_tol", cfg.flow_solver.rel_tol);
    r.number("transport_rel_tol", cfg.transport_solver.rel_tol);
    int max_iter = cfg.flow_solver.max_iter;
    r.integer("max_iter", max_iter);
    cfg.flow_solver.max_iter = cfg.transport_solver.max_iter = max_iter;
    r.check(cfg.flow_solver.rel_tol > 0.0 && cfg.flow_solver.rel_tol <= 1e-10, "flow_rel_tol",
            "in (0, 1e-10]");
    r.check(cfg.transport_solver.rel_tol > 0.0 && cfg.transport_solver.rel_tol < 1.0,
            "transport_rel_tol", "in (0, 1)");
    r.check(max_iter >= 1, "max_iter", ">= 1");
    r.reject_unused();
  }

  {
    detail::SectionReader r(section("output"), "output", problems);
    r.text("directory", cfg.output.directory);
    r.integer("every", cfg.output.every);
    r.check(cfg.output.every >= 1, "every", ">= 1");
    if (auto probes = r.raw("probes")) {
      std::stringstream ss(*probes);
      std::string item;
      while (std::getline(ss, item, ';')) {
        if (detail::trim(item).empty()) continue;
        std::stringstream ps{std::string(item)};
        Vec2 p{};
        std::string rest;
        if (!(ps >> p[0] >> p[1]) || (ps >> rest)) {
          problems.push_back(r.path("probes") + ": expected 'x y; x y; ...'");
          break;
        }
        cfg.output.probes.push_back(p);
      }
    }
    r.reject_unused();
  }

  {
    detail::SectionReader r(section("equidim"), "equidim", problems);
    r.integer("across", cfg.equidim.across);
    r.integer("refine", cfg.equidim.refine);
    std::string grading = "auto";
    r.text("grading", grading);
    if (grading == "auto")
      cfg.equidim.auto_grading = true;
    else if (grading == "none")
      cfg.equidim.auto_grading = false;
    else
      problems.push_back(r.path("grading") + ": expected auto or none");
    r.check(cfg.equidim.across >= 3, "across", ">= 3");
    r.check(cfg.equidim.refine >= 1, "refine", ">= 1");
    r.reject_unused();
  }

  if (!problems.empty()) throw ParseError(problems);

  // geometric consistency of the fracture set
  try {
    const MatrixGrid grid = build_matrix_grid(cfg.nx, cfg.ny, cfg.lx, cfg.ly);
    std::vector<std::vector<int>> paths;
    for (const auto& fs : cfg.fractures) {
      try {
        paths.push_back(fracture_path(grid, fs.normal, fs.position, fs.start, fs.end));
      } catch (const Error& e) {
        problems.push_back("fracture." + fs.name + ": " + e.what());
      }
    }
    if (problems.empty()) MixedDimMesh(grid, paths);
  } catch (const Error& e) {
    problems.push_back(std::string("geometry: ") + e.what());
  }
  if (!problems.empty()) throw ParseError(problems);
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file", path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Canonical text form; parse_config(serialize_config(c)) reproduces c.
inline std::string serialize_config(const Config& c) {
  std::ostringstream o;
  auto num = [&](const char* k, double v) { o << k << " = " << format_double(v) << '\n'; };
  auto integer = [&](const char* k, int v) { o << k << " = " << v << '\n'; };
  o << "[geometry]\n";
  integer("nx", c.nx);
  integer("ny", c.ny);
  num("lx", c.lx);
  num("ly", c.ly);
  for (const auto& f : c.fractures) {
    o << "\n[fracture." << f.name << "]\n";
    o << "orientation = " << (f.normal == Axis::y ? "horizontal" : "vertical") << '\n';
    num("position", f.position);
    num("start", f.start);
    num("end", f.end);
  }
  o << "\n[chem]\n";
  num("lambda", c.chem.lambda);
  integer("zeta", c.chem.zeta);
  num("eta", c.chem.eta);
  num("eta_gamma", c.chem.eta_gamma);
  num("phi_ref", c.chem.phi_ref);
  num("k_ref", c.chem.k_ref);
  num("alpha", c.chem.alpha);
  num("k_gamma_ref", c.chem.k_gamma_ref);
  num("kappa_ref", c.chem.kappa_ref);
  num("eps_ref", c.chem.eps_ref);
  num("eps_max", c.chem.eps_max);
  num("d", c.chem.d);
  num("d_gamma", c.chem.d_gamma);
  num("delta", c.chem.delta);
  num("clog_fraction", c.clog_fraction);
  o << "\n[bc]\n";
  for (Edge e : kEdges) {
    const std::string n(to_string(e));
    const EdgeBc& b = c.bc[e];
    o << n << ".kind = " << to_string(b.kind) << '\n';
    if (b.kind == BcKind::pressure) {
      num((n + ".pressure").c_str(), b.pressure);
      num((n + ".concentration").c_str(), b.concentration);
      if (b.frac_pressure) num((n + ".frac_pressure").c_str(), *b.frac_pressure);
      if (b.frac_concentration) num((n + ".frac_concentration").c_str(), *b.frac_concentration);
    } else if (b.kind == BcKind::outflux) {
      num((n + ".flux").c_str(), b.flux);
      if (b.frac_flux) num((n + ".frac_flux").c_str(), *b.frac_flux);
    }
  }
  o << "\n[initial]\n";
  num("u", c.initial.u);
  num("w", c.initial.w);
  num("u_gamma", c.initial.u_gamma);
  num("w_gamma", c.initial.w_gamma);
  for (const auto& r : c.initial.regions) {
    o << "\n[region." << r.name << "]\n";
    num("x0", r.x0);
    num("x1", r.x1);
    num("y0", r.y0);
    num("y1", r.y1);
    if (r.u) num("u", *r.u);
    if (r.w) num("w", *r.w);
  }
  o << "\n[source]\n";
  num("f", c.f);
  num("f_gamma", c.f_gamma);
  o << "\n[time]\n";
  num("t_end", c.time.t_end);
  num("dt", c.time.dt);
  o << "fixed_point = " << (c.time.fixed_point ? "on" : "off") << '\n';
  integer("fixed_point_max_iter", c.time.fixed_point_max_iter);
  num("fixed_point_tol", c.time.fixed_point_tol);
  o << "\n[flags]\n";
  o << "paper_literal_reaction_sign = " << (c.chem.paper_literal_reaction_sign ? "on" : "off") << '\n';
  o << "cfl_mode = " << (c.cfl == CflMode::off ? "off" : c.cfl == CflMode::warn ? "warn" : "enforce")
    << '\n';
  o << "\n[solver]\n";
  num("flow_rel_tol", c.flow_solver.rel_tol);
  num("transport_rel_tol", c.transport_solver.rel_tol);
  integer("max_iter", c.flow_solver.max_iter);
  o << "\n[output]\n";
  o << "directory = " << c.output.directory << '\n';
  integer("every", c.output.every);
  if (!c.output.probes.empty()) {
    o << "probes = ";
    for (std::size_t k = 0; k < c.output.probes.size(); ++k)
      o << (k ? "; " : "") << format_double(c.output.probes[k][0]) << ' '
        << format_double(c.output.probes[k][1]);
    o << '\n';
  }
  o << "\n[equidim]\n";
  integer("across", c.equidim.across);
  integer("refine", c.equidim.refine);
  o << "grading = " << (c.equidim.auto_grading ? "auto" : "none") << '\n';
  return o.str();
}

inline MixedDimMesh build_mesh(const Config& c) {
  MatrixGrid grid = build_matrix_grid(c.nx, c.ny, c.lx, c.ly);
  std::vector<std::vector<int>> paths;
  for (const auto& f : c.fractures)
    paths.push_back(fracture_path(grid, f.normal, f.position, f.start, f.end));
  return MixedDimMesh(std::move(grid), paths);
}

}  // namespace rfrac
