#pragma once

// Command-line front end. `cli_main` returns the process exit status:
// 0 success, 1 invalid input (config, I/O, usage), 2 solver failure.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "rfrac/config.hpp"
#include "rfrac/equidim.hpp"
#include "rfrac/error.hpp"
#include "rfrac/run.hpp"
#include "rfrac/timeseries.hpp"
#include "rfrac/vtk.hpp"

namespace rfrac {

/// Final fields of a run directory, as written by `run` or `equidim`.
struct LoadedRun {
  std::string prefix;
  int step = 0;
  VtkData matrix;
  std::optional<VtkData> fracture;
  std::optional<CsvTable> cellmap;
};

inline LoadedRun load_run(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("run directory not found", dir);
  const std::regex pattern(R"(([A-Za-z0-9]+)_matrix_(\d{6})\.vtk)");
  std::map<std::string, int> latest;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, pattern)) continue;
    const int step = std::stoi(m[2].str());
    auto it = latest.find(m[1].str());
    if (it == latest.end() || it->second < step) latest[m[1].str()] = step;
  }
  if (latest.empty()) throw IoError("no matrix VTK files in run directory", dir);
  if (latest.size() > 1) throw ComparisonError("run directory holds outputs of several runs: " + dir);
  LoadedRun r;
  r.prefix = latest.begin()->first;
  r.step = latest.begin()->second;
  char num[16];
  std::snprintf(num, sizeof num, "%06d", r.step);
  const fs::path base(dir);
  r.matrix = read_vtk((base / (r.prefix + "_matrix_" + num + ".vtk")).string());
  const auto frac = base / (r.prefix + "_fracture_" + num + ".vtk");
  if (fs::exists(frac)) r.fracture = read_vtk(frac.string());
  const auto map = base / (r.prefix + "_cellmap.csv");
  if (fs::exists(map)) r.cellmap = read_csv(map.string());
  return r;
}

namespace detail {

inline std::vector<double> vtk_cell_volumes(const VtkData& d) {
  if (d.dimensions.size() < 2) throw IoError("VTK file lacks dimensions", "");
  const int nx = d.dimensions[0] - 1, ny = d.dimensions[1] - 1;
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(nx * ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (d.dataset == "STRUCTURED_POINTS") {
        v.push_back(d.spacing.at(0) * d.spacing.at(1));
      } else {
        const auto& x = d.coordinates.at("X");
        const auto& y = d.coordinates.at("Y");
        v.push_back((x[i + 1] - x[i]) * (y[j + 1] - y[j]));
      }
    }
  return v;
}

inline std::vector<double> vtk_line_lengths(const VtkData& d) {
  std::vector<double> out;
  for (const auto& [a, b] : d.lines) {
    const double dx = d.points[3 * b] - d.points[3 * a];
    const double dy = d.points[3 * b + 1] - d.points[3 * a + 1];
    out.push_back(std::hypot(dx, dy));
  }
  return out;
}

}  // namespace detail

inline Correspondence correspondence_of(const LoadedRun& r) {
  Correspondence c;
  if (r.cellmap) {
    const auto& t = *r.cellmap;
    const auto ci = t.column("reduced_cell"), fi = t.column("fracture_cell"), wi = t.column("weight"),
               ei = t.column("excluded");
    int nr = 0, nf = 0;
    for (const auto& row : t.rows) {
      nr = std::max(nr, static_cast<int>(row[ci]) + 1);
      nf = std::max(nf, static_cast<int>(row[fi]) + 1);
    }
    c.reduced_cells = nr;
    c.reduced_fracture_cells = nf;
    c.excluded.assign(static_cast<std::size_t>(nr), 0);
    for (const auto& row : t.rows) {
      c.cell_target.push_back(static_cast<int>(row[ci]));
      c.cell_fracture_target.push_back(static_cast<int>(row[fi]));
      c.cell_weight.push_back(row[wi]);
      if (row[ei] != 0.0 && row[ci] >= 0.0) c.excluded[static_cast<std::size_t>(row[ci])] = 1;
    }
    return c;
  }
  c.cell_weight = detail::vtk_cell_volumes(r.matrix);
  c.reduced_cells = static_cast<int>(c.cell_weight.size());
  for (int k = 0; k < c.reduced_cells; ++k) {
    c.cell_target.push_back(k);
    c.cell_fracture_target.push_back(kNone);
  }
  c.excluded.assign(c.cell_weight.size(), 0);
  if (r.fracture) {
    c.fracture_weight = detail::vtk_line_lengths(*r.fracture);
    c.reduced_fracture_cells = static_cast<int>(c.fracture_weight.size());
    for (int k = 0; k < c.reduced_fracture_cells; ++k) c.fracture_target.push_back(k);
  }
  return c;
}

inline ReducedFields restrict_run(const LoadedRun& r) {
  static const std::vector<double> none;
  FieldsView v{r.matrix.field("p"), r.matrix.field("u"), r.fracture ? r.fracture->field("p_gamma") : none,
               r.fracture ? r.fracture->field("u_gamma") : none};
  if (v.p.size() != static_cast<std::size_t>(r.matrix.num_cells))
    throw ComparisonError("matrix field size does not match the grid");
  return restrict_fields(v, correspondence_of(r));
}

inline std::string comparison_csv(const ComparisonReport& r) {
  std::ostringstream o;
  o << "field,l2_rel,linf_rel\n";
  auto row = [&](const char* n, const FieldErrors& e) {
    o << n << ',' << format_double(e.l2) << ',' << format_double(e.linf) << '\n';
  };
  row("p", r.p);
  row("u", r.u);
  row("p_gamma", r.p_gamma);
  row("u_gamma", r.u_gamma);
  return o.str();
}

namespace detail {

inline void print_report(std::ostream& out, const RunReport& r) {
  out << "steps " << r.steps << ", t = " << format_double(r.time) << '\n';
  out << "mass: u " << format_double(r.ledger.u_mass) << ", w " << format_double(r.ledger.w_mass)
      << ", in " << format_double(r.ledger.boundary_in) << ", out " << format_double(r.ledger.boundary_out)
      << ", relative closure " << format_double(r.ledger.relative_closure) << '\n';
  out << "min phi " << format_double(r.min_phi) << ", min eps " << format_double(r.min_eps) << '\n';
  if (!r.clogged_cells.empty() || !r.clogged_fracture_cells.empty())
    out << "clogged: " << r.clogged_cells.size() << " matrix cells, " << r.clogged_fracture_cells.size()
        << " fracture cells\n";
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
  out << "wall time " << r.wall_seconds << " s\n";
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Reactive transport in fractured porous media (reduced and equi-dimensional models)"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string output_dir;
  bool quiet = false;
  long long seed_unused = 0;
  app.add_option("--output-dir", output_dir, "Output directory (overrides [output] directory)");
  app.add_flag("--quiet", quiet, "Suppress console reports");
  app.add_option("--seed-unused", seed_unused, "Reserved; the solver is deterministic");

  std::string config_path, run_a, run_b;
  int dt_levels = 4, h_levels = 3;
  auto* run_cmd = app.add_subcommand("run", "Run the reduced (mixed-dimensional) model");
  run_cmd->add_option("config", config_path, "Configuration file")->required();
  auto* eq_cmd = app.add_subcommand("equidim", "Run the equi-dimensional reference model");
  eq_cmd->add_option("config", config_path, "Configuration file")->required();
  auto* cmp_cmd = app.add_subcommand("compare", "Error norms of runA against the reference runB");
  cmp_cmd->add_option("runA", run_a, "Run directory")->required();
  cmp_cmd->add_option("runB", run_b, "Reference run directory")->required();
  auto* conv_cmd = app.add_subcommand("convergence", "dt and h refinement study");
  conv_cmd->add_option("config", config_path, "Configuration file")->required();
  conv_cmd->add_option("--dt-levels", dt_levels, "Number of dt levels (>= 3)");
  conv_cmd->add_option("--h-levels", h_levels, "Number of grid levels (>= 3)");
  auto* val_cmd = app.add_subcommand("validate", "Parse and validate a configuration");
  val_cmd->add_option("config", config_path, "Configuration file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (val_cmd->parsed()) {
      const Config c = load_config(config_path);
      for (const auto& w : c.warnings) err << "warning: " << w << '\n';
      if (!quiet) out << config_path << ": ok\n";
      return 0;
    }
    if (run_cmd->parsed() || eq_cmd->parsed()) {
      const Config c = load_config(config_path);
      RunOptions opt;
      opt.output_dir = output_dir.empty() ? c.output.directory : output_dir;
      if (run_cmd->parsed()) {
        const auto rep = run(c, opt);
        if (!quiet) detail::print_report(out, rep);
      } else {
        const auto rep = run_equidim(c, opt);
        if (!quiet) detail::print_report(out, rep.report);
      }
      return 0;
    }
    if (cmp_cmd->parsed()) {
      const auto a = restrict_run(load_run(run_a));
      const auto b = restrict_run(load_run(run_b));
      const std::string csv = comparison_csv(compare_fields(a, b));
      out << csv;
      if (!output_dir.empty()) {
        std::filesystem::create_directories(output_dir);
        detail::write_file((std::filesystem::path(output_dir) / "compare.csv").string(), csv);
      }
      return 0;
    }
    if (conv_cmd->parsed()) {
      const Config c = load_config(config_path);
      auto rows = dt_study(c, dt_levels);
      const auto hr = h_study(c, h_levels);
      rows.insert(rows.end(), hr.begin(), hr.end());
      const std::string csv = study_csv(rows);
      out << csv;
      if (!output_dir.empty()) {
        std::filesystem::create_directories(output_dir);
        detail::write_file((std::filesystem::path(output_dir) / "convergence.csv").string(), csv);
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "configuration error:\n";
    for (const auto& p : e.problems()) err << "  " << p << '\n';
    return 1;
  } catch (const SolverFailure& e) {
    err << "solver failure: " << e.what() << '\n';
    return 2;
  } catch (const SingularSystem& e) {
    err << "solver failure: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 1;
}

}  // namespace rfrac
