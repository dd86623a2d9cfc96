#pragma once

// Run drivers: the reduced model, the equi-dimensional oracle and
// refinement studies, with file output at the configured cadence.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "rfrac/config.hpp"
#include "rfrac/coupler.hpp"
#include "rfrac/equidim.hpp"
#include "rfrac/error.hpp"
#include "rfrac/timeseries.hpp"
#include "rfrac/vtk.hpp"

namespace rfrac {

struct RunOptions {
  std::string output_dir;  // empty: no files
  std::string prefix = "reduced";
  /// Called after every step (and once for the initial state).
  std::function<void(const SimState&)> observer;
};

struct RunReport {
  int steps = 0;
  double time = 0.0;
  LedgerRecord ledger;
  double min_phi = 0.0;
  double min_eps = 0.0;
  std::vector<int> clogged_cells;
  std::vector<int> clogged_fracture_cells;
  double dropped_storage = 0.0;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
  std::vector<std::string> files;
  std::vector<TimeseriesRow> rows;
  SimState final_state;
};

namespace detail {

inline std::vector<int> probe_cells(const MatrixGrid& g, const std::vector<Vec2>& probes) {
  std::vector<int> out;
  for (const auto& p : probes) {
    const int c = g.locate(p[0], p[1]);
    if (c == kNone)
      throw ConfigError("output.probes: point (" + format_double(p[0]) + ", " + format_double(p[1]) +
                        ") lies outside the domain");
    out.push_back(c);
  }
  return out;
}

inline TimeseriesRow timeseries_row(const SimState& s, const std::vector<int>& probes) {
  TimeseriesRow r{s.time,
                  s.ledger.u_mass,
                  s.ledger.w_mass,
                  s.ledger.boundary_in,
                  s.ledger.boundary_out,
                  s.diag.min_phi,
                  s.diag.min_eps,
                  {}};
  for (int c : probes) r.probes.push_back(s.transport.u[static_cast<std::size_t>(c)]);
  return r;
}

inline std::string summary_text(const RunReport& r) {
  std::ostringstream o;
  auto line = [&](const char* k, double v) { o << k << " = " << format_double(v) << '\n'; };
  o << "steps = " << r.steps << '\n';
  line("time", r.time);
  line("total_u_mass", r.ledger.u_mass);
  line("total_w_mass", r.ledger.w_mass);
  line("initial_mass", r.ledger.initial_mass);
  line("boundary_in", r.ledger.boundary_in);
  line("boundary_out", r.ledger.boundary_out);
  line("storage_change", r.ledger.storage_change);
  line("mass_closure", r.ledger.closure);
  line("relative_mass_closure", r.ledger.relative_closure);
  line("max_step_relative_closure", r.ledger.max_step_relative);
  line("min_phi", r.min_phi);
  line("min_eps", r.min_eps);
  line("dropped_storage", r.dropped_storage);
  auto list = [&](const char* k, const std::vector<int>& v) {
    o << k << " =";
    for (int c : v) o << ' ' << c;
    o << '\n';
  };
  list("clogged_cells", r.clogged_cells);
  list("clogged_fracture_cells", r.clogged_fracture_cells);
  for (const auto& w : r.warnings) o << "warning = " << w << '\n';
  return o.str();
}

/// Re-throws the active exception with `where` prepended, keeping its type.
[[noreturn]] inline void rethrow_with(const std::string& where) {
  try {
    throw;
  } catch (const FixedPointError& e) {
    throw FixedPointError(where + e.what(), e.last_residual());
  } catch (const SolverFailure& e) {
    throw SolverFailure(where + e.what(), e.residual_history());
  } catch (const SingularSystem& e) {
    throw SingularSystem(where + e.what(), e.compatibility_residual());
  } catch (const ConfigError& e) {
    std::vector<std::string> p;
    for (const auto& x : e.problems()) p.push_back(where + x);
    throw ConfigError(p);
  } catch (const DomainError& e) {
    throw DomainError(where + e.what());
  }
}

[[noreturn]] inline void rethrow_at_step(int step, double time, const SimState& s) {
  rethrow_with("step " + std::to_string(step) + " (t = " + format_double(time) + ", min phi " +
               format_double(s.diag.min_phi) + ", min eps " + format_double(s.diag.min_eps) + "): ");
}

}  // namespace detail

/// Time loop over a prepared problem. Output rows and files are produced at
/// step 0, every `out.every` steps and at the final step.
inline RunReport run_problem(const Problem& pb, const InitialFields& init, const TimeControls& time,
                             const OutputControls& out, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  RunReport rep;
  const auto probes = detail::probe_cells(pb.mesh.grid(), out.probes);
  const bool write = !opt.output_dir.empty();
  std::string stem;
  if (write) {
    std::error_code ec;
    std::filesystem::create_directories(opt.output_dir, ec);
    if (ec) throw IoError("cannot create output directory (" + ec.message() + ")", opt.output_dir);
    stem = (std::filesystem::path(opt.output_dir) / opt.prefix).string();
  }
  auto emit = [&](const SimState& s) {
    rep.rows.push_back(detail::timeseries_row(s, probes));
    if (!write) return;
    const auto files = write_fields(pb.mesh, s, stem, s.step);
    rep.files.push_back(files.matrix);
    if (files.fracture) rep.files.push_back(*files.fracture);
  };

  SimState s;
  try {
    s = initial_state(pb, init);
  } catch (const Error&) {
    detail::rethrow_with("step 0 (initial pressure): ");
  }
  if (opt.observer) opt.observer(s);
  emit(s);
  const auto dts = step_sizes(time);
  const int n = static_cast<int>(dts.size());
  for (int k = 0; k < n; ++k) {
    try {
      s = advance(pb, s, dts[k]);
    } catch (const Error&) {
      detail::rethrow_at_step(k + 1, s.time + dts[k], s);
    }
    if (k + 1 == n) s.time = time.t_end;
    if (opt.observer) opt.observer(s);
    if ((k + 1) % out.every == 0 || k + 1 == n) emit(s);
  }

  rep.steps = n;
  rep.time = s.time;
  rep.ledger = s.ledger;
  rep.min_phi = s.diag.min_phi;
  rep.min_eps = s.diag.min_eps;
  rep.clogged_cells = s.diag.clogged_cells;
  rep.clogged_fracture_cells = s.diag.clogged_fracture_cells;
  rep.dropped_storage = s.diag.dropped_storage;
  rep.warnings = s.diag.warnings;
  if (write) {
    const std::string csv = stem + "_timeseries.csv";
    write_timeseries(rep.rows, probes.size(), csv);
    rep.files.push_back(csv);
  }
  rep.final_state = std::move(s);
  if (write) {
    const std::string summary = stem + "_summary.txt";
    detail::write_file(summary, detail::summary_text(rep));
    rep.files.push_back(summary);
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline RunReport run(const Config& c, RunOptions opt = {}) {
  const Problem pb = make_problem(c);
  auto rep = run_problem(pb, make_initial_fields(pb.mesh, c.initial), c.time, c.output, opt);
  rep.warnings.insert(rep.warnings.begin(), c.warnings.begin(), c.warnings.end());
  return rep;
}

/// Writes the equidim -> reduced cell map next to the equidim outputs.
inline std::string cellmap_csv(const EquidimGrid& eg) {
  std::ostringstream o;
  o << "cell,reduced_cell,fracture_cell,weight,excluded\n";
  for (int k = 0; k < eg.grid.num_cells(); ++k) {
    const int rc = eg.reduced_cell[k];
    o << k << ',' << rc << ',' << eg.fracture_cell[k] << ',' << format_double(eg.grid.volume(k)) << ','
      << (rc != kNone && eg.excluded[rc] ? 1 : 0) << '\n';
  }
  return o.str();
}

struct EquidimRun {
  EquidimProblem setup;
  RunReport report;
};

inline EquidimRun run_equidim(const EquidimConfig& ec, RunOptions opt = {}) {
  if (opt.prefix == "reduced") opt.prefix = "equidim";
  EquidimRun r{make_equidim_problem(ec), {}};
  r.report = run_problem(r.setup.problem, r.setup.initial, ec.base.time, ec.base.output, opt);
  r.report.warnings.insert(r.report.warnings.begin(), r.setup.warnings.begin(), r.setup.warnings.end());
  if (!opt.output_dir.empty()) {
    const auto path = (std::filesystem::path(opt.output_dir) / (opt.prefix + "_cellmap.csv")).string();
    detail::write_file(path, cellmap_csv(r.setup.grid));
    r.report.files.push_back(path);
  }
  return r;
}

inline EquidimRun run_equidim(const Config& c, RunOptions opt = {}) {
  return run_equidim(equidim_config(c), std::move(opt));
}

// ---------------------------------------------------------------------------
// refinement studies

struct StudyRow {
  std::string study;  // "dt" or "h"
  int level = 0;
  double dt = 0.0;
  int nx = 0, ny = 0;
  double difference = 0.0;  // weighted L2 of u against the next level (0 on the last)
  double ratio = 0.0;       // difference[level - 1] / difference[level]
};

namespace detail {

/// Volume-weighted L2 distance of two matrix fields restricted to `coarse`.
inline double restricted_l2(const MatrixGrid& coarse, const MatrixGrid& a, std::span<const double> fa,
                            const MatrixGrid& b, std::span<const double> fb) {
  auto restrict_to = [&](const MatrixGrid& g, std::span<const double> f) {
    const int rx = g.nx() / coarse.nx(), ry = g.ny() / coarse.ny();
    std::vector<double> sum(static_cast<std::size_t>(coarse.num_cells()), 0.0), vol(sum.size(), 0.0);
    for (int c = 0; c < g.num_cells(); ++c) {
      auto [i, j] = g.cell_ij(c);
      const int t = coarse.cell(i / rx, j / ry);
      sum[t] += g.volume(c) * f[c];
      vol[t] += g.volume(c);
    }
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] /= vol[k];
    return sum;
  };
  const auto ra = restrict_to(a, fa), rb = restrict_to(b, fb);
  double s = 0.0;
  for (int c = 0; c < coarse.num_cells(); ++c) s += coarse.volume(c) * (ra[c] - rb[c]) * (ra[c] - rb[c]);
  return std::sqrt(s);
}

inline void fill_ratios(std::vector<StudyRow>& rows) {
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k].difference > 0.0) rows[k].ratio = rows[k - 1].difference / rows[k].difference;
}

}  // namespace detail

/// Halves dt `levels - 1` times and reports successive final-u differences.
inline std::vector<StudyRow> dt_study(const Config& c, int levels = 4) {
  if (levels < 3) throw ConfigError("convergence: at least 3 levels are needed");
  std::vector<SimState> finals;
  std::vector<StudyRow> rows;
  const Problem pb = make_problem(c);
  for (int l = 0; l < levels; ++l) {
    Config cl = c;
    cl.time.dt = c.time.dt / std::pow(2.0, l);
    finals.push_back(run_problem(pb, make_initial_fields(pb.mesh, c.initial), cl.time, cl.output, {}).final_state);
    rows.push_back({"dt", l, cl.time.dt, c.nx, c.ny, 0.0, 0.0});
  }
  const MatrixGrid& g = pb.mesh.grid();
  for (int l = 0; l + 1 < levels; ++l)
    rows[l].difference = detail::restricted_l2(g, g, finals[l].transport.u, g, finals[l + 1].transport.u);
  rows.pop_back();
  detail::fill_ratios(rows);
  return rows;
}

/// Doubles nx and ny `levels - 1` times; differences are taken on the coarsest grid.
inline std::vector<StudyRow> h_study(const Config& c, int levels = 3) {
  if (levels < 3) throw ConfigError("convergence: at least 3 levels are needed");
  std::vector<Problem> problems;
  std::vector<SimState> finals;
  std::vector<StudyRow> rows;
  for (int l = 0; l < levels; ++l) {
    Config cl = c;
    cl.nx = c.nx << l;
    cl.ny = c.ny << l;
    problems.push_back(make_problem(cl));
    finals.push_back(
        run_problem(problems.back(), make_initial_fields(problems.back().mesh, cl.initial), cl.time, cl.output, {})
            .final_state);
    rows.push_back({"h", l, c.time.dt, cl.nx, cl.ny, 0.0, 0.0});
  }
  const MatrixGrid& coarse = problems.front().mesh.grid();
  for (int l = 0; l + 1 < levels; ++l)
    rows[l].difference = detail::restricted_l2(coarse, problems[l].mesh.grid(), finals[l].transport.u,
                                               problems[l + 1].mesh.grid(), finals[l + 1].transport.u);
  rows.pop_back();
  detail::fill_ratios(rows);
  return rows;
}

inline std::string study_csv(const std::vector<StudyRow>& rows) {
  std::ostringstream o;
  o << "study,level,dt,nx,ny,difference,ratio\n";
  for (const auto& r : rows)
    o << r.study << ',' << r.level << ',' << format_double(r.dt) << ',' << r.nx << ',' << r.ny << ','
      << format_double(r.difference) << ',' << format_double(r.ratio) << '\n';
  return o.str();
}

}  // namespace rfrac
