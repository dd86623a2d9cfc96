#pragma once

// Segregated time stepping: flow -> transport -> reaction -> porosity and
// aperture -> permeability, with an optional fixed-point loop over the step.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rfrac/bc.hpp"
#include "rfrac/chemistry.hpp"
#include "rfrac/config.hpp"
#include "rfrac/error.hpp"
#include "rfrac/flow.hpp"
#include "rfrac/linalg.hpp"
#include "rfrac/mesh.hpp"
#include "rfrac/transport.hpp"

namespace rfrac {

/// Matrix material. `law` supplies phi_ref, k_ref (x direction), alpha and
/// eta; the y permeability is k_y_scale times the x value.
struct MatrixMaterial {
  ChemParams law;
  double k_y_scale = 1.0;
  double d_x = 0.0;
  double d_y = 0.0;

  static MatrixMaterial from(const ChemParams& p) { return {p, 1.0, p.d, p.d}; }
};

struct Problem {
  MixedDimMesh mesh;
  ChemParams chem;  // reaction, fracture closures, fracture diffusivities
  std::vector<MatrixMaterial> materials;
  std::vector<int> material_of_cell;
  BcSet bc;
  std::vector<double> f, f_gamma;
  double clog_fraction = 1e-6;
  bool fixed_point = false;
  int fixed_point_max_iter = 50;
  double fixed_point_tol = 1e-10;
  CflMode cfl = CflMode::off;
  SolverOptions flow_solver{1e-12, 10000};
  SolverOptions transport_solver{1e-12, 10000};

  const MatrixMaterial& material(int cell) const {
    return materials[static_cast<std::size_t>(material_of_cell[static_cast<std::size_t>(cell)])];
  }
};

struct InitialFields {
  std::vector<double> u, w, u_gamma, w_gamma;
};

inline Problem make_problem(const Config& c) {
  Problem pb{build_mesh(c), c.chem, {MatrixMaterial::from(c.chem)}, {}, c.bc, {}, {}};
  pb.material_of_cell.assign(static_cast<std::size_t>(pb.mesh.num_cells()), 0);
  pb.f.assign(static_cast<std::size_t>(pb.mesh.num_cells()), c.f);
  pb.f_gamma.assign(static_cast<std::size_t>(pb.mesh.num_fracture_cells()), c.f_gamma);
  pb.clog_fraction = c.clog_fraction;
  pb.fixed_point = c.time.fixed_point;
  pb.fixed_point_max_iter = c.time.fixed_point_max_iter;
  pb.fixed_point_tol = c.time.fixed_point_tol;
  pb.cfl = c.cfl;
  pb.flow_solver = c.flow_solver;
  pb.transport_solver = c.transport_solver;
  return pb;
}

/// Constant initial data with box overrides (by cell centre).
inline InitialFields make_initial_fields(const MixedDimMesh& mesh, const InitialData& d) {
  const auto nc = static_cast<std::size_t>(mesh.num_cells());
  const auto nf = static_cast<std::size_t>(mesh.num_fracture_cells());
  InitialFields init{std::vector<double>(nc, d.u), std::vector<double>(nc, d.w),
                     std::vector<double>(nf, d.u_gamma), std::vector<double>(nf, d.w_gamma)};
  for (const auto& r : d.regions) {
    for (std::size_t c = 0; c < nc; ++c) {
      const Vec2 x = mesh.grid().center(static_cast<int>(c));
      if (x[0] < r.x0 || x[0] > r.x1 || x[1] < r.y0 || x[1] > r.y1) continue;
      if (r.u) init.u[c] = *r.u;
      if (r.w) init.w[c] = *r.w;
    }
  }
  return init;
}

struct MassTotals {
  double u = 0.0;  // sum phi u vol + sum eps u_gamma len
  double w = 0.0;
  double total() const noexcept { return u + w; }
};

/// Cumulative conservation record of a run.
struct LedgerRecord {
  double u_mass = 0.0;
  double w_mass = 0.0;
  double initial_mass = 0.0;
  double boundary_in = 0.0;     // time-integrated inflow
  double boundary_out = 0.0;    // time-integrated outflow
  double storage_change = 0.0;  // accumulated (phi' - phi)(u + w) vol terms
  double closure = 0.0;         // M - M0 - (in - out) - storage_change
  double relative_closure = 0.0;
  double max_step_relative = 0.0;  // worst per-step relative closure so far
};

struct Diagnostics {
  double min_phi = 0.0;
  double min_eps = 0.0;
  int flow_iterations = 0;
  int transport_iterations = 0;
  int fixed_point_iterations = 0;
  double fixed_point_residual = 0.0;
  double cfl_bound = std::numeric_limits<double>::infinity();
  std::vector<int> clogged_cells;
  std::vector<int> clogged_fracture_cells;
  std::vector<int> pinned_unknowns;
  double dropped_storage = 0.0;  // cumulative fluid storage lost on pinned unknowns
  std::vector<std::string> warnings;
};

struct SimState {
  double time = 0.0;
  int step = 0;
  double last_dt = 0.0;
  std::vector<double> phi, phi_prev;
  std::vector<double> eps, eps_prev;
  CellTensor k;
  std::vector<double> k_gamma, kappa;
  FlowState flow;
  TransportState transport;
  Diagnostics diag;
  LedgerRecord ledger;
};

inline MassTotals mass_totals(const MixedDimMesh& mesh, std::span<const double> phi,
                              std::span<const double> eps, const TransportState& ts) {
  MassTotals m;
  const MatrixGrid& g = mesh.grid();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double s = phi[c] * g.volume(c);
    m.u += s * ts.u[c];
    m.w += s * ts.w[c];
  }
  for (int gc = 0; gc < mesh.num_fracture_cells(); ++gc) {
    const double s = eps[gc] * mesh.fracture_cell(gc).length;
    m.u += s * ts.u_gamma[gc];
    m.w += s * ts.w_gamma[gc];
  }
  return m;
}

inline MassTotals mass_totals(const MixedDimMesh& mesh, const SimState& s) {
  return mass_totals(mesh, s.phi, s.eps, s.transport);
}

namespace detail {

inline void update_permeability(const Problem& pb, SimState& s) {
  const auto nc = static_cast<std::size_t>(pb.mesh.num_cells());
  s.k.x.resize(nc);
  s.k.y.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& m = pb.material(static_cast<int>(c));
    s.k.x[c] = matrix_permeability(s.phi[c], m.law);
    s.k.y[c] = m.k_y_scale * s.k.x[c];
  }
  const auto nf = s.eps.size();
  s.k_gamma.resize(nf);
  s.kappa.resize(nf);
  for (std::size_t g = 0; g < nf; ++g) {
    const auto kp = fracture_permeability(s.eps[g], pb.chem);
    s.k_gamma[g] = kp.k_gamma;
    s.kappa[g] = kp.kappa;
  }
}

inline void update_diagnostics(SimState& s) {
  auto& d = s.diag;
  d.min_phi = s.phi.empty() ? 0.0 : *std::min_element(s.phi.begin(), s.phi.end());
  d.min_eps = s.eps.empty() ? 0.0 : *std::min_element(s.eps.begin(), s.eps.end());
  d.clogged_cells.clear();
  d.clogged_fracture_cells.clear();
  for (std::size_t c = 0; c < s.phi.size(); ++c)
    if (s.phi[c] <= 0.0) d.clogged_cells.push_back(static_cast<int>(c));
  for (std::size_t g = 0; g < s.eps.size(); ++g)
    if (s.eps[g] <= 0.0) d.clogged_fracture_cells.push_back(static_cast<int>(g));
}

inline CellTensor diffusivity_tensor(const Problem& pb) {
  const auto nc = static_cast<std::size_t>(pb.mesh.num_cells());
  CellTensor d{std::vector<double>(nc), std::vector<double>(nc)};
  for (std::size_t c = 0; c < nc; ++c) {
    d.x[c] = pb.material(static_cast<int>(c)).d_x;
    d.y[c] = pb.material(static_cast<int>(c)).d_y;
  }
  return d;
}

inline FlowState flow_solve(const Problem& pb, std::span<const double> phi_old,
                            std::span<const double> phi_new, std::span<const double> eps_old,
                            std::span<const double> eps_new, const CellTensor& k,
                            std::span<const double> k_gamma, std::span<const double> kappa, double dt,
                            const FlowState* guess) {
  FlowInputs in{phi_old, phi_new, eps_old, eps_new, &k, k_gamma, kappa, dt, &pb.bc, pb.f, pb.f_gamma};
  const FlowSystem sys = assemble_flow(pb.mesh, in);
  std::vector<double> x0;
  if (guess != nullptr && !guess->p.empty()) {
    x0 = guess->p;
    x0.insert(x0.end(), guess->p_gamma.begin(), guess->p_gamma.end());
  }
  return solve_flow(pb.mesh, sys, pb.flow_solver, x0);
}

inline double relative_change(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff = std::max(diff, std::abs(a[k] - b[k]));
    scale = std::max(scale, std::abs(a[k]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

/// Clog floor: the exponential laws only approach zero, so values below a
/// fraction of the reference are snapped to exactly zero.
inline double apply_floor(double v, double ref, double fraction) noexcept {
  return v < fraction * ref ? 0.0 : v;
}

}  // namespace detail

inline SimState initial_state(const Problem& pb, const InitialFields& init) {
  const auto nc = static_cast<std::size_t>(pb.mesh.num_cells());
  const auto nf = static_cast<std::size_t>(pb.mesh.num_fracture_cells());
  if (init.u.size() != nc || init.w.size() != nc || init.u_gamma.size() != nf || init.w_gamma.size() != nf)
    throw DomainError("initial_state: initial fields do not match the mesh");
  if (pb.material_of_cell.size() != nc) throw DomainError("initial_state: material map does not match the mesh");
  SimState s;
  s.phi.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) s.phi[c] = pb.material(static_cast<int>(c)).law.phi_ref;
  s.eps.assign(nf, pb.chem.eps_ref);
  s.phi_prev = s.phi;
  s.eps_prev = s.eps;
  detail::update_permeability(pb, s);
  s.transport.u = init.u;
  s.transport.w = init.w;
  s.transport.u_gamma = init.u_gamma;
  s.transport.w_gamma = init.w_gamma;
  s.transport.chi.assign(static_cast<std::size_t>(pb.mesh.grid().num_faces()), 0.0);
  s.transport.chi_coupling.assign(pb.mesh.couplings().size(), {0.0, 0.0});
  for (const auto& fr : pb.mesh.fractures())
    s.transport.chi_gamma.emplace_back(static_cast<std::size_t>(fr.size()) + 1, 0.0);
  // quasi-static pressure for the initial output
  s.flow = detail::flow_solve(pb, s.phi, s.phi, s.eps, s.eps, s.k, s.k_gamma, s.kappa, 1.0, nullptr);
  s.diag.flow_iterations = s.flow.iterations;
  s.diag.pinned_unknowns = s.flow.pinned;
  detail::update_diagnostics(s);
  const auto m = mass_totals(pb.mesh, s);
  s.ledger.u_mass = m.u;
  s.ledger.w_mass = m.w;
  s.ledger.initial_mass = m.total();
  return s;
}

struct StepResult {
  FlowState flow;
  TransportState transport;
  std::vector<double> phi, eps;
  double storage_change = 0.0;
  double cfl_bound = std::numeric_limits<double>::infinity();
};

namespace detail {

/// Steps (1)-(5) for given flow storage terms and permeabilities.
inline StepResult segregated_pass(const Problem& pb, const SimState& s, double dt,
                                  std::span<const double> phi_old, std::span<const double> phi_new,
                                  std::span<const double> eps_old, std::span<const double> eps_new,
                                  double flow_dt, const CellTensor& k, std::span<const double> k_gamma,
                                  std::span<const double> kappa, const CellTensor& dif) {
  StepResult r;
  r.flow = flow_solve(pb, phi_old, phi_new, eps_old, eps_new, k, k_gamma, kappa, flow_dt, &s.flow);

  // Transport storage on the flow's (old, new) pair, rescaled to this step's
  // length, so the volume source in the flow carries the local concentration.
  const double scale = dt / flow_dt;
  auto old_coefficients = [scale](std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(b.size());
    for (std::size_t k = 0; k < b.size(); ++k) out[k] = std::max(b[k] - (b[k] - a[k]) * scale, 0.0);
    return out;
  };
  const std::vector<double> t_phi_old = old_coefficients(phi_old, phi_new);
  const std::vector<double> t_eps_old = old_coefficients(eps_old, eps_new);

  TransportInputs tin{phi_new, eps_new, t_phi_old, t_eps_old, &dif, pb.chem.d_gamma, pb.chem.delta, dt, &pb.bc};
  if (pb.cfl != CflMode::off) r.cfl_bound = cfl_bound(pb.mesh, r.flow, tin);
  TransportState ts = transport_step(pb.mesh, r.flow, s.transport, tin, pb.transport_solver);
  TransportState reacted = precipitate_step(ts, s.phi, s.eps, pb.chem, dt);

  const auto nc = s.phi.size();
  const MatrixGrid& g = pb.mesh.grid();
  std::vector<char> frozen(nc + s.eps.size(), 0);
  for (int u : ts.frozen) frozen[static_cast<std::size_t>(u)] = 1;
  r.phi.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& law = pb.material(static_cast<int>(c)).law;
    const double dw = reacted.w[c] - s.transport.w[c];
    r.phi[c] = detail::apply_floor(porosity_update(s.phi[c], dw, law), law.phi_ref, pb.clog_fraction);
    const double t_old = frozen[c] ? phi_new[c] : t_phi_old[c];
    r.storage_change += g.volume(static_cast<int>(c)) *
                        ((r.phi[c] - phi_new[c]) * ts.u[c] + (r.phi[c] - s.phi[c]) * s.transport.w[c] +
                         (t_old - s.phi[c]) * s.transport.u[c]);
  }
  r.eps.resize(s.eps.size());
  for (std::size_t gc = 0; gc < s.eps.size(); ++gc) {
    const double dw = reacted.w_gamma[gc] - s.transport.w_gamma[gc];
    r.eps[gc] = detail::apply_floor(aperture_update(s.eps[gc], dw, pb.chem), pb.chem.eps_ref, pb.clog_fraction);
    const double t_old = frozen[nc + gc] ? eps_new[gc] : t_eps_old[gc];
    r.storage_change += pb.mesh.fracture_cell(static_cast<int>(gc)).length *
                        ((r.eps[gc] - eps_new[gc]) * ts.u_gamma[gc] + (r.eps[gc] - s.eps[gc]) * s.transport.w_gamma[gc] +
                         (t_old - s.eps[gc]) * s.transport.u_gamma[gc]);
  }
  reacted.chi = std::move(ts.chi);
  reacted.chi_gamma = std::move(ts.chi_gamma);
  reacted.chi_coupling = std::move(ts.chi_coupling);
  r.transport = std::move(reacted);
  return r;
}

}  // namespace detail

/// One time step of size dt.
inline SimState advance(const Problem& pb, const SimState& s, double dt) {
  if (!(dt > 0.0)) throw DomainError("advance: dt must be positive");
  const CellTensor dif = detail::diffusivity_tensor(pb);
  StepResult r;
  int fp_iterations = 0;
  double fp_residual = 0.0;

  if (!pb.fixed_point) {
    // storage terms lag one step behind the chemistry
    const double flow_dt = s.last_dt > 0.0 ? s.last_dt : dt;
    r = detail::segregated_pass(pb, s, dt, s.phi_prev, s.phi, s.eps_prev, s.eps, flow_dt, s.k, s.k_gamma,
                                s.kappa, dif);
  } else {
    std::vector<double> phi_guess = s.phi, eps_guess = s.eps;
    SimState probe;  // holds permeabilities of the current guess
    probe.phi = phi_guess;
    probe.eps = eps_guess;
    probe.k = s.k;
    probe.k_gamma = s.k_gamma;
    probe.kappa = s.kappa;
    std::vector<double> prev_u, prev_p;
    bool converged = false;
    for (int m = 0; m < pb.fixed_point_max_iter; ++m) {
      r = detail::segregated_pass(pb, s, dt, s.phi, phi_guess, s.eps, eps_guess, dt, probe.k, probe.k_gamma,
                                  probe.kappa, dif);
      ++fp_iterations;
      std::vector<double> u = r.transport.u;
      u.insert(u.end(), r.transport.u_gamma.begin(), r.transport.u_gamma.end());
      std::vector<double> p = r.flow.p;
      p.insert(p.end(), r.flow.p_gamma.begin(), r.flow.p_gamma.end());
      if (m > 0) {
        fp_residual = std::max(detail::relative_change(u, prev_u), detail::relative_change(p, prev_p));
        if (fp_residual < pb.fixed_point_tol) {
          converged = true;
          break;
        }
      }
      prev_u = std::move(u);
      prev_p = std::move(p);
      phi_guess = r.phi;
      eps_guess = r.eps;
      probe.phi = phi_guess;
      probe.eps = eps_guess;
      detail::update_permeability(pb, probe);
    }
    if (!converged)
      throw FixedPointError("fixed-point iteration did not converge in " +
                                std::to_string(pb.fixed_point_max_iter) + " iterations (last change " +
                                format_double(fp_residual) + ")",
                            fp_residual);
  }

  SimState n;
  n.time = s.time + dt;
  n.step = s.step + 1;
  n.last_dt = dt;
  n.phi_prev = s.phi;
  n.eps_prev = s.eps;
  n.phi = std::move(r.phi);
  n.eps = std::move(r.eps);
  detail::update_permeability(pb, n);
  n.flow = std::move(r.flow);
  n.transport = std::move(r.transport);

  n.diag = s.diag;
  n.diag.flow_iterations = n.flow.iterations;
  n.diag.transport_iterations = n.transport.iterations;
  n.diag.fixed_point_iterations = fp_iterations;
  n.diag.fixed_point_residual = fp_residual;
  n.diag.pinned_unknowns = n.flow.pinned;
  n.diag.dropped_storage += n.flow.dropped_storage * dt;
  n.diag.cfl_bound = r.cfl_bound;
  if (pb.cfl != CflMode::off && dt > r.cfl_bound) {
    const std::string msg = "step " + std::to_string(n.step) + ": dt " + format_double(dt) +
                            " exceeds the CFL bound " + format_double(r.cfl_bound);
    if (pb.cfl == CflMode::enforce) throw ConfigError(msg);
    n.diag.warnings.push_back(msg);
  }
  detail::update_diagnostics(n);

  // mass ledger
  const auto before = mass_totals(pb.mesh, s);
  const auto after = mass_totals(pb.mesh, n);
  LedgerRecord& L = n.ledger;
  L = s.ledger;
  L.u_mass = after.u;
  L.w_mass = after.w;
  const double in = n.transport.boundary_in * dt, out = n.transport.boundary_out * dt;
  L.boundary_in += in;
  L.boundary_out += out;
  L.storage_change += r.storage_change;
  const double step_closure = after.total() - before.total() - (in - out) - r.storage_change;
  const double step_scale =
      std::max({std::abs(before.total()), std::abs(after.total()), in, out, std::abs(r.storage_change)});
  L.max_step_relative =
      std::max(L.max_step_relative, step_scale > 0.0 ? std::abs(step_closure) / step_scale : 0.0);
  L.closure = after.total() - L.initial_mass - (L.boundary_in - L.boundary_out) - L.storage_change;
  const double scale = std::max({std::abs(L.initial_mass), std::abs(after.total()), L.boundary_in,
                                 L.boundary_out, std::abs(L.storage_change)});
  L.relative_closure = scale > 0.0 ? std::abs(L.closure) / scale : 0.0;
  return n;
}

/// Fixed-dt schedule: ceil(t_end / dt) steps, the last one shortened.
inline std::vector<double> step_sizes(const TimeControls& t) {
  std::vector<double> out;
  const int n = t.num_steps();
  for (int k = 0; k < n; ++k) {
    const double t0 = k * t.dt;
    out.push_back(std::min(t.dt, t.t_end - t0));
  }
  return out;
}

}  // namespace rfrac
