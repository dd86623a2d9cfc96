#pragma once

// Mixed-dimensional Darcy problem, two-point flux approximation.
//
// Unknown layout: matrix cell c -> c, fracture cell g -> num_cells + g.
// Per matrix cell the discrete balance reads
//   sum_faces outflux + sum_couplings flux into fractures = (f - dphi/dt) vol
// and per fracture cell
//   tangential outflux - exchange from both sides = (eps f_gamma - deps/dt) len.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rfrac/bc.hpp"
#include "rfrac/error.hpp"
#include "rfrac/linalg.hpp"
#include "rfrac/mesh.hpp"

namespace rfrac {

/// Diagonal (axis-aligned) tensor per matrix cell.
struct CellTensor {
  std::vector<double> x, y;

  CellTensor() = default;
  explicit CellTensor(std::vector<double> iso) : x(iso), y(std::move(iso)) {}
  CellTensor(std::vector<double> xx, std::vector<double> yy) : x(std::move(xx)), y(std::move(yy)) {}
  static CellTensor uniform(std::size_t n, double v) { return CellTensor(std::vector<double>(n, v)); }

  double along(Axis a, int c) const noexcept {
    return (a == Axis::x ? x : y)[static_cast<std::size_t>(c)];
  }
  friend bool operator==(const CellTensor&, const CellTensor&) = default;
};

/// Series conductance of two half-cells; zero if either side is closed.
inline double harmonic_conductance(double h1, double c1, double h2, double c2) noexcept {
  if (!(c1 > 0.0) || !(c2 > 0.0)) return 0.0;
  return 1.0 / (h1 / c1 + h2 / c2);
}

/// Exchange flux from the matrix side into the fracture through one side of
/// the interface, interface resistance only: (2 kappa / eps)(p_side - p_gamma).
inline double coupling_flux(double p_side, double p_gamma, double kappa, double eps) noexcept {
  if (!(eps > 0.0)) return 0.0;
  return 2.0 * kappa / eps * (p_side - p_gamma);
}

/// Per-side coupling transmissibility: matrix half cell in series with the
/// interface conductance 2 kappa / eps, times the interface length.
inline double coupling_transmissibility(double length, double half, double k_matrix,
                                        double kappa, double eps) noexcept {
  if (!(eps > 0.0) || !(kappa > 0.0) || !(k_matrix > 0.0)) return 0.0;
  return length / (half / k_matrix + eps / (2.0 * kappa));
}

struct FlowInputs {
  std::span<const double> phi_old, phi_new;  // matrix porosity before/after
  std::span<const double> eps_old, eps_new;  // fracture aperture before/after
  const CellTensor* k = nullptr;             // matrix permeability
  std::span<const double> k_gamma, kappa;    // fracture permeabilities
  double dt = 1.0;
  const BcSet* bc = nullptr;
  std::span<const double> f;        // matrix source, empty = 0
  std::span<const double> f_gamma;  // fracture source, empty = 0
};

struct TipBc {
  BcKind kind = BcKind::noflow;
  double trans = 0.0;  // pressure tips
  double value = 0.0;  // pressure tips
  double flux = 0.0;   // outflux tips, outward
};

struct FlowSystem {
  int num_cells = 0;
  CsrMatrix matrix;
  std::vector<double> rhs;
  /// Sources and storage per unknown, before pinning: (f - dphi/dt) vol, ...
  std::vector<double> source;

  std::vector<double> face_trans;   // interior cell-cell or Dirichlet boundary
  std::vector<double> face_value;   // boundary pressure
  std::vector<double> face_flux;    // prescribed outward flux on outflux faces
  std::vector<BcKind> face_kind;    // boundary kind; noflow on interior faces
  std::vector<std::array<double, 2>> coupling_trans;  // [minus, plus]
  std::vector<std::vector<double>> tangential_trans;  // per fracture, n - 1 entries
  std::vector<std::array<TipBc, 2>> tips;

  /// Unknowns with no conductance at all; held at the guess value.
  std::vector<int> pinned;
  /// Floating (no Dirichlet) connected components with more than one unknown.
  std::vector<std::vector<int>> floating;
  double dropped_storage = 0.0;
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int a) {
    while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

inline double at_or(std::span<const double> v, int k, double fallback) noexcept {
  return v.empty() ? fallback : v[static_cast<std::size_t>(k)];
}

}  // namespace detail

inline FlowSystem assemble_flow(const MixedDimMesh& mesh, const FlowInputs& in) {
  const MatrixGrid& g = mesh.grid();
  const int nc = mesh.num_cells();
  const int nf = mesh.num_fracture_cells();
  const int n = nc + nf;
  if (in.k == nullptr || in.bc == nullptr) throw DomainError("assemble_flow: missing inputs");
  if (!(in.dt > 0.0)) throw DomainError("assemble_flow: dt must be positive");
  if (in.phi_old.size() != static_cast<std::size_t>(nc) || in.phi_new.size() != in.phi_old.size() ||
      in.k->x.size() != static_cast<std::size_t>(nc) ||
      in.eps_old.size() != static_cast<std::size_t>(nf) || in.eps_new.size() != in.eps_old.size() ||
      in.k_gamma.size() != static_cast<std::size_t>(nf) || in.kappa.size() != in.k_gamma.size())
    throw DomainError("assemble_flow: field sizes do not match the mesh");

  FlowSystem sys;
  sys.num_cells = nc;
  sys.rhs.assign(static_cast<std::size_t>(n), 0.0);
  sys.source.assign(static_cast<std::size_t>(n), 0.0);
  const auto nfaces = static_cast<std::size_t>(g.num_faces());
  sys.face_trans.assign(nfaces, 0.0);
  sys.face_value.assign(nfaces, 0.0);
  sys.face_flux.assign(nfaces, 0.0);
  sys.face_kind.assign(nfaces, BcKind::noflow);

  SparseBuilder a(n);
  detail::UnionFind components(n);
  std::vector<char> anchored(static_cast<std::size_t>(n), 0);
  for (int u = 0; u < n; ++u) a.add(u, u, 0.0);  // keep the diagonal structurally present

  const CellTensor& k = *in.k;
  for (int fi = 0; fi < g.num_faces(); ++fi) {
    const Face& f = g.face(fi);
    const auto geo = face_geometry(mesh, fi);
    if (!f.is_boundary()) {
      if (mesh.hosted_fracture_cell(fi) != kNone) continue;
      const double t = f.area * harmonic_conductance(*geo.half_distances[0], k.along(f.normal, f.neg),
                                                     *geo.half_distances[1], k.along(f.normal, f.pos));
      sys.face_trans[fi] = t;
      if (t > 0.0) {
        a.add_conductance(f.neg, f.pos, t);
        components.unite(f.neg, f.pos);
      }
      continue;
    }
    const int c = f.boundary_cell();
    const EdgeBc& bc = (*in.bc)[*f.edge];
    sys.face_kind[fi] = bc.kind;
    if (bc.kind == BcKind::pressure) {
      const double half = *geo.half_distances[f.neg != kNone ? 0 : 1];
      const double kc = k.along(f.normal, c);
      const double t = kc > 0.0 ? f.area * kc / half : 0.0;
      sys.face_trans[fi] = t;
      sys.face_value[fi] = bc.pressure;
      a.add(c, c, t);
      sys.rhs[c] += t * bc.pressure;
      if (t > 0.0) anchored[c] = 1;
    } else if (bc.kind == BcKind::outflux) {
      sys.face_flux[fi] = bc.flux * f.area;
      sys.rhs[c] -= sys.face_flux[fi];
    }
  }

  sys.coupling_trans.resize(mesh.couplings().size());
  for (std::size_t e = 0; e < mesh.couplings().size(); ++e) {
    const CouplingEntry& ce = mesh.couplings()[e];
    const int gcell = ce.fracture_cell;
    const double eps = in.eps_new[gcell];
    const double kap = in.kappa[gcell];
    const int sides[2] = {ce.minus_cell, ce.plus_cell};
    for (int s = 0; s < 2; ++s) {
      const int m = sides[s];
      const double half = 0.5 * g.cell_size(m)[index(ce.normal)];
      const double t = coupling_transmissibility(ce.length, half, k.along(ce.normal, m), kap, eps);
      sys.coupling_trans[e][s] = t;
      if (t > 0.0) {
        a.add_conductance(m, nc + gcell, t);
        components.unite(m, nc + gcell);
      }
    }
  }

  sys.tangential_trans.resize(mesh.fractures().size());
  sys.tips.resize(mesh.fractures().size());
  for (std::size_t fr = 0; fr < mesh.fractures().size(); ++fr) {
    const FractureGrid& frac = mesh.fractures()[fr];
    auto cond = [&](int local) {
      const int gc = frac.offset + local;
      return in.eps_new[gc] * in.k_gamma[gc];
    };
    auto half = [&](int local) { return 0.5 * frac.cells[static_cast<std::size_t>(local)].length; };
    auto& tt = sys.tangential_trans[fr];
    tt.assign(static_cast<std::size_t>(std::max(frac.size() - 1, 0)), 0.0);
    for (int l = 0; l + 1 < frac.size(); ++l) {
      const double t = harmonic_conductance(half(l), cond(l), half(l + 1), cond(l + 1));
      tt[static_cast<std::size_t>(l)] = t;
      if (t > 0.0) {
        a.add_conductance(nc + frac.offset + l, nc + frac.offset + l + 1, t);
        components.unite(nc + frac.offset + l, nc + frac.offset + l + 1);
      }
    }
    for (int end = 0; end < 2; ++end) {
      const auto& tip = frac.tips[static_cast<std::size_t>(end)];
      TipBc& tb = sys.tips[fr][static_cast<std::size_t>(end)];
      if (!tip.edge) continue;  // interior tip: zero flux
      const int local = end == 0 ? 0 : frac.size() - 1;
      const int u = nc + frac.offset + local;
      const EdgeBc& bc = (*in.bc)[*tip.edge];
      tb.kind = bc.kind;
      if (bc.kind == BcKind::pressure) {
        const double c = cond(local);
        tb.trans = c > 0.0 ? c / half(local) : 0.0;
        tb.value = bc.tip_pressure();
        a.add(u, u, tb.trans);
        sys.rhs[u] += tb.trans * tb.value;
        if (tb.trans > 0.0) anchored[u] = 1;
      } else if (bc.kind == BcKind::outflux) {
        tb.flux = bc.tip_flux(in.eps_new[frac.offset + local]);
        sys.rhs[u] -= tb.flux;
      }
    }
  }

  for (int c = 0; c < nc; ++c) {
    const double src = (detail::at_or(in.f, c, 0.0) - (in.phi_new[c] - in.phi_old[c]) / in.dt) *
                       g.volume(c);
    sys.source[c] = src;
    sys.rhs[c] += src;
  }
  for (int gc = 0; gc < nf; ++gc) {
    const double len = mesh.fracture_cell(gc).length;
    const double src = (in.eps_new[gc] * detail::at_or(in.f_gamma, gc, 0.0) -
                        (in.eps_new[gc] - in.eps_old[gc]) / in.dt) * len;
    sys.source[nc + gc] = src;
    sys.rhs[nc + gc] += src;
  }

  sys.matrix = a.build();

  // Degenerate unknowns and floating components.
  const auto diag = sys.matrix.diagonal();
  std::vector<std::vector<int>> members(static_cast<std::size_t>(n));
  std::vector<char> comp_anchored(static_cast<std::size_t>(n), 0);
  for (int u = 0; u < n; ++u) {
    const int r = components.find(u);
    members[r].push_back(u);
    if (anchored[u]) comp_anchored[r] = 1;
  }
  std::vector<std::vector<int>> pinned_rows;
  for (int r = 0; r < n; ++r) {
    const auto& mem = members[r];
    if (mem.empty() || comp_anchored[r]) continue;
    if (mem.size() == 1 && diag[mem[0]] == 0.0) {
      sys.pinned.push_back(mem[0]);
      sys.dropped_storage += sys.rhs[mem[0]];
      continue;
    }
    double net = 0.0, scale = 0.0;
    for (int u : mem) {
      net += sys.rhs[u];
      scale += std::abs(sys.rhs[u]);
    }
    if (std::abs(net) > 1e-10 * scale && std::abs(net) > 1e-300)
      throw SingularSystem("flow system has a no-flow component with net source " +
                               std::to_string(net) + " (incompatible data)",
                           net);
    // exact compatibility for the Krylov solve
    const double shift = net / static_cast<double>(mem.size());
    for (int u : mem) sys.rhs[u] -= shift;
    sys.floating.push_back(mem);
  }
  if (!sys.pinned.empty()) {
    // identity rows for isolated unknowns
    SparseBuilder b(n);
    const auto& rp = sys.matrix.row_ptr();
    const auto& cols = sys.matrix.cols();
    const auto& vals = sys.matrix.values();
    std::vector<char> is_pinned(static_cast<std::size_t>(n), 0);
    for (int u : sys.pinned) is_pinned[u] = 1;
    for (int r = 0; r < n; ++r) {
      if (is_pinned[r]) {
        b.add(r, r, 1.0);
        continue;
      }
      for (int q = rp[r]; q < rp[r + 1]; ++q) b.add(r, cols[q], vals[q]);
    }
    sys.matrix = b.build();
    for (int u : sys.pinned) sys.rhs[u] = 0.0;
  }
  return sys;
}

struct FlowState {
  std::vector<double> p;        // matrix cell pressures
  std::vector<double> p_gamma;  // fracture cell pressures
  /// Matrix face fluxes along +normal (zero on fracture-hosting faces).
  std::vector<double> flux;
  /// Per fracture, fluxes along +tangent at the n + 1 fracture faces (tips included).
  std::vector<std::vector<double>> flux_gamma;
  /// Per coupling entry, exchange flux into the fracture from [minus, plus] side.
  std::vector<std::array<double, 2>> flux_coupling;
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<int> pinned;
  double dropped_storage = 0.0;

  double pressure(int unknown) const noexcept {
    const auto nc = static_cast<int>(p.size());
    return unknown < nc ? p[static_cast<std::size_t>(unknown)]
                        : p_gamma[static_cast<std::size_t>(unknown - nc)];
  }
};

/// Outward flux of a boundary face.
inline double boundary_outflux(const Face& f, double flux) noexcept { return f.outward_sign() * flux; }

inline FlowState solve_flow(const MixedDimMesh& mesh, const FlowSystem& sys,
                            const SolverOptions& opt = {},
                            std::span<const double> guess = {}) {
  const int nc = mesh.num_cells();
  const int n = mesh.num_unknowns();
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  if (guess.size() == x.size()) std::copy(guess.begin(), guess.end(), x.begin());
  std::vector<double> rhs = sys.rhs;
  for (int u : sys.pinned) rhs[u] = x[u];

  const auto rep = pcg(sys.matrix, rhs, x, opt);
  for (const auto& comp : sys.floating) {
    double mean = 0.0;
    for (int u : comp) mean += x[u];
    mean /= static_cast<double>(comp.size());
    for (int u : comp) x[u] -= mean;
  }

  FlowState st;
  st.iterations = rep.iterations;
  st.relative_residual = rep.relative_residual;
  st.pinned = sys.pinned;
  st.dropped_storage = sys.dropped_storage;
  st.p.assign(x.begin(), x.begin() + nc);
  st.p_gamma.assign(x.begin() + nc, x.end());

  const MatrixGrid& g = mesh.grid();
  st.flux.assign(static_cast<std::size_t>(g.num_faces()), 0.0);
  for (int fi = 0; fi < g.num_faces(); ++fi) {
    const Face& f = g.face(fi);
    if (!f.is_boundary()) {
      st.flux[fi] = sys.face_trans[fi] * (x[f.neg] - x[f.pos]);
      continue;
    }
    const int c = f.boundary_cell();
    double out = 0.0;
    if (sys.face_kind[fi] == BcKind::pressure) out = sys.face_trans[fi] * (x[c] - sys.face_value[fi]);
    if (sys.face_kind[fi] == BcKind::outflux) out = sys.face_flux[fi];
    st.flux[fi] = f.outward_sign() * out;
  }

  st.flux_coupling.resize(mesh.couplings().size());
  for (std::size_t e = 0; e < mesh.couplings().size(); ++e) {
    const auto& ce = mesh.couplings()[e];
    const double pg = x[nc + ce.fracture_cell];
    st.flux_coupling[e] = {sys.coupling_trans[e][0] * (x[ce.minus_cell] - pg),
                           sys.coupling_trans[e][1] * (x[ce.plus_cell] - pg)};
  }

  st.flux_gamma.resize(mesh.fractures().size());
  for (std::size_t fr = 0; fr < mesh.fractures().size(); ++fr) {
    const auto& frac = mesh.fractures()[fr];
    auto& q = st.flux_gamma[fr];
    q.assign(static_cast<std::size_t>(frac.size()) + 1, 0.0);
    const int base = nc + frac.offset;
    for (int l = 0; l + 1 < frac.size(); ++l)
      q[l + 1] = sys.tangential_trans[fr][l] * (x[base + l] - x[base + l + 1]);
    for (int end = 0; end < 2; ++end) {
      const TipBc& tb = sys.tips[fr][end];
      const int u = base + (end == 0 ? 0 : frac.size() - 1);
      double out = 0.0;
      if (tb.kind == BcKind::pressure) out = tb.trans * (x[u] - tb.value);
      if (tb.kind == BcKind::outflux) out = tb.flux;
      if (end == 0)
        q.front() = -out;
      else
        q.back() = out;
    }
  }
  return st;
}

/// Per-unknown discrete balance residual: outflow - source.
inline std::vector<double> flow_residuals(const MixedDimMesh& mesh, const FlowSystem& sys,
                                          const FlowState& st) {
  const MatrixGrid& g = mesh.grid();
  const int nc = mesh.num_cells();
  std::vector<double> res(static_cast<std::size_t>(mesh.num_unknowns()), 0.0);
  for (int fi = 0; fi < g.num_faces(); ++fi) {
    const Face& f = g.face(fi);
    if (f.neg != kNone) res[f.neg] += st.flux[fi];
    if (f.pos != kNone) res[f.pos] -= st.flux[fi];
  }
  for (std::size_t e = 0; e < mesh.couplings().size(); ++e) {
    const auto& ce = mesh.couplings()[e];
    res[ce.minus_cell] += st.flux_coupling[e][0];
    res[ce.plus_cell] += st.flux_coupling[e][1];
    res[nc + ce.fracture_cell] -= st.flux_coupling[e][0] + st.flux_coupling[e][1];
  }
  for (std::size_t fr = 0; fr < mesh.fractures().size(); ++fr) {
    const auto& frac = mesh.fractures()[fr];
    const auto& q = st.flux_gamma[fr];
    for (int l = 0; l < frac.size(); ++l) res[nc + frac.offset + l] += q[l + 1] - q[l];
  }
  for (std::size_t u = 0; u < res.size(); ++u) res[u] -= sys.source[u];
  for (int u : sys.pinned) res[u] = 0.0;
  return res;
}

struct FlowBalance {
  double inflow = 0.0;   // through boundary faces and tips
  double outflow = 0.0;
  double source = 0.0;   // sum of f and storage terms, excluding pinned unknowns
};

inline FlowBalance flow_balance(const MixedDimMesh& mesh, const FlowSystem& sys,
                                const FlowState& st) {
  FlowBalance b;
  const MatrixGrid& g = mesh.grid();
  for (int fi = 0; fi < g.num_faces(); ++fi) {
    const Face& f = g.face(fi);
    if (!f.is_boundary()) continue;
    const double out = boundary_outflux(f, st.flux[fi]);
    (out > 0.0 ? b.outflow : b.inflow) += std::abs(out);
  }
  for (const auto& q : st.flux_gamma) {
    if (q.empty()) continue;
    const double out0 = -q.front(), out1 = q.back();
    (out0 > 0.0 ? b.outflow : b.inflow) += std::abs(out0);
    (out1 > 0.0 ? b.outflow : b.inflow) += std::abs(out1);
  }
  std::vector<char> pinned(sys.source.size(), 0);
  for (int u : sys.pinned) pinned[u] = 1;
  for (std::size_t u = 0; u < sys.source.size(); ++u)
    if (!pinned[u]) b.source += sys.source[u];
  return b;
}

/// Total tangential throughflow of a fracture: mean |q_gamma| over its faces.
inline double fracture_throughflow(const FlowState& st, std::size_t fracture) {
  const auto& q = st.flux_gamma.at(fracture);
  if (q.empty()) return 0.0;
  double s = 0.0;
  for (double v : q) s += std::abs(v);
  return s / static_cast<double>(q.size());
}

}  // namespace rfrac
