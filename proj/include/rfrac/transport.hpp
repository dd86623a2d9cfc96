#pragma once

// Implicit upwind / TPFA solute transport on the mixed-dimensional grid and
// the pointwise precipitate update.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rfrac/bc.hpp"
#include "rfrac/chemistry.hpp"
#include "rfrac/error.hpp"
#include "rfrac/flow.hpp"
#include "rfrac/linalg.hpp"
#include "rfrac/mesh.hpp"

namespace rfrac {

inline double upwind_value(double q_n, double upstream, double downstream) noexcept {
  if (q_n > 0.0) return upstream;
  if (q_n < 0.0) return downstream;
  return 0.5 * (upstream + downstream);
}

struct TransportState {
  std::vector<double> u, w;              // matrix solute and precipitate
  std::vector<double> u_gamma, w_gamma;  // fracture counterparts
  /// Total (advective + diffusive) solute flux per matrix face along +normal.
  std::vector<double> chi;
  /// Per fracture, total tangential flux at the n + 1 fracture faces.
  std::vector<std::vector<double>> chi_gamma;
  /// Per coupling entry, total flux into the fracture from [minus, plus].
  std::vector<std::array<double, 2>> chi_coupling;
  double boundary_in = 0.0;   // inflow rate over the last step
  double boundary_out = 0.0;  // outflow rate over the last step
  int iterations = 0;
  std::vector<int> frozen;  // unknowns without storage or connections
};

struct TransportInputs {
  std::span<const double> phi;          // matrix porosity
  std::span<const double> eps;          // fracture aperture
  /// Storage coefficients applied to the old values; empty means phi / eps.
  /// They differ when the flow carries a volume source from a changing medium.
  std::span<const double> phi_old;
  std::span<const double> eps_old;
  const CellTensor* diffusivity = nullptr;
  double d_gamma = 0.0;
  double delta = 0.0;
  double dt = 1.0;
  const BcSet* bc = nullptr;
};

/// Two-point link between unknowns a and b (b == kNone: boundary). The total
/// flux from a to b is q+ u_a + q- u_b + D (u_a - u_b); boundary links use
/// `value` in place of u_b.
struct TransportLink {
  enum class Site : std::uint8_t { face, coupling_minus, coupling_plus, tangential, tip };
  Site site = Site::face;
  int where = 0;   // face index, coupling entry, or fracture*2+end for tips
  int sub = 0;     // tangential: face position along the fracture
  int a = kNone;
  int b = kNone;
  double q = 0.0;
  double d = 0.0;
  double value = 0.0;
};

struct TransportSystem {
  CsrMatrix matrix;
  std::vector<double> rhs;
  std::vector<double> storage;      // storage coefficient per unknown (phi vol, eps len)
  std::vector<double> storage_old;  // coefficient on the old value; equals storage when frozen
  std::vector<TransportLink> links;
  std::vector<int> frozen;
};

namespace detail {

inline std::vector<TransportLink> transport_links(const MixedDimMesh& mesh, const FlowState& flow,
                                                  const TransportInputs& in) {
  const MatrixGrid& g = mesh.grid();
  const int nc = mesh.num_cells();
  const CellTensor& dif = *in.diffusivity;
  std::vector<TransportLink> links;
  std::vector<std::string> problems;

  for (int fi = 0; fi < g.num_faces(); ++fi) {
    const Face& f = g.face(fi);
    const auto geo = face_geometry(mesh, fi);
    TransportLink l;
    l.site = TransportLink::Site::face;
    l.where = fi;
    if (!f.is_boundary()) {
      if (mesh.hosted_fracture_cell(fi) != kNone) continue;
      l.a = f.neg;
      l.b = f.pos;
      l.q = flow.flux[fi];
      l.d = f.area * harmonic_conductance(*geo.half_distances[0], in.phi[f.neg] * dif.along(f.normal, f.neg),
                                          *geo.half_distances[1], in.phi[f.pos] * dif.along(f.normal, f.pos));
      links.push_back(l);
      continue;
    }
    const int c = f.boundary_cell();
    const EdgeBc& bc = (*in.bc)[*f.edge];
    if (bc.kind == BcKind::noflow) continue;
    l.a = c;
    l.q = boundary_outflux(f, flow.flux[fi]);
    if (bc.kind == BcKind::pressure) {
      const double half = *geo.half_distances[f.neg != kNone ? 0 : 1];
      l.d = f.area * in.phi[c] * dif.along(f.normal, c) / half;
      l.value = bc.concentration;
    } else if (l.q < 0.0) {
      problems.push_back("transport: inflow through " + std::string(to_string(*f.edge)) +
                         " outflux boundary (face " + std::to_string(fi) +
                         ") has no prescribed concentration");
    }
    links.push_back(l);
  }

  for (std::size_t e = 0; e < mesh.couplings().size(); ++e) {
    const auto& ce = mesh.couplings()[e];
    const double eps = in.eps[ce.fracture_cell];
    const int sides[2] = {ce.minus_cell, ce.plus_cell};
    for (int s = 0; s < 2; ++s) {
      TransportLink l;
      l.site = s == 0 ? TransportLink::Site::coupling_minus : TransportLink::Site::coupling_plus;
      l.where = static_cast<int>(e);
      l.a = sides[s];
      l.b = nc + ce.fracture_cell;
      if (eps > 0.0) {
        l.q = flow.flux_coupling[e][s];
        const double cm = in.phi[l.a] * dif.along(ce.normal, l.a);
        const double half = 0.5 * g.cell_size(l.a)[index(ce.normal)];
        if (cm > 0.0 && in.delta > 0.0) l.d = ce.length / (half / cm + eps / (2.0 * in.delta));
      }
      links.push_back(l);
    }
  }

  for (std::size_t fr = 0; fr < mesh.fractures().size(); ++fr) {
    const auto& frac = mesh.fractures()[fr];
    const auto& q = flow.flux_gamma[fr];
    auto cond = [&](int l) { return in.eps[frac.offset + l] * in.d_gamma; };
    auto half = [&](int l) { return 0.5 * frac.cells[static_cast<std::size_t>(l)].length; };
    for (int l = 0; l + 1 < frac.size(); ++l) {
      TransportLink k;
      k.site = TransportLink::Site::tangential;
      k.where = static_cast<int>(fr);
      k.sub = l + 1;
      k.a = nc + frac.offset + l;
      k.b = k.a + 1;
      k.q = q[l + 1];
      k.d = harmonic_conductance(half(l), cond(l), half(l + 1), cond(l + 1));
      links.push_back(k);
    }
    for (int end = 0; end < 2; ++end) {
      const auto& tip = frac.tips[static_cast<std::size_t>(end)];
      if (!tip.edge) continue;
      const EdgeBc& bc = (*in.bc)[*tip.edge];
      if (bc.kind == BcKind::noflow) continue;
      const int local = end == 0 ? 0 : frac.size() - 1;
      TransportLink k;
      k.site = TransportLink::Site::tip;
      k.where = static_cast<int>(fr) * 2 + end;
      k.a = nc + frac.offset + local;
      k.q = end == 0 ? -q.front() : q.back();
      if (bc.kind == BcKind::pressure) {
        k.d = cond(local) / half(local);
        k.value = bc.tip_concentration();
      } else if (k.q < 0.0) {
        problems.push_back("transport: inflow through fracture tip on " +
                           std::string(to_string(*tip.edge)) +
                           " outflux boundary has no prescribed concentration");
      }
      links.push_back(k);
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
  return links;
}

inline double link_flux(const TransportLink& l, std::span<const double> x) noexcept {
  const double ua = x[l.a];
  const double ub = l.b == kNone ? l.value : x[l.b];
  return std::max(l.q, 0.0) * ua + std::min(l.q, 0.0) * ub + l.d * (ua - ub);
}

}  // namespace detail

/// Backward-Euler advection-diffusion system for (u, u_gamma). Reaction is
/// not included.
inline TransportSystem assemble_transport(const MixedDimMesh& mesh, const FlowState& flow,
                                          const TransportState& old, const TransportInputs& in) {
  const MatrixGrid& g = mesh.grid();
  const int nc = mesh.num_cells();
  const int n = mesh.num_unknowns();
  if (in.diffusivity == nullptr || in.bc == nullptr) throw DomainError("assemble_transport: missing inputs");
  if (!(in.dt > 0.0)) throw DomainError("assemble_transport: dt must be positive");

  TransportSystem sys;
  sys.links = detail::transport_links(mesh, flow, in);
  sys.rhs.assign(static_cast<std::size_t>(n), 0.0);
  sys.storage.assign(static_cast<std::size_t>(n), 0.0);
  for (int c = 0; c < nc; ++c) sys.storage[c] = in.phi[c] * g.volume(c);
  for (int gc = 0; gc < mesh.num_fracture_cells(); ++gc)
    sys.storage[nc + gc] = in.eps[gc] * mesh.fracture_cell(gc).length;
  sys.storage_old = sys.storage;
  if (!in.phi_old.empty())
    for (int c = 0; c < nc; ++c) sys.storage_old[c] = in.phi_old[c] * g.volume(c);
  if (!in.eps_old.empty())
    for (int gc = 0; gc < mesh.num_fracture_cells(); ++gc)
      sys.storage_old[nc + gc] = in.eps_old[gc] * mesh.fracture_cell(gc).length;

  SparseBuilder a(n);
  for (int u = 0; u < n; ++u) {
    a.add(u, u, sys.storage[u] / in.dt);
    const double old_u = u < nc ? old.u[u] : old.u_gamma[u - nc];
    sys.rhs[u] += sys.storage_old[u] / in.dt * old_u;
  }
  for (const auto& l : sys.links) {
    const double qp = std::max(l.q, 0.0), qm = std::min(l.q, 0.0);
    a.add(l.a, l.a, qp + l.d);
    if (l.b == kNone) {
      sys.rhs[l.a] -= (qm - l.d) * l.value;
      continue;
    }
    a.add(l.a, l.b, qm - l.d);
    a.add(l.b, l.a, -qp - l.d);
    a.add(l.b, l.b, -qm + l.d);
  }
  sys.matrix = a.build();

  const auto diag = sys.matrix.diagonal();
  for (int u = 0; u < n; ++u)
    if (diag[u] == 0.0) sys.frozen.push_back(u);
  if (!sys.frozen.empty()) {
    std::vector<char> fz(static_cast<std::size_t>(n), 0);
    for (int u : sys.frozen) fz[u] = 1;
    SparseBuilder b(n);
    const auto& rp = sys.matrix.row_ptr();
    const auto& cols = sys.matrix.cols();
    const auto& vals = sys.matrix.values();
    for (int r = 0; r < n; ++r) {
      if (fz[r]) {
        sys.storage_old[r] = sys.storage[r];
        b.add(r, r, 1.0);
        sys.rhs[r] = r < nc ? old.u[r] : old.u_gamma[r - nc];
        continue;
      }
      for (int q = rp[r]; q < rp[r + 1]; ++q) b.add(r, cols[q], vals[q]);
    }
    sys.matrix = b.build();
  }
  return sys;
}

/// Largest step for which an explicit upwind update would stay monotone:
/// min over unknowns of storage / total advective outflow.
inline double cfl_bound(const MixedDimMesh& mesh, const FlowState& flow, const TransportInputs& in) {
  TransportInputs no_diffusion = in;
  CellTensor zero = CellTensor::uniform(static_cast<std::size_t>(mesh.num_cells()), 0.0);
  no_diffusion.diffusivity = &zero;
  const auto links = detail::transport_links(mesh, flow, no_diffusion);
  std::vector<double> out(static_cast<std::size_t>(mesh.num_unknowns()), 0.0);
  for (const auto& l : links) {
    if (l.q > 0.0) out[l.a] += l.q;
    if (l.q < 0.0 && l.b != kNone) out[l.b] -= l.q;
  }
  const MatrixGrid& g = mesh.grid();
  const int nc = mesh.num_cells();
  double bound = std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < out.size(); ++u) {
    if (out[u] <= 0.0) continue;
    const int k = static_cast<int>(u);
    const double s = k < nc ? in.phi[u] * g.volume(k)
                            : in.eps[u - nc] * mesh.fracture_cell(k - nc).length;
    bound = std::min(bound, s / out[u]);
  }
  return bound;
}

/// Advection-diffusion update of (u, u_gamma); w and w_gamma are carried over.
inline TransportState transport_step(const MixedDimMesh& mesh, const FlowState& flow,
                                     const TransportState& old, const TransportInputs& in,
                                     const SolverOptions& opt = {}) {
  const int nc = mesh.num_cells();
  const auto sys = assemble_transport(mesh, flow, old, in);
  std::vector<double> x(static_cast<std::size_t>(mesh.num_unknowns()));
  std::copy(old.u.begin(), old.u.end(), x.begin());
  std::copy(old.u_gamma.begin(), old.u_gamma.end(), x.begin() + nc);
  const auto rep = bicgstab(sys.matrix, sys.rhs, x, opt);

  TransportState st;
  st.iterations = rep.iterations;
  st.frozen = sys.frozen;
  st.u.assign(x.begin(), x.begin() + nc);
  st.u_gamma.assign(x.begin() + nc, x.end());
  st.w = old.w;
  st.w_gamma = old.w_gamma;

  const MatrixGrid& g = mesh.grid();
  st.chi.assign(static_cast<std::size_t>(g.num_faces()), 0.0);
  st.chi_coupling.assign(mesh.couplings().size(), {0.0, 0.0});
  st.chi_gamma.resize(mesh.fractures().size());
  for (std::size_t fr = 0; fr < mesh.fractures().size(); ++fr)
    st.chi_gamma[fr].assign(static_cast<std::size_t>(mesh.fractures()[fr].size()) + 1, 0.0);

  using Site = TransportLink::Site;
  for (const auto& l : sys.links) {
    const double fl = detail::link_flux(l, x);
    switch (l.site) {
      case Site::face: {
        const Face& f = g.face(l.where);
        st.chi[l.where] = f.is_boundary() ? f.outward_sign() * fl : fl;
        if (f.is_boundary()) (fl > 0.0 ? st.boundary_out : st.boundary_in) += std::abs(fl);
        break;
      }
      case Site::coupling_minus: st.chi_coupling[l.where][0] = fl; break;
      case Site::coupling_plus: st.chi_coupling[l.where][1] = fl; break;
      case Site::tangential: st.chi_gamma[l.where][l.sub] = fl; break;
      case Site::tip: {
        auto& cg = st.chi_gamma[l.where / 2];
        if (l.where % 2 == 0)
          cg.front() = -fl;
        else
          cg.back() = fl;
        (fl > 0.0 ? st.boundary_out : st.boundary_in) += std::abs(fl);
        break;
      }
    }
  }
  return st;
}

/// Pointwise reaction with porosity / aperture frozen. Cells with zero
/// porosity (or aperture) do not react.
inline TransportState precipitate_step(const TransportState& in, std::span<const double> phi,
                                       std::span<const double> eps, const ChemParams& p, double dt) {
  TransportState out = in;
  if (p.lambda == 0.0) return out;
  for (std::size_t c = 0; c < out.u.size(); ++c) {
    if (!(phi[c] > 0.0)) continue;
    const auto r = reaction_substep(std::max(out.u[c], 0.0), std::max(out.w[c], 0.0), dt, p);
    out.u[c] = r.u;
    out.w[c] = r.w;
  }
  for (std::size_t g = 0; g < out.u_gamma.size(); ++g) {
    if (!(eps[g] > 0.0)) continue;
    const auto r = reaction_substep(std::max(out.u_gamma[g], 0.0), std::max(out.w_gamma[g], 0.0), dt, p);
    out.u_gamma[g] = r.u;
    out.w_gamma[g] = r.w;
  }
  return out;
}

}  // namespace rfrac
