#pragma once

// Equi-dimensional reference model: the fracture is meshed as a thin strip of
// width eps_ref with its own (anisotropic) material, coupled to the matrix by
// plain continuity on a conforming grid. Used to verify the reduced model.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfrac/config.hpp"
#include "rfrac/coupler.hpp"
#include "rfrac/error.hpp"
#include "rfrac/mesh.hpp"

namespace rfrac {

struct StripSpec {
  Axis normal = Axis::y;
  double position = 0.0;
  double start = 0.0;  // tangential extent; start == end gives an empty strip
  double end = 0.0;
  double aperture = 0.0;
};

struct EquidimConfig {
  Config base;
  std::optional<StripSpec> strip;
  int across = 5;
  int refine = 1;
  bool auto_grading = true;
};

/// Oracle setup derived from a reduced-model configuration (at most one fracture).
inline EquidimConfig equidim_config(const Config& c) {
  if (c.fractures.size() > 1)
    throw ConfigError("equidim: only a single fracture can be resolved as a strip");
  EquidimConfig e{c, std::nullopt, c.equidim.across, c.equidim.refine, c.equidim.auto_grading};
  if (!c.fractures.empty()) {
    const auto& f = c.fractures.front();
    e.strip = StripSpec{f.normal, f.position, f.start, f.end, c.chem.eps_ref};
  }
  return e;
}

struct EquidimGrid {
  MatrixGrid reduced;  // the reduced-model grid being mirrored
  MatrixGrid grid;
  std::vector<char> strip;          // per cell: strip material
  std::vector<int> reduced_cell;    // per cell: reduced matrix cell, kNone inside the strip rows
  std::vector<int> fracture_cell;   // per cell: reduced fracture cell for strip cells
  std::vector<char> excluded;       // per reduced cell: adjacent to the fracture
  int num_fracture_cells = 0;
  std::optional<StripSpec> spec;

  int num_strip_cells() const noexcept {
    return static_cast<int>(std::count(strip.begin(), strip.end(), 1));
  }
};

namespace detail {

inline int snap_index(const std::vector<double>& e, double v, double tol = 1e-9) {
  for (std::size_t k = 0; k < e.size(); ++k) {
    const double h = k + 1 < e.size() ? e[k + 1] - e[k] : e[k] - e[k - 1];
    if (std::abs(e[k] - v) <= tol * h) return static_cast<int>(k);
  }
  return kNone;
}

inline std::vector<double> subdivide(const std::vector<double>& e, int r) {
  std::vector<double> out{e.front()};
  for (std::size_t k = 0; k + 1 < e.size(); ++k)
    for (int s = 1; s <= r; ++s) out.push_back(s == r ? e[k + 1] : e[k] + (e[k + 1] - e[k]) * s / r);
  return out;
}

inline void append_uniform(std::vector<double>& out, double a, double b, int n) {
  for (int s = 1; s <= n; ++s) out.push_back(s == n ? b : a + (b - a) * s / n);
}

}  // namespace detail

inline EquidimGrid build_equidim(const EquidimConfig& ec) {
  const Config& c = ec.base;
  if (ec.refine < 1) throw InvalidGeometry("equidim: refine must be >= 1");
  EquidimGrid out;
  out.reduced = build_matrix_grid(c.nx, c.ny, c.lx, c.ly);
  const MatrixGrid& R = out.reduced;
  out.excluded.assign(static_cast<std::size_t>(R.num_cells()), 0);
  const int r = ec.refine;

  const bool has_strip = ec.strip && ec.strip->end != ec.strip->start;
  if (!has_strip) {
    out.grid = MatrixGrid(detail::subdivide(R.x_edges(), r), detail::subdivide(R.y_edges(), r));
    const auto n = static_cast<std::size_t>(out.grid.num_cells());
    out.strip.assign(n, 0);
    out.fracture_cell.assign(n, kNone);
    out.reduced_cell.resize(n);
    for (int cc = 0; cc < out.grid.num_cells(); ++cc) {
      auto [i, j] = out.grid.cell_ij(cc);
      out.reduced_cell[cc] = R.cell(i / r, j / r);
    }
    return out;
  }

  const StripSpec& s = *ec.strip;
  out.spec = s;
  if (ec.across < 3) throw InvalidGeometry("equidim: the strip needs at least 3 cells across");
  if (!(s.aperture > 0.0)) throw InvalidGeometry("equidim: strip aperture must be positive");
  const Axis na = s.normal, ta = other(s.normal);
  const auto& ne = R.edges(na);
  const auto& te = R.edges(ta);
  const int line = detail::snap_index(ne, s.position);
  if (line == kNone || line == 0 || line + 1 == static_cast<int>(ne.size()))
    throw InvalidGeometry("equidim: strip centre is not an interior grid line");
  const int t0 = detail::snap_index(te, std::min(s.start, s.end));
  const int t1 = detail::snap_index(te, std::max(s.start, s.end));
  if (t0 == kNone || t1 == kNone) throw InvalidGeometry("equidim: strip end points are not on grid lines");
  out.num_fracture_cells = t1 - t0;

  const double y0 = ne[line];
  const double lo = y0 - 0.5 * s.aperture, hi = y0 + 0.5 * s.aperture;
  const double L = ne.back();
  if (!(lo > 0.0) || !(hi < L)) throw InvalidGeometry("equidim: strip does not fit inside the domain");
  const int n_lower = line, n_upper = static_cast<int>(ne.size()) - 1 - line;

  std::vector<double> across{0.0};
  if (ec.auto_grading) {
    detail::append_uniform(across, 0.0, lo, n_lower * r);
    detail::append_uniform(across, lo, hi, ec.across);
    detail::append_uniform(across, hi, L, n_upper * r);
  } else {
    // uniform spacing throughout: strip cells must match the matrix cells
    const double h = (ne[1] - ne[0]) / r;
    const double hs = s.aperture / ec.across;
    auto whole = [](double len, double h) {
      const double q = len / h;
      return std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, q) ? static_cast<int>(std::round(q)) : -1;
    };
    const int a = whole(lo, h), b = whole(L - hi, h);
    if (std::abs(hs - h) > 1e-9 * h || a < 1 || b < 1)
      throw InvalidGeometry("equidim: strip width " + format_double(s.aperture) + " is not " +
                            std::to_string(ec.across) + " cells of size " + format_double(h) +
                            " (enable grading = auto)");
    detail::append_uniform(across, 0.0, lo, a);
    detail::append_uniform(across, lo, hi, ec.across);
    detail::append_uniform(across, hi, L, b);
  }
  const int strip_begin = static_cast<int>(std::lower_bound(across.begin(), across.end(), lo) - across.begin());
  const int strip_end = strip_begin + ec.across;
  std::vector<double> along = detail::subdivide(te, r);

  out.grid = na == Axis::y ? MatrixGrid(along, across) : MatrixGrid(across, along);
  const MatrixGrid& G = out.grid;
  const auto n = static_cast<std::size_t>(G.num_cells());
  out.strip.assign(n, 0);
  out.fracture_cell.assign(n, kNone);
  out.reduced_cell.assign(n, kNone);
  for (int cc = 0; cc < G.num_cells(); ++cc) {
    auto [i, j] = G.cell_ij(cc);
    const int ia = na == Axis::y ? j : i;  // index across
    const int it = na == Axis::y ? i : j;  // index along
    const int parent_t = it / r;
    if (ia >= strip_begin && ia < strip_end) {
      if (parent_t >= t0 && parent_t < t1) {
        out.strip[cc] = 1;
        out.fracture_cell[cc] = parent_t - t0;
      }
      continue;
    }
    // stretch the matrix part back onto the reduced coordinate
    const double xc = 0.5 * (across[ia] + across[ia + 1]);
    const double sc = ia < strip_begin ? xc * (y0 / lo) : y0 + (xc - hi) * (L - y0) / (L - hi);
    int parent_a = static_cast<int>(std::upper_bound(ne.begin(), ne.end(), sc) - ne.begin()) - 1;
    parent_a = std::clamp(parent_a, 0, static_cast<int>(ne.size()) - 2);
    out.reduced_cell[cc] = na == Axis::y ? R.cell(parent_t, parent_a) : R.cell(parent_a, parent_t);
  }
  for (int t = t0; t < t1; ++t)
    for (int a : {line - 1, line})
      out.excluded[na == Axis::y ? R.cell(t, a) : R.cell(a, t)] = 1;
  return out;
}

/// Material index used for strip cells in the equidim problem.
inline constexpr int kStripMaterial = 1;

inline MatrixMaterial strip_material(const ChemParams& chem, Axis normal) {
  const auto kp = fracture_permeability(chem.eps_ref, chem);
  MatrixMaterial m = MatrixMaterial::from(chem);
  m.law.phi_ref = 1.0;
  m.law.alpha = 2.0;
  m.law.eta = chem.eta_gamma;
  if (normal == Axis::y) {  // tangential = x
    m.law.k_ref = kp.k_gamma;
    m.k_y_scale = kp.kappa / kp.k_gamma;
    m.d_x = chem.d_gamma;
    m.d_y = chem.delta;
  } else {
    m.law.k_ref = kp.kappa;
    m.k_y_scale = kp.k_gamma / kp.kappa;
    m.d_x = chem.delta;
    m.d_y = chem.d_gamma;
  }
  return m;
}

struct EquidimProblem {
  EquidimGrid grid;
  Problem problem;
  InitialFields initial;
  std::vector<std::string> warnings;
};

inline EquidimProblem make_equidim_problem(const EquidimConfig& ec) {
  const Config& c = ec.base;
  EquidimProblem ep;
  ep.grid = build_equidim(ec);
  const MatrixGrid& G = ep.grid.grid;
  Problem& pb = ep.problem;
  pb.mesh = MixedDimMesh(G);
  pb.chem = c.chem;
  pb.materials = {MatrixMaterial::from(c.chem)};
  if (ep.grid.spec) pb.materials.push_back(strip_material(c.chem, ep.grid.spec->normal));
  const auto n = static_cast<std::size_t>(G.num_cells());
  pb.material_of_cell.assign(n, 0);
  pb.f.assign(n, c.f);
  for (std::size_t k = 0; k < n; ++k) {
    if (!ep.grid.strip[k]) continue;
    pb.material_of_cell[k] = kStripMaterial;
    pb.f[k] = c.f_gamma;
  }
  pb.bc = c.bc;
  pb.clog_fraction = c.clog_fraction;
  pb.fixed_point = c.time.fixed_point;
  pb.fixed_point_max_iter = c.time.fixed_point_max_iter;
  pb.fixed_point_tol = c.time.fixed_point_tol;
  pb.cfl = c.cfl;
  pb.flow_solver = c.flow_solver;
  pb.transport_solver = c.transport_solver;
  for (Edge e : kEdges) {
    const auto& b = c.bc[e];
    if (b.frac_pressure || b.frac_flux || b.frac_concentration)
      ep.warnings.push_back("equidim: fracture tip data on the " + std::string(to_string(e)) +
                            " edge is ignored; strip faces use the edge data");
  }

  // the reduced mesh supplies region membership by the reduced cell
  MixedDimMesh reduced_mesh(ep.grid.reduced);
  const InitialFields red = make_initial_fields(reduced_mesh, c.initial);
  ep.initial.u.assign(n, c.initial.u);
  ep.initial.w.assign(n, c.initial.w);
  for (std::size_t k = 0; k < n; ++k) {
    if (ep.grid.strip[k]) {
      ep.initial.u[k] = c.initial.u_gamma;
      ep.initial.w[k] = c.initial.w_gamma;
    } else if (ep.grid.reduced_cell[k] != kNone) {
      ep.initial.u[k] = red.u[ep.grid.reduced_cell[k]];
      ep.initial.w[k] = red.w[ep.grid.reduced_cell[k]];
    }
  }
  return ep;
}

// ---------------------------------------------------------------------------
// comparison on the reduced grid

/// Fields restricted to reduced-model cells with their aggregation weights.
struct ReducedFields {
  std::vector<double> p, u, p_gamma, u_gamma;
  std::vector<double> cell_weight, fracture_weight;
  std::vector<char> excluded;
};

/// Map from the cells of a run onto reduced cells (matrix and fracture).
struct Correspondence {
  int reduced_cells = 0;
  int reduced_fracture_cells = 0;
  std::vector<int> cell_target;           // per cell -> reduced matrix cell or kNone
  std::vector<int> cell_fracture_target;  // per cell -> reduced fracture cell or kNone
  std::vector<int> fracture_target;       // per fracture cell -> reduced fracture cell
  std::vector<double> cell_weight;
  std::vector<double> fracture_weight;
  std::vector<char> excluded;  // per reduced cell
};

inline Correspondence identity_correspondence(const MixedDimMesh& mesh) {
  Correspondence c;
  c.reduced_cells = mesh.num_cells();
  c.reduced_fracture_cells = mesh.num_fracture_cells();
  for (int k = 0; k < mesh.num_cells(); ++k) {
    c.cell_target.push_back(k);
    c.cell_fracture_target.push_back(kNone);
    c.cell_weight.push_back(mesh.grid().volume(k));
  }
  for (int g = 0; g < mesh.num_fracture_cells(); ++g) {
    c.fracture_target.push_back(g);
    c.fracture_weight.push_back(mesh.fracture_cell(g).length);
  }
  c.excluded.assign(static_cast<std::size_t>(mesh.num_cells()), 0);
  return c;
}

inline Correspondence equidim_correspondence(const EquidimGrid& eg) {
  Correspondence c;
  c.reduced_cells = eg.reduced.num_cells();
  c.reduced_fracture_cells = eg.num_fracture_cells;
  c.cell_target = eg.reduced_cell;
  c.cell_fracture_target = eg.fracture_cell;
  for (int k = 0; k < eg.grid.num_cells(); ++k) c.cell_weight.push_back(eg.grid.volume(k));
  c.excluded = eg.excluded;
  return c;
}

struct FieldsView {
  std::span<const double> p, u, p_gamma, u_gamma;
};

inline FieldsView view(const SimState& s) {
  return {s.flow.p, s.transport.u, s.flow.p_gamma, s.transport.u_gamma};
}

/// Weighted averages per reduced cell. The first contribution is used as the
/// pivot so that a constant field averages to exactly that constant.
inline ReducedFields restrict_fields(const FieldsView& v, const Correspondence& c) {
  if (v.p.size() != c.cell_target.size() || v.u.size() != c.cell_target.size() ||
      v.p_gamma.size() != c.fracture_target.size() || v.u_gamma.size() != c.fracture_target.size())
    throw ComparisonError("field sizes do not match the cell correspondence");
  const auto nr = static_cast<std::size_t>(c.reduced_cells);
  const auto nf = static_cast<std::size_t>(c.reduced_fracture_cells);

  struct Acc {
    std::vector<double> pivot, sum, weight;
    std::vector<char> seen;
    explicit Acc(std::size_t n) : pivot(n, 0.0), sum(n, 0.0), weight(n, 0.0), seen(n, 0) {}
    void add(std::size_t k, double v, double w) {
      if (!seen[k]) {
        seen[k] = 1;
        pivot[k] = v;
      }
      sum[k] += w * (v - pivot[k]);
      weight[k] += w;
    }
    std::vector<double> result() const {
      std::vector<double> out(pivot.size(), 0.0);
      for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = weight[k] > 0.0 ? pivot[k] + sum[k] / weight[k] : pivot[k];
      return out;
    }
  };
  Acc p(nr), u(nr), pg(nf), ug(nf);
  for (std::size_t k = 0; k < c.cell_target.size(); ++k) {
    const double w = c.cell_weight[k];
    if (const int t = c.cell_target[k]; t != kNone) {
      p.add(static_cast<std::size_t>(t), v.p[k], w);
      u.add(static_cast<std::size_t>(t), v.u[k], w);
    }
    if (const int t = c.cell_fracture_target[k]; t != kNone) {
      pg.add(static_cast<std::size_t>(t), v.p[k], w);
      ug.add(static_cast<std::size_t>(t), v.u[k], w);
    }
  }
  for (std::size_t k = 0; k < c.fracture_target.size(); ++k) {
    const auto t = static_cast<std::size_t>(c.fracture_target[k]);
    pg.add(t, v.p_gamma[k], c.fracture_weight[k]);
    ug.add(t, v.u_gamma[k], c.fracture_weight[k]);
  }
  for (std::size_t k = 0; k < nr; ++k)
    if (!p.seen[k]) throw ComparisonError("reduced cell " + std::to_string(k) + " has no counterpart");
  for (std::size_t k = 0; k < nf; ++k)
    if (!pg.seen[k]) throw ComparisonError("fracture cell " + std::to_string(k) + " has no counterpart");
  return {p.result(), u.result(), pg.result(), ug.result(), p.weight, pg.weight, c.excluded};
}

struct FieldErrors {
  double l2 = 0.0;    // relative, weighted
  double linf = 0.0;  // relative
};

struct ComparisonReport {
  FieldErrors p, u, p_gamma, u_gamma;
  int cells_compared = 0;
  int fracture_cells_compared = 0;
};

namespace detail {

/// Relative errors of `a` against the reference `ref`. If the reference norm
/// vanishes the absolute error is reported instead.
inline FieldErrors relative_errors(std::span<const double> a, std::span<const double> ref,
                                   std::span<const double> weight, std::span<const char> skip) {
  double num2 = 0.0, den2 = 0.0, numi = 0.0, deni = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!skip.empty() && skip[k]) continue;
    const double e = a[k] - ref[k];
    num2 += weight[k] * e * e;
    den2 += weight[k] * ref[k] * ref[k];
    numi = std::max(numi, std::abs(e));
    deni = std::max(deni, std::abs(ref[k]));
  }
  FieldErrors out;
  out.l2 = den2 > 0.0 ? std::sqrt(num2 / den2) : std::sqrt(num2);
  out.linf = deni > 0.0 ? numi / deni : numi;
  return out;
}

}  // namespace detail

/// Error norms of `a` relative to the reference `ref` on the reduced grid.
inline ComparisonReport compare_fields(const ReducedFields& a, const ReducedFields& ref) {
  if (a.p.size() != ref.p.size() || a.p_gamma.size() != ref.p_gamma.size())
    throw ComparisonError("runs do not share the same reduced geometry (" + std::to_string(a.p.size()) + "+" +
                          std::to_string(a.p_gamma.size()) + " vs " + std::to_string(ref.p.size()) + "+" +
                          std::to_string(ref.p_gamma.size()) + " cells)");
  std::vector<char> skip(a.p.size(), 0);
  for (std::size_t k = 0; k < skip.size(); ++k)
    skip[k] = (k < a.excluded.size() && a.excluded[k]) || (k < ref.excluded.size() && ref.excluded[k]);
  ComparisonReport r;
  r.p = detail::relative_errors(a.p, ref.p, ref.cell_weight, skip);
  r.u = detail::relative_errors(a.u, ref.u, ref.cell_weight, skip);
  r.p_gamma = detail::relative_errors(a.p_gamma, ref.p_gamma, ref.fracture_weight, {});
  r.u_gamma = detail::relative_errors(a.u_gamma, ref.u_gamma, ref.fracture_weight, {});
  r.cells_compared = static_cast<int>(std::count(skip.begin(), skip.end(), 0));
  r.fracture_cells_compared = static_cast<int>(a.p_gamma.size());
  return r;
}

/// Reduced run against its equi-dimensional reference.
inline ComparisonReport compare(const SimState& reduced, const MixedDimMesh& reduced_mesh,
                                const SimState& equidim, const EquidimGrid& eg) {
  if (!(reduced_mesh.grid() == eg.reduced))
    throw ComparisonError("reduced run and equidim reference use different grids");
  if (reduced_mesh.num_fracture_cells() != eg.num_fracture_cells)
    throw ComparisonError("fracture cell counts differ between the runs");
  const auto a = restrict_fields(view(reduced), identity_correspondence(reduced_mesh));
  const auto b = restrict_fields(view(equidim), equidim_correspondence(eg));
  return compare_fields(a, b);
}

}  // namespace rfrac
