#pragma once

// Mixed-dimensional grid: a 2D tensor-product cell-centred matrix grid plus
// 1D fracture grids that live on interior matrix faces.
//
// Index conventions
//   cells            c = i + nx * j                (row-major by x then y)
//   vertical faces   f = i + (nx + 1) * j          i in [0, nx], j in [0, ny)
//   horizontal faces f = nV + i + nx * j           i in [0, nx), j in [0, ny]
// Face normals point from the `neg` cell (low coordinate) to the `pos` cell.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rfrac/error.hpp"

namespace rfrac {

inline constexpr int kNone = -1;

enum class Axis : std::uint8_t { x = 0, y = 1 };

constexpr Axis other(Axis a) noexcept { return a == Axis::x ? Axis::y : Axis::x; }
constexpr int index(Axis a) noexcept { return static_cast<int>(a); }

enum class Edge : std::uint8_t { left = 0, right = 1, bottom = 2, top = 3 };

inline constexpr std::array<Edge, 4> kEdges{Edge::left, Edge::right, Edge::bottom, Edge::top};

constexpr std::string_view to_string(Edge e) noexcept {
  switch (e) {
    case Edge::left: return "left";
    case Edge::right: return "right";
    case Edge::bottom: return "bottom";
    case Edge::top: return "top";
  }
  return "?";
}

using Vec2 = std::array<double, 2>;

struct Face {
  Axis normal = Axis::x;
  int neg = kNone;
  int pos = kNone;
  double area = 0.0;
  Vec2 center{};
  std::optional<Edge> edge;  // set on boundary faces only

  bool is_boundary() const noexcept { return edge.has_value(); }
  /// The single adjacent cell of a boundary face.
  int boundary_cell() const noexcept { return neg != kNone ? neg : pos; }
  /// +1 if the outward normal of the boundary is along +normal.
  double outward_sign() const noexcept { return neg != kNone ? 1.0 : -1.0; }
};

class MatrixGrid {
 public:
  MatrixGrid() = default;

  /// Tensor-product grid from strictly increasing edge coordinates starting at 0.
  MatrixGrid(std::vector<double> x_edges, std::vector<double> y_edges)
      : xe_(std::move(x_edges)), ye_(std::move(y_edges)) {
    if (xe_.size() < 2 || ye_.size() < 2)
      throw InvalidGeometry("grid needs at least one cell per direction");
    for (const auto* e : {&xe_, &ye_}) {
      for (std::size_t k = 1; k < e->size(); ++k)
        if (!((*e)[k] > (*e)[k - 1]))
          throw InvalidGeometry("grid edge coordinates must be strictly increasing");
    }
    nx_ = static_cast<int>(xe_.size()) - 1;
    ny_ = static_cast<int>(ye_.size()) - 1;
    build_faces();
  }

  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  int num_cells() const noexcept { return nx_ * ny_; }
  int num_faces() const noexcept { return static_cast<int>(faces_.size()); }
  int num_vertical_faces() const noexcept { return (nx_ + 1) * ny_; }
  int num_interior_faces() const noexcept { return (nx_ - 1) * ny_ + nx_ * (ny_ - 1); }

  double lx() const noexcept { return xe_.back() - xe_.front(); }
  double ly() const noexcept { return ye_.back() - ye_.front(); }
  const std::vector<double>& x_edges() const noexcept { return xe_; }
  const std::vector<double>& y_edges() const noexcept { return ye_; }
  const std::vector<double>& edges(Axis a) const noexcept { return a == Axis::x ? xe_ : ye_; }

  int cell(int i, int j) const noexcept { return i + nx_ * j; }
  std::pair<int, int> cell_ij(int c) const noexcept { return {c % nx_, c / nx_}; }

  double hx(int i) const noexcept { return xe_[i + 1] - xe_[i]; }
  double hy(int j) const noexcept { return ye_[j + 1] - ye_[j]; }
  Vec2 cell_size(int c) const noexcept {
    auto [i, j] = cell_ij(c);
    return {hx(i), hy(j)};
  }
  double volume(int c) const noexcept {
    auto [i, j] = cell_ij(c);
    return hx(i) * hy(j);
  }
  Vec2 center(int c) const noexcept {
    auto [i, j] = cell_ij(c);
    return {0.5 * (xe_[i] + xe_[i + 1]), 0.5 * (ye_[j] + ye_[j + 1])};
  }

  int vertical_face(int i, int j) const noexcept { return i + (nx_ + 1) * j; }
  int horizontal_face(int i, int j) const noexcept { return num_vertical_faces() + i + nx_ * j; }

  /// (i, j) line coordinates of a face: for vertical faces i in [0, nx], for
  /// horizontal faces j in [0, ny].
  std::pair<int, int> face_ij(int f) const noexcept {
    if (f < num_vertical_faces()) return {f % (nx_ + 1), f / (nx_ + 1)};
    const int g = f - num_vertical_faces();
    return {g % nx_, g / nx_};
  }

  /// Faces of a cell in the order left, right, bottom, top.
  std::array<int, 4> cell_faces(int c) const noexcept {
    auto [i, j] = cell_ij(c);
    return {vertical_face(i, j), vertical_face(i + 1, j), horizontal_face(i, j),
            horizontal_face(i, j + 1)};
  }

  const std::vector<Face>& faces() const noexcept { return faces_; }
  const Face& face(int f) const { return faces_.at(static_cast<std::size_t>(f)); }

  bool is_uniform(double rtol = 1e-12) const noexcept {
    auto uniform = [rtol](const std::vector<double>& e) {
      const double h = (e.back() - e.front()) / static_cast<double>(e.size() - 1);
      for (std::size_t k = 1; k < e.size(); ++k)
        if (std::abs((e[k] - e[k - 1]) - h) > rtol * h) return false;
      return true;
    };
    return uniform(xe_) && uniform(ye_);
  }

  /// Cell containing a point; points on an interior edge go to the upper cell.
  int locate(double x, double y) const {
    auto find = [](const std::vector<double>& e, double v) {
      if (v < e.front() || v > e.back()) return kNone;
      auto it = std::upper_bound(e.begin(), e.end(), v);
      int k = static_cast<int>(it - e.begin()) - 1;
      return std::min(k, static_cast<int>(e.size()) - 2);
    };
    const int i = find(xe_, x), j = find(ye_, y);
    return (i == kNone || j == kNone) ? kNone : cell(i, j);
  }

  friend bool operator==(const MatrixGrid& a, const MatrixGrid& b) {
    return a.xe_ == b.xe_ && a.ye_ == b.ye_;
  }

 private:
  void build_faces() {
    faces_.clear();
    faces_.reserve(static_cast<std::size_t>(num_vertical_faces() + nx_ * (ny_ + 1)));
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i <= nx_; ++i) {
        Face f;
        f.normal = Axis::x;
        f.neg = i > 0 ? cell(i - 1, j) : kNone;
        f.pos = i < nx_ ? cell(i, j) : kNone;
        f.area = hy(j);
        f.center = {xe_[i], 0.5 * (ye_[j] + ye_[j + 1])};
        if (i == 0) f.edge = Edge::left;
        if (i == nx_) f.edge = Edge::right;
        faces_.push_back(f);
      }
    }
    for (int j = 0; j <= ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        Face f;
        f.normal = Axis::y;
        f.neg = j > 0 ? cell(i, j - 1) : kNone;
        f.pos = j < ny_ ? cell(i, j) : kNone;
        f.area = hx(i);
        f.center = {0.5 * (xe_[i] + xe_[i + 1]), ye_[j]};
        if (j == 0) f.edge = Edge::bottom;
        if (j == ny_) f.edge = Edge::top;
        faces_.push_back(f);
      }
    }
  }

  std::vector<double> xe_, ye_;
  int nx_ = 0, ny_ = 0;
  std::vector<Face> faces_;
};

/// Uniform Cartesian grid on [0, lx] x [0, ly].
inline MatrixGrid build_matrix_grid(int nx, int ny, double lx, double ly) {
  if (nx < 1 || ny < 1) throw InvalidGeometry("cell counts must be at least 1");
  if (!(lx > 0.0) || !(ly > 0.0)) throw InvalidGeometry("domain lengths must be positive");
  auto edges = [](int n, double l) {
    std::vector<double> e(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) e[static_cast<std::size_t>(k)] = l * k / n;
    return e;
  };
  return MatrixGrid(edges(nx, lx), edges(ny, ly));
}

struct FractureCell {
  int host_face = kNone;
  double length = 0.0;
  Vec2 center{};
};

/// A fracture end point. Tips without an edge are interior (zero-flux) tips.
struct FractureTip {
  Vec2 point{};
  std::optional<Edge> edge;
};

struct FractureGrid {
  Axis tangent = Axis::x;
  int offset = 0;  // global index of cells[0] among all fracture cells
  std::vector<FractureCell> cells;
  std::array<FractureTip, 2> tips{};  // tips[0] at the low-coordinate end

  int size() const noexcept { return static_cast<int>(cells.size()); }
  double length() const noexcept {
    double l = 0.0;
    for (const auto& c : cells) l += c.length;
    return l;
  }
};

/// Matrix <-> fracture coupling of one fracture cell. The normal points from
/// the minus cell to the plus cell and equals the host face normal.
struct CouplingEntry {
  int fracture = kNone;
  int local_cell = kNone;
  int fracture_cell = kNone;  // global fracture-cell index
  int minus_cell = kNone;
  int plus_cell = kNone;
  double length = 0.0;
  Axis normal = Axis::y;
};

struct FractureEmbedding {
  FractureGrid fracture;
  std::vector<CouplingEntry> couplings;
};

/// Turn a contiguous run of interior faces of one orientation into a fracture.
inline FractureEmbedding embed_fracture(const MatrixGrid& grid, std::span<const int> path,
                                        int fracture_id = 0, int first_cell = 0) {
  if (path.empty()) throw TopologyError("fracture path is empty");
  std::vector<int> faces(path.begin(), path.end());
  for (int f : faces) {
    if (f < 0 || f >= grid.num_faces()) throw TopologyError("fracture path face index out of range");
    if (grid.face(f).is_boundary()) throw TopologyError("fracture path uses a boundary face");
  }
  const Axis normal = grid.face(faces.front()).normal;
  for (int f : faces)
    if (grid.face(f).normal != normal)
      throw TopologyError("fracture path mixes face orientations");

  const Axis tangent = other(normal);
  // line = coordinate index across the path, pos = index along it
  auto line_of = [&](int f) {
    auto [i, j] = grid.face_ij(f);
    return normal == Axis::x ? i : j;
  };
  auto pos_of = [&](int f) {
    auto [i, j] = grid.face_ij(f);
    return normal == Axis::x ? j : i;
  };
  std::sort(faces.begin(), faces.end(), [&](int a, int b) { return pos_of(a) < pos_of(b); });
  for (std::size_t k = 1; k < faces.size(); ++k) {
    if (faces[k] == faces[k - 1]) throw TopologyError("fracture path touches a face twice");
    if (line_of(faces[k]) != line_of(faces[0]))
      throw TopologyError("fracture path is not on a single grid line");
    if (pos_of(faces[k]) != pos_of(faces[k - 1]) + 1)
      throw TopologyError("fracture path is not contiguous");
  }

  FractureEmbedding out;
  out.fracture.tangent = tangent;
  out.fracture.offset = first_cell;
  const auto& te = grid.edges(tangent);
  for (std::size_t k = 0; k < faces.size(); ++k) {
    const Face& face = grid.face(faces[k]);
    out.fracture.cells.push_back({faces[k], face.area, face.center});
    CouplingEntry c;
    c.fracture = fracture_id;
    c.local_cell = static_cast<int>(k);
    c.fracture_cell = first_cell + static_cast<int>(k);
    c.minus_cell = face.neg;
    c.plus_cell = face.pos;
    c.length = face.area;
    c.normal = normal;
    out.couplings.push_back(c);
  }

  const int p0 = pos_of(faces.front());
  const int p1 = pos_of(faces.back()) + 1;
  const double across = grid.edges(normal)[static_cast<std::size_t>(line_of(faces.front()))];
  const int n_along = static_cast<int>(te.size()) - 1;
  for (int end = 0; end < 2; ++end) {
    const int p = end == 0 ? p0 : p1;
    FractureTip tip;
    const double along = te[static_cast<std::size_t>(p)];
    tip.point = tangent == Axis::x ? Vec2{along, across} : Vec2{across, along};
    if (p == 0) tip.edge = tangent == Axis::x ? Edge::left : Edge::bottom;
    if (p == n_along) tip.edge = tangent == Axis::x ? Edge::right : Edge::top;
    out.fracture.tips[static_cast<std::size_t>(end)] = tip;
  }
  return out;
}

/// Faces along the grid line `position` (across `normal`) covering
/// [start, end] in the tangential direction. Coordinates must lie on grid
/// lines to within `tol` times the local cell size.
inline std::vector<int> fracture_path(const MatrixGrid& grid, Axis normal, double position,
                                      double start, double end, double tol = 1e-9) {
  const auto& ne = grid.edges(normal);
  const auto& te = grid.edges(other(normal));
  auto snap = [tol](const std::vector<double>& e, double v) {
    for (std::size_t k = 0; k < e.size(); ++k) {
      const double h = k + 1 < e.size() ? e[k + 1] - e[k] : e[k] - e[k - 1];
      if (std::abs(e[k] - v) <= tol * h) return static_cast<int>(k);
    }
    return kNone;
  };
  const int line = snap(ne, position);
  if (line == kNone || line == 0 || line == static_cast<int>(ne.size()) - 1)
    throw TopologyError("fracture position " + std::to_string(position) +
                        " is not an interior grid line");
  const int a = snap(te, std::min(start, end));
  const int b = snap(te, std::max(start, end));
  if (a == kNone || b == kNone) throw TopologyError("fracture end points are not on grid lines");
  if (a == b) throw TopologyError("fracture has zero length");
  std::vector<int> faces;
  for (int p = a; p < b; ++p)
    faces.push_back(normal == Axis::y ? grid.horizontal_face(p, line) : grid.vertical_face(line, p));
  return faces;
}

class MixedDimMesh {
 public:
  MixedDimMesh() = default;

  explicit MixedDimMesh(MatrixGrid grid, const std::vector<std::vector<int>>& paths = {})
      : grid_(std::move(grid)),
        host_(static_cast<std::size_t>(grid_.num_faces()), kNone) {
    for (const auto& path : paths) add(path);
  }

  const MatrixGrid& grid() const noexcept { return grid_; }
  const std::vector<FractureGrid>& fractures() const noexcept { return fractures_; }
  const std::vector<CouplingEntry>& couplings() const noexcept { return couplings_; }

  int num_cells() const noexcept { return grid_.num_cells(); }
  int num_fracture_cells() const noexcept { return static_cast<int>(frac_cell_.size()); }
  int num_unknowns() const noexcept { return num_cells() + num_fracture_cells(); }

  /// Global fracture cell hosted by a face, or kNone.
  int hosted_fracture_cell(int face) const { return host_.at(static_cast<std::size_t>(face)); }

  const FractureCell& fracture_cell(int g) const {
    auto [f, k] = frac_cell_.at(static_cast<std::size_t>(g));
    return fractures_[static_cast<std::size_t>(f)].cells[static_cast<std::size_t>(k)];
  }
  /// (fracture index, local cell index) of a global fracture cell.
  std::pair<int, int> fracture_cell_location(int g) const {
    return frac_cell_.at(static_cast<std::size_t>(g));
  }
  const CouplingEntry& coupling_of(int g) const { return couplings_.at(static_cast<std::size_t>(g)); }

  double total_fracture_length() const noexcept {
    double l = 0.0;
    for (const auto& fr : fractures_) l += fr.length();
    return l;
  }

 private:
  void add(const std::vector<int>& path) {
    auto emb = embed_fracture(grid_, path, static_cast<int>(fractures_.size()),
                              num_fracture_cells());
    for (const auto& c : emb.fracture.cells)
      if (host_[static_cast<std::size_t>(c.host_face)] != kNone)
        throw TopologyError("face " + std::to_string(c.host_face) + " already hosts a fracture");
    const int f = static_cast<int>(fractures_.size());
    for (int k = 0; k < emb.fracture.size(); ++k) {
      const auto& c = emb.fracture.cells[static_cast<std::size_t>(k)];
      host_[static_cast<std::size_t>(c.host_face)] = emb.fracture.offset + k;
      frac_cell_.emplace_back(f, k);
    }
    couplings_.insert(couplings_.end(), emb.couplings.begin(), emb.couplings.end());
    fractures_.push_back(std::move(emb.fracture));
  }

  MatrixGrid grid_;
  std::vector<int> host_;
  std::vector<FractureGrid> fractures_;
  std::vector<CouplingEntry> couplings_;
  std::vector<std::pair<int, int>> frac_cell_;
};

struct FaceGeometry {
  double area = 0.0;
  /// Centre-to-face distances of the neg and pos cells (absent on the outside).
  std::array<std::optional<double>, 2> half_distances;
};

inline FaceGeometry face_geometry(const MixedDimMesh& mesh, int face) {
  const MatrixGrid& g = mesh.grid();
  const Face& f = g.face(face);
  FaceGeometry out;
  out.area = f.area;
  const int a = index(f.normal);
  if (f.neg != kNone) out.half_distances[0] = 0.5 * g.cell_size(f.neg)[a];
  if (f.pos != kNone) out.half_distances[1] = 0.5 * g.cell_size(f.pos)[a];
  return out;
}

}  // namespace rfrac
