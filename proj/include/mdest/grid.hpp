#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "mdest/geometry.hpp"

namespace mdest {

enum class FaceTag : uint8_t { interior, dirichlet, neumann, internal };

/// Codimension-one entity of a grid: an edge of a 2D grid or a node of a 1D
/// grid. Point faces carry measure 1 (counting measure) and use the grid
/// tangent to orient their normal.
struct Face {
  std::array<int, 2> nodes{-1, -1};
  std::array<int, 2> cells{-1, -1};  // boundary faces: cells[1] == -1
  std::array<int8_t, 2> sign{0, 0};  // +1 where `normal` points out of cells[k]
  Vec2 normal{0, 0};
  double measure = 1.0;
  FaceTag tag = FaceTag::interior;
  int interface_id = -1;
  bool is_boundary() const { return cells[1] < 0; }
  int num_nodes() const { return nodes[1] < 0 ? 1 : 2; }
};

/// Conforming simplicial grid of intrinsic dimension 0, 1, or 2 embedded in
/// the plane. Cells store dim+1 node ids; unused slots are -1. Faces and the
/// cell->face map are derived by finalize().
struct SimplicialGrid {
  int dim = 2;
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> cells;
  std::vector<Face> faces;
  std::vector<std::array<int, 3>> cell_faces;
  Vec2 tangent{1, 0}; // dim-1 grids: unit tangent; orients point-face normals

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_cells() const { return static_cast<int>(cells.size()); }
  int num_faces() const { return static_cast<int>(faces.size()); }
  int verts_per_cell() const { return dim + 1; }

  void finalize();
};

inline double cell_measure(const SimplicialGrid& g, int c) {
  const auto& cn = g.cells[c];
  if (g.dim == 0) return 1.0;
  if (g.dim == 1) return (g.nodes[cn[1]] - g.nodes[cn[0]]).norm();
  return triangle_area(g.nodes[cn[0]], g.nodes[cn[1]], g.nodes[cn[2]]);
}

inline double cell_diameter(const SimplicialGrid& g, int c) {
  const auto& cn = g.cells[c];
  if (g.dim == 0) return 0.0;
  if (g.dim == 1) return (g.nodes[cn[1]] - g.nodes[cn[0]]).norm();
  const Vec2 a = g.nodes[cn[0]], b = g.nodes[cn[1]], cc = g.nodes[cn[2]];
  return std::max({(b - a).norm(), (cc - b).norm(), (a - cc).norm()});
}

inline Vec2 cell_barycenter(const SimplicialGrid& g, int c) {
  Vec2 s(0, 0);
  for (int k = 0; k <= g.dim; ++k) s += g.nodes[g.cells[c][k]];
  return s / double(g.dim + 1);
}

inline double grid_measure(const SimplicialGrid& g) {
  double s = 0;
  for (int c = 0; c < g.num_cells(); ++c) s += cell_measure(g, c);
  return s;
}

inline void SimplicialGrid::finalize() {
  faces.clear();
  cell_faces.assign(cells.size(), {-1, -1, -1});
  if (dim == 0) return;

  if (dim == 1) {
    // Order cell nodes along the tangent so local face 1 is the downstream end.
    for (auto& cn : cells) {
      if ((nodes[cn[1]] - nodes[cn[0]]).dot(tangent) < 0) std::swap(cn[0], cn[1]);
    }
    std::map<int, int> by_node;
    for (int c = 0; c < num_cells(); ++c) {
      for (int k = 0; k < 2; ++k) {
        const int n = cells[c][k];
        auto it = by_node.find(n);
        if (it == by_node.end()) {
          Face f;
          f.nodes = {n, -1};
          f.cells[0] = c;
          // Outward from cells[0]: +tangent at the downstream node, else -tangent.
          f.normal = (k == 1) ? tangent : Vec2(-tangent);
          f.sign[0] = 1;
          f.measure = 1.0;
          by_node[n] = num_faces();
          faces.push_back(f);
          cell_faces[c][k] = by_node[n];
        } else {
          Face& f = faces[it->second];
          if (f.cells[1] >= 0) throw InconsistentBundleError("node shared by >2 segment cells");
          f.cells[1] = c;
          f.sign[1] = -1;
          cell_faces[c][k] = it->second;
        }
      }
    }
    return;
  }

  // dim == 2: enforce CCW cells, then collect edges.
  for (auto& cn : cells) {
    if (signed_area(nodes[cn[0]], nodes[cn[1]], nodes[cn[2]]) < 0) std::swap(cn[1], cn[2]);
  }
  std::map<std::pair<int, int>, int> by_edge;
  for (int c = 0; c < num_cells(); ++c) {
    for (int k = 0; k < 3; ++k) {
      const int a = cells[c][k], b = cells[c][(k + 1) % 3];
      const auto key = std::minmax(a, b);
      auto it = by_edge.find(key);
      if (it == by_edge.end()) {
        Face f;
        f.nodes = {a, b};
        f.cells[0] = c;
        const Vec2 d = nodes[b] - nodes[a];
        f.measure = d.norm();
        f.normal = rot_cw(d) / f.measure; // outward from c (CCW traversal)
        f.sign[0] = 1;
        by_edge[key] = num_faces();
        faces.push_back(f);
        cell_faces[c][k] = by_edge[key];
      } else {
        Face& f = faces[it->second];
        if (f.cells[1] >= 0) throw InconsistentBundleError("edge shared by >2 cells");
        f.cells[1] = c;
        f.sign[1] = -1;
        cell_faces[c][k] = it->second;
      }
    }
  }
}

/// Max over cells of diameter / inradius. 1D and 0D cells use the value 1 by
/// convention, so the bound is driven by triangle quality only.
inline double shape_regularity(const SimplicialGrid& g) {
  if (g.dim < 2) return g.num_cells() > 0 ? 1.0 : 0.0;
  double worst = 0.0;
  for (int c = 0; c < g.num_cells(); ++c) {
    const auto& cn = g.cells[c];
    const Vec2 a = g.nodes[cn[0]], b = g.nodes[cn[1]], cc = g.nodes[cn[2]];
    const double area = triangle_area(a, b, cc);
    const double per = (b - a).norm() + (cc - b).norm() + (a - cc).norm();
    const double inradius = 2.0 * area / per;
    if (inradius <= 0) throw InconsistentBundleError("degenerate cell in shape_regularity");
    worst = std::max(worst, cell_diameter(g, c) / inradius);
  }
  return worst;
}

inline double mean_cell_diameter(const SimplicialGrid& g) {
  if (g.num_cells() == 0) return 0.0;
  double s = 0;
  for (int c = 0; c < g.num_cells(); ++c) s += cell_diameter(g, c);
  return s / g.num_cells();
}

inline std::vector<bool> boundary_node_flags(const SimplicialGrid& g) {
  std::vector<bool> flag(g.nodes.size(), false);
  for (const Face& f : g.faces) {
    if (!f.is_boundary()) continue;
    for (int k = 0; k < f.num_nodes(); ++k) flag[f.nodes[k]] = true;
  }
  return flag;
}

/// Translate all non-boundary nodes by magnitude * direction. Connectivity and
/// tags are preserved; cells that lose positive measure raise
/// InvalidPerturbationError. The input grid is untouched.
inline SimplicialGrid perturb_internal_nodes(const SimplicialGrid& g, const Vec2& direction,
                                             double magnitude) {
  SimplicialGrid out = g;
  const Vec2 shift = magnitude * direction;
  const auto on_boundary = boundary_node_flags(g);
  for (int n = 0; n < g.num_nodes(); ++n) {
    if (!on_boundary[n]) out.nodes[n] += shift;
  }
  const double scale = mean_cell_diameter(g);
  for (int c = 0; c < out.num_cells(); ++c) {
    double m = cell_measure(out, c);
    if (out.dim == 1) {
      // Signed along the tangent: node order must survive the shift.
      const auto& cn = out.cells[c];
      m = (out.nodes[cn[1]] - out.nodes[cn[0]]).dot(out.tangent);
    } else if (out.dim == 2) {
      const auto& cn = out.cells[c];
      m = signed_area(out.nodes[cn[0]], out.nodes[cn[1]], out.nodes[cn[2]]);
    }
    if (m <= 1e-12 * scale) throw InvalidPerturbationError("perturbation collapses a cell");
  }
  // Face geometry (normals, measures) must be refreshed; tags are kept per face
  // because connectivity is unchanged.
  std::vector<FaceTag> tags;
  std::vector<int> ifids;
  for (const Face& f : g.faces) {
    tags.push_back(f.tag);
    ifids.push_back(f.interface_id);
  }
  out.finalize();
  if (out.num_faces() != g.num_faces())
    throw InvalidPerturbationError("perturbation changed face connectivity");
  for (int f = 0; f < out.num_faces(); ++f) {
    out.faces[f].tag = tags[f];
    out.faces[f].interface_id = ifids[f];
  }
  return out;
}

/// Uniform-bin point locator. Ties (points on shared faces) resolve to the
/// lowest cell index.
class CellLocator {
public:
  explicit CellLocator(const SimplicialGrid& g, double tol = 1e-10) : g_(&g), tol_(tol) {
    if (g.num_cells() == 0) return;
    std::vector<Vec2> pts = g.nodes;
    box_ = aabb_of(pts.begin(), pts.end());
    const Vec2 ext = (box_.hi - box_.lo).cwiseMax(Vec2(1e-12, 1e-12));
    const int target = std::max(1, static_cast<int>(std::sqrt(double(g.num_cells()))));
    nx_ = g.dim >= 1 ? target : 1;
    ny_ = g.dim == 2 ? target : 1;
    hx_ = ext.x() / nx_;
    hy_ = ext.y() / ny_;
    bins_.assign(static_cast<size_t>(nx_) * ny_, {});
    for (int c = 0; c < g.num_cells(); ++c) {
      std::vector<Vec2> vs;
      for (int k = 0; k <= g.dim; ++k) vs.push_back(g.nodes[g.cells[c][k]]);
      const Aabb cb = aabb_of(vs.begin(), vs.end());
      const auto [i0, j0] = bin_of(cb.lo - Vec2(tol, tol));
      const auto [i1, j1] = bin_of(cb.hi + Vec2(tol, tol));
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) bins_[j * nx_ + i].push_back(c);
    }
  }

  /// Returns the containing cell id or -1.
  int locate(const Vec2& p) const {
    if (!g_ || g_->num_cells() == 0) return -1;
    const auto [i, j] = bin_of(p);
    for (int c : bins_[j * nx_ + i]) {
      if (contains(c, p)) return c;
    }
    return -1;
  }

private:
  std::pair<int, int> bin_of(const Vec2& p) const {
    int i = static_cast<int>((p.x() - box_.lo.x()) / hx_);
    int j = static_cast<int>((p.y() - box_.lo.y()) / hy_);
    return {std::clamp(i, 0, nx_ - 1), std::clamp(j, 0, ny_ - 1)};
  }
  bool contains(int c, const Vec2& p) const {
    const auto& cn = g_->cells[c];
    if (g_->dim == 0) return (p - g_->nodes[cn[0]]).norm() <= tol_;
    if (g_->dim == 1) {
      return point_on_segment(p, g_->nodes[cn[0]], g_->nodes[cn[1]], tol_);
    }
    return point_in_triangle(p, g_->nodes[cn[0]], g_->nodes[cn[1]], g_->nodes[cn[2]], tol_);
  }

  const SimplicialGrid* g_ = nullptr;
  double tol_ = 1e-10;
  Aabb box_;
  int nx_ = 1, ny_ = 1;
  double hx_ = 1, hy_ = 1;
  std::vector<std::vector<int>> bins_;
};

/// Convenience builders used across tests and meshing.
inline SimplicialGrid make_segment_grid(const Vec2& a, const Vec2& b,
                                        const std::vector<double>& params) {
  SimplicialGrid g;
  g.dim = 1;
  g.tangent = (b - a).normalized();
  for (double t : params) g.nodes.push_back(a + t * (b - a));
  for (size_t i = 0; i + 1 < params.size(); ++i)
    g.cells.push_back({static_cast<int>(i), static_cast<int>(i + 1), -1});
  g.finalize();
  return g;
}

inline SimplicialGrid make_point_grid(const Vec2& p) {
  SimplicialGrid g;
  g.dim = 0;
  g.nodes.push_back(p);
  g.cells.push_back({0, -1, -1});
  g.finalize();
  return g;
}

} // namespace mdest
