#pragma once

#include <set>

#include "mdest/domain.hpp"
#include "mdest/grid.hpp"

namespace mdest {

namespace detail {

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline void insert_line(std::vector<double>& lines, double v, double tol) {
  for (double x : lines)
    if (near(x, v, tol)) return;
  lines.push_back(v);
}

struct AxisSegment {
  bool vertical = false;
  double c = 0;        // the fixed coordinate
  double lo = 0, hi = 0; // extent along the segment
};

inline AxisSegment classify_axis_segment(const Vec2& a, const Vec2& b, double tol) {
  AxisSegment s;
  if (near(a.x(), b.x(), tol)) {
    s.vertical = true;
    s.c = a.x();
    s.lo = std::min(a.y(), b.y());
    s.hi = std::max(a.y(), b.y());
  } else if (near(a.y(), b.y(), tol)) {
    s.vertical = false;
    s.c = a.y();
    s.lo = std::min(a.x(), b.x());
    s.hi = std::max(a.x(), b.x());
  } else {
    throw MeshGenerationError("built-in mesher supports axis-aligned interface segments only");
  }
  return s;
}

/// Disjoint-set on a small local index range.
struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

inline const BoundaryPiece* resolve_piece(const Subdomain& sub, const Vec2& m, double tol) {
  for (const BoundaryPiece& p : sub.boundary) {
    if (p.rest) continue;
    if (sub.dim == 2 || (p.b - p.a).norm() > tol) {
      if (point_on_segment(m, p.a, p.b, tol)) return &p;
    } else {
      if ((m - p.a).norm() <= tol) return &p;
    }
  }
  for (const BoundaryPiece& p : sub.boundary)
    if (p.rest) return &p;
  return nullptr;
}

} // namespace detail

/// Criss-cross triangulation of an axis-aligned rectangular 2D subdomain.
/// Grid lines are the uniform spacing-h lines merged with every coordinate an
/// interface segment pins down. Interface segments in the interior become
/// slits: mesh nodes along them are duplicated per connectivity component so
/// the two sides (four at crossings) are topologically separate.
inline SimplicialGrid mesh_rectangle_crisscross(const Subdomain& sub, const MdDomain& domain,
                                                double h, std::vector<double>* xs_out = nullptr,
                                                std::vector<double>* ys_out = nullptr) {
  if (sub.dim != 2) throw MeshGenerationError("mesh_rectangle_crisscross needs a 2D subdomain");
  if (h <= 0) throw MeshGenerationError("mesh size must be positive");
  const double tol = domain.eps_geom;
  std::vector<Vec2> poly = sub.polygon;
  const Aabb box = aabb_of(poly.begin(), poly.end());
  const double x0 = box.lo.x(), x1 = box.hi.x(), y0 = box.lo.y(), y1 = box.hi.y();
  if (poly.size() != 4) throw MeshGenerationError("built-in mesher supports rectangles only");
  for (const Vec2& v : poly) {
    const bool on_x = detail::near(v.x(), x0, tol) || detail::near(v.x(), x1, tol);
    const bool on_y = detail::near(v.y(), y0, tol) || detail::near(v.y(), y1, tol);
    if (!on_x || !on_y) throw MeshGenerationError("built-in mesher supports rectangles only");
  }

  std::vector<double> xs, ys;
  const int nx = std::max(1, static_cast<int>(std::lround((x1 - x0) / h)));
  const int ny = std::max(1, static_cast<int>(std::lround((y1 - y0) / h)));
  for (int i = 0; i <= nx; ++i) xs.push_back(x0 + (x1 - x0) * i / nx);
  for (int j = 0; j <= ny; ++j) ys.push_back(y0 + (y1 - y0) * j / ny);

  std::vector<std::pair<int, detail::AxisSegment>> my_ifaces; // interface id + geometry
  for (const Interface& ifc : domain.interfaces) {
    if (ifc.hi != sub.id || ifc.dim != 1) continue;
    const auto seg = detail::classify_axis_segment(ifc.a, ifc.b, tol);
    if (seg.vertical) {
      detail::insert_line(xs, seg.c, tol);
      detail::insert_line(ys, seg.lo, tol);
      detail::insert_line(ys, seg.hi, tol);
    } else {
      detail::insert_line(ys, seg.c, tol);
      detail::insert_line(xs, seg.lo, tol);
      detail::insert_line(xs, seg.hi, tol);
    }
    my_ifaces.emplace_back(ifc.id, seg);
  }
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  if (xs_out) *xs_out = xs;
  if (ys_out) *ys_out = ys;

  const int Nx = static_cast<int>(xs.size()), Ny = static_cast<int>(ys.size());
  SimplicialGrid g;
  g.dim = 2;
  for (int j = 0; j < Ny; ++j)
    for (int i = 0; i < Nx; ++i) g.nodes.emplace_back(xs[i], ys[j]);
  auto gid = [&](int i, int j) { return j * Nx + i; };
  for (int qj = 0; qj + 1 < Ny; ++qj) {
    for (int qi = 0; qi + 1 < Nx; ++qi) {
      const int c = g.num_nodes();
      g.nodes.emplace_back(0.5 * (xs[qi] + xs[qi + 1]), 0.5 * (ys[qj] + ys[qj + 1]));
      const int bl = gid(qi, qj), br = gid(qi + 1, qj), tr = gid(qi + 1, qj + 1),
                tl = gid(qi, qj + 1);
      g.cells.push_back({bl, br, c});
      g.cells.push_back({br, tr, c});
      g.cells.push_back({tr, tl, c});
      g.cells.push_back({tl, bl, c});
    }
  }

  // Slit edges: grid edges lying on an interface segment interior to the rectangle.
  std::set<std::pair<int, int>> slit_edges;
  for (const auto& [ifc_id, seg] : my_ifaces) {
    const bool on_boundary =
        seg.vertical ? (detail::near(seg.c, x0, tol) || detail::near(seg.c, x1, tol))
                     : (detail::near(seg.c, y0, tol) || detail::near(seg.c, y1, tol));
    if (on_boundary) continue;
    if (seg.vertical) {
      int iv = -1;
      for (int i = 0; i < Nx; ++i)
        if (detail::near(xs[i], seg.c, tol)) iv = i;
      for (int j = 0; j + 1 < Ny; ++j) {
        if (ys[j] >= seg.lo - tol && ys[j + 1] <= seg.hi + tol)
          slit_edges.insert(std::minmax(gid(iv, j), gid(iv, j + 1)));
      }
    } else {
      int jv = -1;
      for (int j = 0; j < Ny; ++j)
        if (detail::near(ys[j], seg.c, tol)) jv = j;
      for (int i = 0; i + 1 < Nx; ++i) {
        if (xs[i] >= seg.lo - tol && xs[i + 1] <= seg.hi + tol)
          slit_edges.insert(std::minmax(gid(i, jv), gid(i + 1, jv)));
      }
    }
  }

  if (!slit_edges.empty()) {
    // canon maps duplicated node ids back to their original for slit lookups.
    std::vector<int> canon(g.num_nodes());
    for (int n = 0; n < g.num_nodes(); ++n) canon[n] = n;
    std::set<int> slit_nodes;
    for (const auto& [a, b] : slit_edges) {
      slit_nodes.insert(a);
      slit_nodes.insert(b);
    }
    std::vector<std::vector<int>> node_cells(g.num_nodes());
    for (int c = 0; c < g.num_cells(); ++c)
      for (int k = 0; k < 3; ++k) node_cells[g.cells[c][k]].push_back(c);

    auto is_slit = [&](int a, int b) {
      return slit_edges.count(std::minmax(canon[a], canon[b])) > 0;
    };

    for (int v : slit_nodes) {
      const std::vector<int>& inc = node_cells[v];
      detail::UnionFind uf(static_cast<int>(inc.size()));
      std::map<int, std::vector<int>> by_other; // shared edge (v, w) -> local cell ids
      for (size_t li = 0; li < inc.size(); ++li) {
        const auto& cn = g.cells[inc[li]];
        for (int k = 0; k < 3; ++k) {
          if (cn[k] == v) continue;
          by_other[cn[k]].push_back(static_cast<int>(li));
        }
      }
      for (const auto& [w, locs] : by_other) {
        if (locs.size() == 2 && !is_slit(v, w)) uf.unite(locs[0], locs[1]);
      }
      std::map<int, int> comp_node; // component root -> node id serving it
      for (size_t li = 0; li < inc.size(); ++li) {
        const int root = uf.find(static_cast<int>(li));
        auto it = comp_node.find(root);
        int nid;
        if (it == comp_node.end()) {
          nid = comp_node.empty() ? v : g.num_nodes();
          if (nid != v) {
            g.nodes.push_back(g.nodes[v]);
            canon.push_back(v);
          }
          comp_node[root] = nid;
        } else {
          nid = it->second;
        }
        if (nid != v) {
          auto& cn = g.cells[inc[li]];
          for (int k = 0; k < 3; ++k)
            if (cn[k] == v) cn[k] = nid;
        }
      }
    }
  }

  g.finalize();

  // Tag boundary faces: interface side test first, then declared pieces.
  for (Face& f : g.faces) {
    if (!f.is_boundary()) continue;
    const Vec2 m = 0.5 * (g.nodes[f.nodes[0]] + g.nodes[f.nodes[1]]);
    const Vec2 bc = cell_barycenter(g, f.cells[0]);
    bool matched = false;
    for (const auto& [ifc_id, seg] : my_ifaces) {
      const Interface& ifc = domain.interface_by_id(ifc_id);
      if (point_on_segment(g.nodes[f.nodes[0]], ifc.a, ifc.b, tol) &&
          point_on_segment(g.nodes[f.nodes[1]], ifc.a, ifc.b, tol) &&
          (bc - m).dot(ifc.side_normal) > 0) {
        f.tag = FaceTag::internal;
        f.interface_id = ifc_id;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    const BoundaryPiece* p = detail::resolve_piece(sub, m, tol);
    if (!p) throw MeshGenerationError("uncovered boundary face in 2D subdomain " +
                                      std::to_string(sub.id));
    f.tag = p->type == BcType::dirichlet ? FaceTag::dirichlet : FaceTag::neumann;
  }
  return g;
}

/// Partition of a 1D subdomain with the given arc-length parameters in [0,1].
/// Endpoint faces are tagged by point interfaces first, then declared pieces.
inline SimplicialGrid mesh_segment_subdomain(const Subdomain& sub, const MdDomain& domain,
                                             const std::vector<double>& params) {
  if (sub.dim != 1) throw MeshGenerationError("mesh_segment_subdomain needs a 1D subdomain");
  const double tol = domain.eps_geom;
  SimplicialGrid g = make_segment_grid(sub.seg_a, sub.seg_b, params);
  for (Face& f : g.faces) {
    if (!f.is_boundary()) continue;
    const Vec2 p = g.nodes[f.nodes[0]];
    bool matched = false;
    for (int j : domain.check_S(sub.id)) {
      const Interface& ifc = domain.interface_by_id(j);
      if (ifc.dim == 0 && (ifc.a - p).norm() <= tol) {
        f.tag = FaceTag::internal;
        f.interface_id = j;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    const BoundaryPiece* piece = detail::resolve_piece(sub, p, tol);
    if (!piece) throw MeshGenerationError("uncovered endpoint of 1D subdomain " +
                                          std::to_string(sub.id));
    f.tag = piece->type == BcType::dirichlet ? FaceTag::dirichlet : FaceTag::neumann;
  }
  return g;
}

/// Internal-boundary grid of an interface: the faces of the higher-dimensional
/// grid on the interface geometry, restricted to the correct side. Keeps the
/// originating face ids and (for dim 1) the parent node ids so traces can be
/// read off nodally.
struct InternalBoundary {
  SimplicialGrid grid;
  std::vector<int> face_ids; // per ib cell: face id in the parent grid
  std::vector<int> node_map; // per ib node: node id in the parent grid
};

inline InternalBoundary extract_internal_boundary_grid(const SimplicialGrid& hi_grid,
                                                       const Interface& ifc, double tol) {
  InternalBoundary ib;
  if (ifc.dim == 0) {
    int found = -1;
    for (int f = 0; f < hi_grid.num_faces(); ++f) {
      const Face& face = hi_grid.faces[f];
      if (!face.is_boundary()) continue;
      if ((hi_grid.nodes[face.nodes[0]] - ifc.a).norm() <= tol) {
        found = f;
        break;
      }
    }
    if (found < 0) throw EmptyBoundaryError("no face at point interface");
    ib.grid = make_point_grid(ifc.a);
    ib.face_ids = {found};
    ib.node_map = {hi_grid.faces[found].nodes[0]};
    return ib;
  }

  const Vec2 t = (ifc.b - ifc.a).normalized();
  struct Entry {
    double param;
    int face;
  };
  std::vector<Entry> entries;
  for (int f = 0; f < hi_grid.num_faces(); ++f) {
    const Face& face = hi_grid.faces[f];
    if (!face.is_boundary()) continue;
    const Vec2 p0 = hi_grid.nodes[face.nodes[0]], p1 = hi_grid.nodes[face.nodes[1]];
    if (!point_on_segment(p0, ifc.a, ifc.b, tol) || !point_on_segment(p1, ifc.a, ifc.b, tol))
      continue;
    const Vec2 m = 0.5 * (p0 + p1);
    const Vec2 bc = cell_barycenter(hi_grid, face.cells[0]);
    if ((bc - m).dot(ifc.side_normal) <= 0) continue;
    entries.push_back({(m - ifc.a).dot(t), f});
  }
  if (entries.empty()) throw EmptyBoundaryError("no faces on interface segment");
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.param < b.param; });

  ib.grid.dim = 1;
  ib.grid.tangent = t;
  std::map<int, int> node_of; // parent node id -> ib node id
  auto add_node = [&](int parent) {
    auto it = node_of.find(parent);
    if (it != node_of.end()) return it->second;
    const int nid = ib.grid.num_nodes();
    ib.grid.nodes.push_back(hi_grid.nodes[parent]);
    ib.node_map.push_back(parent);
    node_of[parent] = nid;
    return nid;
  };
  for (const Entry& e : entries) {
    const Face& face = hi_grid.faces[e.face];
    int a = face.nodes[0], b = face.nodes[1];
    if ((hi_grid.nodes[b] - hi_grid.nodes[a]).dot(t) < 0) std::swap(a, b);
    ib.grid.cells.push_back({add_node(a), add_node(b), -1});
    ib.face_ids.push_back(e.face);
  }
  ib.grid.finalize();
  return ib;
}

/// All grids of one discretized mixed-dimensional problem. Vectors are indexed
/// by position in the domain's subdomain/interface lists.
struct GridBundle {
  const MdDomain* domain = nullptr;
  double target_h = 0;
  std::vector<SimplicialGrid> subgrids;
  std::vector<SimplicialGrid> interface_grids;
  std::vector<InternalBoundary> internal_boundaries;
};

/// Builds the matching bundle: every interface grid, internal-boundary grid,
/// and lower-dimensional subdomain grid share breakpoints.
inline GridBundle generate_matching_bundle(const MdDomain& domain, double h) {
  if (h <= 0) throw MeshGenerationError("mesh size must be positive");
  const double tol = domain.eps_geom;
  GridBundle b;
  b.domain = &domain;
  b.target_h = h;
  b.subgrids.resize(domain.subdomains.size());

  std::vector<std::vector<double>> sub_xs(domain.subdomains.size()),
      sub_ys(domain.subdomains.size());
  for (size_t k = 0; k < domain.subdomains.size(); ++k) {
    const Subdomain& s = domain.subdomains[k];
    if (s.dim == 2)
      b.subgrids[k] = mesh_rectangle_crisscross(s, domain, h, &sub_xs[k], &sub_ys[k]);
    else if (s.dim == 0)
      b.subgrids[k] = make_point_grid(s.point);
  }
  // 1D subdomains inherit breakpoints from a hosting 2D mesh so the matching
  // bundle is exactly matching; hosts must agree where there are several.
  for (size_t k = 0; k < domain.subdomains.size(); ++k) {
    const Subdomain& s = domain.subdomains[k];
    if (s.dim != 1) continue;
    const double len = (s.seg_b - s.seg_a).norm();
    std::vector<double> params;
    bool have_host = false;
    for (int j : domain.hat_S(s.id)) {
      const Interface& ifc = domain.interface_by_id(j);
      if (ifc.dim != 1) continue;
      const int hk = domain.sub_index.at(ifc.hi);
      const auto seg = detail::classify_axis_segment(s.seg_a, s.seg_b, tol);
      const std::vector<double>& lines = seg.vertical ? sub_ys[hk] : sub_xs[hk];
      std::vector<double> cand;
      for (double v : lines) {
        if (v >= seg.lo - tol && v <= seg.hi + tol) {
          const Vec2 p = seg.vertical ? Vec2(seg.c, v) : Vec2(v, seg.c);
          cand.push_back((p - s.seg_a).dot(s.seg_tangent()) / len);
        }
      }
      std::sort(cand.begin(), cand.end());
      if (!have_host) {
        params = cand;
        have_host = true;
      } else if (params.size() != cand.size()) {
        throw MeshGenerationError("hosts disagree on fracture breakpoints");
      }
    }
    if (!have_host) {
      const int n = std::max(1, static_cast<int>(std::lround(len / h)));
      for (int i = 0; i <= n; ++i) params.push_back(double(i) / n);
    }
    b.subgrids[k] = mesh_segment_subdomain(s, domain, params);
  }

  b.interface_grids.resize(domain.interfaces.size());
  b.internal_boundaries.resize(domain.interfaces.size());
  for (size_t q = 0; q < domain.interfaces.size(); ++q) {
    const Interface& ifc = domain.interfaces[q];
    const SimplicialGrid& lo_grid = b.subgrids[domain.sub_index.at(ifc.lo)];
    if (ifc.dim == 0) {
      b.interface_grids[q] = make_point_grid(ifc.a);
    } else {
      const double len = (ifc.b - ifc.a).norm();
      std::vector<double> params;
      for (const Vec2& p : lo_grid.nodes) params.push_back((p - ifc.a).dot((ifc.b - ifc.a)) / (len * len));
      std::sort(params.begin(), params.end());
      b.interface_grids[q] = make_segment_grid(ifc.a, ifc.b, params);
    }
    b.internal_boundaries[q] =
        extract_internal_boundary_grid(b.subgrids[domain.sub_index.at(ifc.hi)], ifc, tol);
  }
  return b;
}

/// Non-matching configuration per the verification protocol: every 1D
/// subdomain grid shifts its internal nodes by half its mean cell diameter
/// along direction * tangent, interface grids shift oppositely,
/// internal-boundary grids and bulk grids stay.
inline GridBundle perturb_bundle(const GridBundle& in, int direction) {
  GridBundle out = in;
  const MdDomain& d = *in.domain;
  for (size_t k = 0; k < d.subdomains.size(); ++k) {
    const Subdomain& s = d.subdomains[k];
    if (s.dim != 1 || in.subgrids[k].num_cells() < 2) continue;
    const double delta = 0.5 * mean_cell_diameter(in.subgrids[k]);
    out.subgrids[k] =
        perturb_internal_nodes(in.subgrids[k], double(direction) * s.seg_tangent(), delta);
  }
  for (size_t q = 0; q < d.interfaces.size(); ++q) {
    const Interface& ifc = d.interfaces[q];
    if (ifc.dim != 1 || in.interface_grids[q].num_cells() < 2) continue;
    const double delta = 0.5 * mean_cell_diameter(in.interface_grids[q]);
    const Vec2 t = (ifc.b - ifc.a).normalized();
    out.interface_grids[q] =
        perturb_internal_nodes(in.interface_grids[q], -double(direction) * t, delta);
  }
  return out;
}

} // namespace mdest
