#pragma once

#include "mdest/grid.hpp"

namespace mdest {

/// Cell of a transfer grid: a simplex contained in exactly one cell of each
/// parent grid.
struct TransferCell {
  std::array<Vec2, 3> verts;
  int nverts = 0;
  int src = -1; // parent cell in the source grid
  int dst = -1; // parent cell in the destination grid
  double measure = 0;
};

/// Common refinement of two grids covering the same geometry. Nodes collect
/// both parents' nodes plus clip intersection points.
struct TransferGrid {
  int dim = 1;
  const SimplicialGrid* src = nullptr;
  const SimplicialGrid* dst = nullptr;
  std::vector<Vec2> nodes;
  std::vector<TransferCell> cells;

  int num_cells() const { return static_cast<int>(cells.size()); }
  double total_measure() const {
    double s = 0;
    for (const TransferCell& c : cells) s += c.measure;
    return s;
  }
};

namespace detail {

inline void add_transfer_node(TransferGrid& tg, const Vec2& p, double weld) {
  for (const Vec2& q : tg.nodes)
    if ((q - p).norm() <= weld) return;
  tg.nodes.push_back(p);
}

} // namespace detail

inline TransferGrid build_transfer_0d(const SimplicialGrid& src, const SimplicialGrid& dst) {
  if (src.dim != 0 || dst.dim != 0)
    throw CoverageMismatchError("build_transfer_0d needs two point grids");
  const Vec2 p = src.nodes[0];
  if ((p - dst.nodes[0]).norm() > 1e-9 * (1.0 + p.norm()))
    throw CoverageMismatchError("point grids do not coincide");
  TransferGrid tg;
  tg.dim = 0;
  tg.src = &src;
  tg.dst = &dst;
  tg.nodes.push_back(p);
  TransferCell c;
  c.verts[0] = p;
  c.nverts = 1;
  c.src = 0;
  c.dst = 0;
  c.measure = 1.0;
  tg.cells.push_back(c);
  return tg;
}

/// Sorted breakpoint union of two segment grids covering the same segment.
/// Subsegments below 1e-12 of the minimum parent cell length are welded away.
inline TransferGrid build_transfer_1d(const SimplicialGrid& src, const SimplicialGrid& dst) {
  if (src.dim != 1 || dst.dim != 1)
    throw CoverageMismatchError("build_transfer_1d needs two segment grids");
  TransferGrid tg;
  tg.dim = 1;
  tg.src = &src;
  tg.dst = &dst;

  const Vec2 t = src.tangent;
  // Anchor at the smallest parameter over the source nodes.
  double org = std::numeric_limits<double>::max();
  Vec2 origin(0, 0);
  for (const Vec2& p : src.nodes) {
    const double v = p.dot(t);
    if (v < org) {
      org = v;
      origin = p;
    }
  }
  auto param = [&](const Vec2& p) { return (p - origin).dot(t); };

  struct Interval {
    double a, b;
    int cell;
  };
  auto intervals_of = [&](const SimplicialGrid& g) {
    std::vector<Interval> iv;
    for (int c = 0; c < g.num_cells(); ++c) {
      double a = param(g.nodes[g.cells[c][0]]);
      double b = param(g.nodes[g.cells[c][1]]);
      if (a > b) std::swap(a, b);
      iv.push_back({a, b, c});
    }
    std::sort(iv.begin(), iv.end(), [](const Interval& x, const Interval& y) { return x.a < y.a; });
    return iv;
  };
  const auto src_iv = intervals_of(src);
  const auto dst_iv = intervals_of(dst);

  double min_len = std::numeric_limits<double>::max();
  for (const auto& iv : src_iv) min_len = std::min(min_len, iv.b - iv.a);
  for (const auto& iv : dst_iv) min_len = std::min(min_len, iv.b - iv.a);
  const double weld = 1e-12 * min_len;
  const double total = src_iv.back().b - src_iv.front().a;
  const double cover_tol = 1e-9 * total;
  if (std::abs(dst_iv.front().a - src_iv.front().a) > cover_tol ||
      std::abs(dst_iv.back().b - src_iv.back().b) > cover_tol)
    throw CoverageMismatchError("segment grids do not cover the same extent");

  std::vector<double> cuts;
  for (const auto& g : {std::cref(src), std::cref(dst)})
    for (const Vec2& p : g.get().nodes) cuts.push_back(param(p));
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> uniq;
  for (double c : cuts)
    if (uniq.empty() || c - uniq.back() > weld) uniq.push_back(c);

  auto find_parent = [&](const std::vector<Interval>& iv, double mid) {
    int best = -1;
    for (const auto& e : iv) {
      if (mid >= e.a - cover_tol && mid <= e.b + cover_tol) {
        if (best < 0 || e.cell < best) best = e.cell;
      }
    }
    if (best < 0) throw CoverageMismatchError("subsegment midpoint outside a parent grid");
    return best;
  };

  for (double u : uniq) detail::add_transfer_node(tg, origin + u * t, weld);
  for (size_t i = 0; i + 1 < uniq.size(); ++i) {
    const double a = uniq[i], b = uniq[i + 1];
    TransferCell c;
    c.verts[0] = origin + a * t;
    c.verts[1] = origin + b * t;
    c.nverts = 2;
    c.measure = b - a;
    const double mid = 0.5 * (a + b);
    c.src = find_parent(src_iv, mid);
    c.dst = find_parent(dst_iv, mid);
    tg.cells.push_back(c);
  }
  return tg;
}

/// Pairwise triangle intersection via half-plane clipping. Intersections with
/// at least four vertices are fanned around their centroid; areas below
/// 1e-12 of the smaller parent cell are discarded.
inline TransferGrid build_transfer_2d(const SimplicialGrid& src, const SimplicialGrid& dst) {
  if (src.dim != 2 || dst.dim != 2)
    throw CoverageMismatchError("build_transfer_2d needs two triangle grids");
  TransferGrid tg;
  tg.dim = 2;
  tg.src = &src;
  tg.dst = &dst;

  const double area_src = grid_measure(src), area_dst = grid_measure(dst);
  if (std::abs(area_src - area_dst) > 1e-9 * std::max(area_src, area_dst))
    throw CoverageMismatchError("triangle grids do not cover the same area");

  const Aabb box = aabb_of(src.nodes.begin(), src.nodes.end());
  const double diam = (box.hi - box.lo).norm();
  const double weld = 1e-12 * std::max(diam, 1e-30);

  for (const Vec2& p : src.nodes) detail::add_transfer_node(tg, p, weld);
  for (const Vec2& p : dst.nodes) detail::add_transfer_node(tg, p, weld);

  std::vector<Aabb> dst_boxes(dst.num_cells());
  std::vector<std::array<Vec2, 3>> dst_tris(dst.num_cells());
  for (int c = 0; c < dst.num_cells(); ++c) {
    for (int k = 0; k < 3; ++k) dst_tris[c][k] = dst.nodes[dst.cells[c][k]];
    dst_boxes[c] = aabb_of(dst_tris[c].begin(), dst_tris[c].end());
  }

  for (int cs = 0; cs < src.num_cells(); ++cs) {
    std::array<Vec2, 3> ts;
    for (int k = 0; k < 3; ++k) ts[k] = src.nodes[src.cells[cs][k]];
    const Aabb sbox = aabb_of(ts.begin(), ts.end());
    const double ms = cell_measure(src, cs);
    for (int cd = 0; cd < dst.num_cells(); ++cd) {
      if (!sbox.overlaps(dst_boxes[cd], weld)) continue;
      std::vector<Vec2> poly = clip_triangles(ts, dst_tris[cd], weld);
      if (poly.size() < 3) continue;
      const double md = cell_measure(dst, cd);
      const double eps_area = 1e-12 * std::min(ms, md);
      const double area = polygon_area(poly);
      if (area <= eps_area) continue;
      if (poly.size() == 3) {
        TransferCell c;
        for (int k = 0; k < 3; ++k) c.verts[k] = poly[k];
        c.nverts = 3;
        c.src = cs;
        c.dst = cd;
        c.measure = area;
        tg.cells.push_back(c);
        for (const Vec2& p : poly) detail::add_transfer_node(tg, p, weld);
      } else {
        const Vec2 ctr = polygon_centroid(poly);
        detail::add_transfer_node(tg, ctr, weld);
        for (const Vec2& p : poly) detail::add_transfer_node(tg, p, weld);
        const int n = static_cast<int>(poly.size());
        for (int i = 0; i < n; ++i) {
          TransferCell c;
          c.verts[0] = ctr;
          c.verts[1] = poly[i];
          c.verts[2] = poly[(i + 1) % n];
          c.nverts = 3;
          const double a = triangle_area(c.verts[0], c.verts[1], c.verts[2]);
          if (a <= eps_area) continue;
          c.src = cs;
          c.dst = cd;
          c.measure = a;
          tg.cells.push_back(c);
        }
      }
    }
  }
  return tg;
}

/// Dimension dispatch used by the projection layer.
inline TransferGrid build_transfer(const SimplicialGrid& src, const SimplicialGrid& dst) {
  if (src.dim == 0) return build_transfer_0d(src, dst);
  if (src.dim == 1) return build_transfer_1d(src, dst);
  return build_transfer_2d(src, dst);
}

/// Parent pair of the transfer cell containing p; ties resolve to the lowest
/// transfer cell index. Throws OutOfDomainError when p is outside every cell.
inline std::pair<int, int> locate_parents(const TransferGrid& tg, const Vec2& p) {
  double diam = 1.0;
  if (!tg.nodes.empty()) {
    const Aabb box = aabb_of(tg.nodes.begin(), tg.nodes.end());
    diam = std::max((box.hi - box.lo).norm(), 1e-30);
  }
  const double tol = 1e-9 * diam;
  for (const TransferCell& c : tg.cells) {
    bool inside = false;
    if (c.nverts == 1)
      inside = (p - c.verts[0]).norm() <= tol;
    else if (c.nverts == 2)
      inside = point_on_segment(p, c.verts[0], c.verts[1], tol);
    else
      inside = point_in_triangle(p, c.verts[0], c.verts[1], c.verts[2], tol);
    if (inside) return {c.src, c.dst};
  }
  throw OutOfDomainError("point lies outside the transfer grid");
}

} // namespace mdest
