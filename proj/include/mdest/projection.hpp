#pragma once

#include <Eigen/Dense>

#include "mdest/field.hpp"

namespace mdest {

enum class Side { src, dst };

/// Children of each parent cell on both sides of a transfer grid. Pure data,
/// so the owning structures stay movable.
struct ProjectionCache {
  std::vector<std::vector<int>> by_src, by_dst;

  const std::vector<int>& children(Side s, int parent) const {
    return s == Side::src ? by_src[parent] : by_dst[parent];
  }
};

inline ProjectionCache make_projection_cache(const TransferGrid& tg) {
  ProjectionCache cache;
  cache.by_src.resize(tg.src->num_cells());
  cache.by_dst.resize(tg.dst->num_cells());
  for (int c = 0; c < tg.num_cells(); ++c) {
    cache.by_src[tg.cells[c].src].push_back(c);
    cache.by_dst[tg.cells[c].dst].push_back(c);
  }
  return cache;
}

/// Exact P1 mass matrix on a simplex: M_ij = |K| (1 + delta_ij) / ((d+1)(d+2)).
inline Eigen::MatrixXd simplex_p1_mass(double measure, int dim) {
  const int nv = dim + 1;
  Eigen::MatrixXd M(nv, nv);
  const double base = measure / static_cast<double>((dim + 1) * (dim + 2));
  for (int i = 0; i < nv; ++i)
    for (int j = 0; j < nv; ++j) M(i, j) = base * (i == j ? 2.0 : 1.0);
  return M;
}

/// Restrict a parent-grid field to the transfer grid (exact, cellwise).
inline TransferField prolong(const GridField& w, const TransferGrid& tg, Side side_of_w) {
  const SimplicialGrid* parent = side_of_w == Side::src ? tg.src : tg.dst;
  if (w.grid != parent)
    throw GridMismatchError("field does not live on that side of the transfer grid");
  TransferField out;
  out.grid = &tg;
  out.degree = w.degree;
  out.conforming = false;
  out.coeffs.resize(static_cast<size_t>(tg.num_cells()) * out.stride());
  for (int c = 0; c < tg.num_cells(); ++c) {
    const int pc = side_of_w == Side::src ? tg.cells[c].src : tg.cells[c].dst;
    if (w.degree == 0) {
      out.cell(c)[0] = w.cell(pc)[0];
    } else {
      for (int k = 0; k <= tg.dim; ++k) out.cell(c)[k] = eval(w, pc, tg.cells[c].verts[k]);
    }
  }
  return out;
}

namespace detail {

inline const TransferGrid& checked_transfer(const TransferField& w, const SimplicialGrid& target,
                                            Side target_side, const ProjectionCache& cache) {
  const TransferGrid& tg = *w.grid;
  if ((target_side == Side::src ? tg.src : tg.dst) != &target)
    throw GridMismatchError("target grid is not that side of the transfer grid");
  if (static_cast<int>(cache.by_src.size()) != tg.src->num_cells() ||
      static_cast<int>(cache.by_dst.size()) != tg.dst->num_cells())
    throw GridMismatchError("projection cache built for a different transfer grid");
  return tg;
}

/// Lowest-index cell adjacent to each node; every node of a finalized grid
/// belongs to at least one cell.
inline std::vector<int> lowest_adjacent_cell(const SimplicialGrid& g) {
  std::vector<int> owner(g.num_nodes(), -1);
  for (int c = 0; c < g.num_cells(); ++c)
    for (int k = 0; k <= g.dim; ++k)
      if (owner[g.cells[c][k]] < 0) owner[g.cells[c][k]] = c;
  return owner;
}

template <class Fn>
inline void integrate_children(const TransferGrid& tg, const std::vector<int>& children,
                               int degree, Fn&& accumulate) {
  const QuadratureRule rule = quadrature_rule(tg.dim, degree);
  for (int tc : children) {
    const TransferCell& cell = tg.cells[tc];
    for_each_qp(std::span<const Vec2>(cell.verts.data(), cell.nverts), rule,
                [&](const Vec2& x, double w) { accumulate(tc, x, w); });
  }
}

} // namespace detail

/// Scott-Zhang interpolant of a transfer-grid field onto one parent grid.
/// Each node's value is the dual-basis functional on its lowest-index adjacent
/// cell, integrated over that cell's transfer children; reproduces degree-1
/// fields. `pins` force nodal values afterwards (boundary data).
inline GridField scott_zhang(const TransferField& w, const SimplicialGrid& target, Side target_side,
                             const ProjectionCache& cache,
                             const std::vector<std::pair<int, double>>* pins = nullptr) {
  const TransferGrid& tg = detail::checked_transfer(w, target, target_side, cache);
  const int nv = target.dim + 1;
  const std::vector<int> owner = detail::lowest_adjacent_cell(target);
  std::vector<double> nodal(target.num_nodes(), 0.0);
  for (int z = 0; z < target.num_nodes(); ++z) {
    const int K = owner[z];
    int l = 0;
    while (target.cells[K][l] != z) ++l;
    const Eigen::MatrixXd M = simplex_p1_mass(cell_measure(target, K), target.dim);
    const Eigen::VectorXd c = M.llt().solve(Eigen::VectorXd::Unit(nv, l));
    double val = 0;
    detail::integrate_children(tg, cache.children(target_side, K), 1 + w.degree,
                               [&](int tc, const Vec2& x, double qw) {
                                 const auto lam = barycentric(target, K, x);
                                 double psi = 0;
                                 for (int k = 0; k < nv; ++k) psi += c[k] * lam[k];
                                 val += qw * psi * eval(w, tc, x);
                               });
    nodal[z] = val;
  }
  if (pins)
    for (const auto& [node, value] : *pins) nodal[node] = value;
  return make_p1_nodal(target, nodal);
}

/// Cellwise L2 projection of a transfer-grid field onto P_k of one parent grid.
inline GridField l2_project(const TransferField& w, const SimplicialGrid& target, Side target_side,
                            const ProjectionCache& cache, int k) {
  const TransferGrid& tg = detail::checked_transfer(w, target, target_side, cache);
  GridField out;
  out.grid = &target;
  out.degree = k;
  out.conforming = false;
  const int m = k == 0 ? 1 : target.dim + 1;
  out.coeffs.assign(static_cast<size_t>(target.num_cells()) * m, 0.0);
  for (int K = 0; K < target.num_cells(); ++K) {
    const auto& children = cache.children(target_side, K);
    if (children.empty()) throw CoverageMismatchError("parent cell has no transfer children");
    const double meas = cell_measure(target, K);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    detail::integrate_children(tg, children, k + w.degree, [&](int tc, const Vec2& x, double qw) {
      const double wv = eval(w, tc, x);
      if (k == 0) {
        b[0] += qw * wv;
      } else {
        const auto lam = barycentric(target, K, x);
        for (int i = 0; i < m; ++i) b[i] += qw * wv * lam[i];
      }
    });
    if (k == 0) {
      out.cell(K)[0] = b[0] / meas;
    } else {
      const Eigen::VectorXd alpha = simplex_p1_mass(meas, target.dim).llt().solve(b);
      for (int i = 0; i < m; ++i) out.cell(K)[i] = alpha[i];
    }
  }
  return out;
}

/// L2 projection onto P_k with the cell mean pinned to the input's: the KKT
/// system [M c; c^T 0] keeps (out, 1)_K = (w, 1)_K exactly, which is what the
/// flux coupling needs for local conservation. For k = 0 it reduces to the
/// overlap-weighted average.
inline GridField mass_constrained_project(const TransferField& w, const SimplicialGrid& target,
                                          Side target_side, const ProjectionCache& cache, int k) {
  const TransferGrid& tg = detail::checked_transfer(w, target, target_side, cache);
  GridField out;
  out.grid = &target;
  out.degree = k;
  out.conforming = false;
  const int m = k == 0 ? 1 : target.dim + 1;
  out.coeffs.assign(static_cast<size_t>(target.num_cells()) * m, 0.0);
  for (int K = 0; K < target.num_cells(); ++K) {
    const auto& children = cache.children(target_side, K);
    if (children.empty()) throw CoverageMismatchError("parent cell has no transfer children");
    const double meas = cell_measure(target, K);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    double mass = 0;
    detail::integrate_children(tg, children, k + w.degree, [&](int tc, const Vec2& x, double qw) {
      const double wv = eval(w, tc, x);
      mass += qw * wv;
      if (k == 0) {
        b[0] += qw * wv;
      } else {
        const auto lam = barycentric(target, K, x);
        for (int i = 0; i < m; ++i) b[i] += qw * wv * lam[i];
      }
    });
    if (k == 0) {
      // The constraint alone determines the value.
      out.cell(K)[0] = mass / meas;
      continue;
    }
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
    kkt.topLeftCorner(m, m) = simplex_p1_mass(meas, target.dim);
    for (int i = 0; i < m; ++i) kkt(i, m) = kkt(m, i) = meas / static_cast<double>(m);
    Eigen::VectorXd rhs(m + 1);
    rhs.head(m) = b;
    rhs[m] = mass;
    const Eigen::VectorXd sol = Eigen::PartialPivLU<Eigen::MatrixXd>(kkt).solve(rhs);
    if (!sol.allFinite()) throw SingularMassMatrixError("constrained projection system is singular");
    for (int i = 0; i < m; ++i) out.cell(K)[i] = sol[i];
  }
  return out;
}

/// Overlap measures |child| summed per (dst parent, src parent) pair. Row k
/// integrates the indicator of dst cell k against each src cell, so it carries
/// both the mortar-to-face weights and the conservation pairings.
inline Eigen::MatrixXd overlap_matrix(const TransferGrid& tg) {
  Eigen::MatrixXd O = Eigen::MatrixXd::Zero(tg.dst->num_cells(), tg.src->num_cells());
  for (const TransferCell& c : tg.cells) O(c.dst, c.src) += c.measure;
  return O;
}

/// Projection machinery of one coupling triplet. The interface grid is the
/// transfer source on both sides; `hi` targets the internal-boundary trace
/// grid of the higher subdomain, `lo` the lower subdomain's own grid.
struct InterfaceProjector {
  const Interface* ifc = nullptr;
  const SimplicialGrid* gamma = nullptr;
  const InternalBoundary* ib = nullptr;
  const SimplicialGrid* lo = nullptr;
  TransferGrid tg_hi, tg_lo;
  ProjectionCache cache_hi, cache_lo;

  // Primal traces onto the mortar grid (Scott-Zhang, conforming P1).
  GridField primal_from_hi(const GridField& trace_ib) const {
    return scott_zhang(prolong(trace_ib, tg_hi, Side::dst), *gamma, Side::src, cache_hi);
  }
  GridField primal_from_lo(const GridField& w_lo) const {
    return scott_zhang(prolong(w_lo, tg_lo, Side::dst), *gamma, Side::src, cache_lo);
  }

  // Dual potentials onto the mortar grid (plain cellwise L2).
  GridField dual_potential_from_hi(const GridField& w, int k) const {
    return l2_project(prolong(w, tg_hi, Side::dst), *gamma, Side::src, cache_hi, k);
  }
  GridField dual_potential_from_lo(const GridField& w, int k) const {
    return l2_project(prolong(w, tg_lo, Side::dst), *gamma, Side::src, cache_lo, k);
  }

  // Mortar fluxes onto the subdomain grids (mass-constrained L2).
  GridField flux_to_hi(const GridField& mortar, int k) const {
    return mass_constrained_project(prolong(mortar, tg_hi, Side::src), ib->grid, Side::dst,
                                    cache_hi, k);
  }
  GridField flux_to_lo(const GridField& mortar, int k) const {
    return mass_constrained_project(prolong(mortar, tg_lo, Side::src), *lo, Side::dst, cache_lo,
                                    k);
  }
};

inline InterfaceProjector make_interface_projector(const Interface& ifc,
                                                   const SimplicialGrid& gamma,
                                                   const InternalBoundary& ib,
                                                   const SimplicialGrid& lo) {
  InterfaceProjector pr;
  pr.ifc = &ifc;
  pr.gamma = &gamma;
  pr.ib = &ib;
  pr.lo = &lo;
  pr.tg_hi = build_transfer(gamma, ib.grid);
  pr.tg_lo = build_transfer(gamma, lo);
  pr.cache_hi = make_projection_cache(pr.tg_hi);
  pr.cache_lo = make_projection_cache(pr.tg_lo);
  return pr;
}

} // namespace mdest
