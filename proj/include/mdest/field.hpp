#pragma once

#include "mdest/meshing.hpp"
#include "mdest/quadrature.hpp"
#include "mdest/transfer.hpp"

namespace mdest {

// Uniform cell access across grid kinds so fields can live on either.
inline int grid_dim(const SimplicialGrid& g) { return g.dim; }
inline int grid_dim(const TransferGrid& g) { return g.dim; }
inline int grid_num_cells(const SimplicialGrid& g) { return g.num_cells(); }
inline int grid_num_cells(const TransferGrid& g) { return g.num_cells(); }
inline Vec2 grid_cell_vertex(const SimplicialGrid& g, int c, int k) {
  return g.nodes[g.cells[c][k]];
}
inline Vec2 grid_cell_vertex(const TransferGrid& g, int c, int k) { return g.cells[c].verts[k]; }
inline double grid_cell_measure(const SimplicialGrid& g, int c) { return cell_measure(g, c); }
inline double grid_cell_measure(const TransferGrid& g, int c) { return g.cells[c].measure; }

/// Piecewise polynomial of degree 0 or 1 on a grid. Degree-1 coefficients are
/// nodal values at the cell's vertices, stored cell-major with stride dim+1;
/// `conforming` marks fields whose shared-node values agree.
template <class GridT>
struct PolyField {
  const GridT* grid = nullptr;
  int degree = 0;
  bool conforming = false;
  std::vector<double> coeffs;

  int stride() const { return degree == 0 ? 1 : grid_dim(*grid) + 1; }
  double* cell(int c) { return coeffs.data() + static_cast<size_t>(c) * stride(); }
  const double* cell(int c) const { return coeffs.data() + static_cast<size_t>(c) * stride(); }
};

using GridField = PolyField<SimplicialGrid>;
using TransferField = PolyField<TransferGrid>;

template <class GridT>
inline PolyField<GridT> make_p0(const GridT& g, std::vector<double> values) {
  PolyField<GridT> f;
  f.grid = &g;
  f.degree = 0;
  f.coeffs = std::move(values);
  if (static_cast<int>(f.coeffs.size()) != grid_num_cells(g))
    throw GridMismatchError("P0 coefficient count does not match cell count");
  return f;
}

template <class GridT>
inline PolyField<GridT> make_p0_zero(const GridT& g) {
  return make_p0(g, std::vector<double>(grid_num_cells(g), 0.0));
}

inline GridField make_p1_nodal(const SimplicialGrid& g, const std::vector<double>& nodal) {
  GridField f;
  f.grid = &g;
  f.degree = 1;
  f.conforming = true;
  f.coeffs.resize(static_cast<size_t>(g.num_cells()) * (g.dim + 1));
  for (int c = 0; c < g.num_cells(); ++c)
    for (int k = 0; k <= g.dim; ++k) f.coeffs[c * (g.dim + 1) + k] = nodal[g.cells[c][k]];
  return f;
}

/// Nodal array of a conforming degree-1 field.
inline std::vector<double> nodal_values(const GridField& f) {
  const SimplicialGrid& g = *f.grid;
  std::vector<double> nodal(g.num_nodes(), 0.0);
  std::vector<char> seen(g.num_nodes(), 0);
  for (int c = 0; c < g.num_cells(); ++c) {
    for (int k = 0; k <= g.dim; ++k) {
      nodal[g.cells[c][k]] = f.cell(c)[k];
      seen[g.cells[c][k]] = 1;
    }
  }
  (void)seen;
  return nodal;
}

/// Barycentric coordinates of p in the cell (sizes dim+1).
template <class GridT>
inline std::array<double, 3> barycentric(const GridT& g, int c, const Vec2& p) {
  const int d = grid_dim(g);
  if (d == 0) return {1.0, 0.0, 0.0};
  if (d == 1) {
    const Vec2 a = grid_cell_vertex(g, c, 0), b = grid_cell_vertex(g, c, 1);
    const double t = line_param(p, a, b);
    return {1.0 - t, t, 0.0};
  }
  const Vec2 a = grid_cell_vertex(g, c, 0), b = grid_cell_vertex(g, c, 1),
             cc = grid_cell_vertex(g, c, 2);
  const double A = signed_area(a, b, cc);
  return {signed_area(p, b, cc) / A, signed_area(a, p, cc) / A, signed_area(a, b, p) / A};
}

template <class GridT>
inline double eval(const PolyField<GridT>& f, int c, const Vec2& p) {
  if (f.degree == 0) return f.cell(c)[0];
  const auto lam = barycentric(*f.grid, c, p);
  const int d = grid_dim(*f.grid);
  double v = 0;
  for (int k = 0; k <= d; ++k) v += lam[k] * f.cell(c)[k];
  return v;
}

/// Gradient of a degree-1 field on one cell (embedded; tangential for 1D).
inline Vec2 cell_gradient_of_field(const GridField& f, int c) {
  const SimplicialGrid& g = *f.grid;
  if (f.degree == 0 || g.dim == 0) return Vec2(0, 0);
  if (g.dim == 1) {
    const Vec2 a = grid_cell_vertex(g, c, 0), b = grid_cell_vertex(g, c, 1);
    const double L = (b - a).norm();
    return (f.cell(c)[1] - f.cell(c)[0]) / L * (b - a) / L;
  }
  const Vec2 a = grid_cell_vertex(g, c, 0), b = grid_cell_vertex(g, c, 1),
             cc = grid_cell_vertex(g, c, 2);
  // grad lambda_k from the inverse Jacobian.
  Mat2 J;
  J.col(0) = b - a;
  J.col(1) = cc - a;
  const Mat2 Jit = J.inverse().transpose();
  const Vec2 g1 = Jit.col(0), g2 = Jit.col(1);
  const Vec2 g0 = -g1 - g2;
  return f.cell(c)[0] * g0 + f.cell(c)[1] * g1 + f.cell(c)[2] * g2;
}

template <class GridT>
inline double l2_norm(const PolyField<GridT>& f) {
  const QuadratureRule rule = quadrature_rule(grid_dim(*f.grid), 2 * f.degree);
  double s = 0;
  std::array<Vec2, 3> vs;
  for (int c = 0; c < grid_num_cells(*f.grid); ++c) {
    const int nv = grid_dim(*f.grid) + 1;
    for (int k = 0; k < nv; ++k) vs[k] = grid_cell_vertex(*f.grid, c, k);
    for_each_qp(std::span<const Vec2>(vs.data(), nv), rule, [&](const Vec2& x, double w) {
      const double v = eval(f, c, x);
      s += w * v * v;
    });
  }
  return std::sqrt(s);
}

/// Trace of a conforming degree-1 potential on an internal-boundary grid.
/// Node values are read through the parent-node map, so slit sides keep their
/// own trace.
inline GridField trace_on_internal_boundary(const GridField& pot, const InternalBoundary& ib) {
  const std::vector<double> nodal = nodal_values(pot);
  std::vector<double> ib_nodal(ib.grid.num_nodes());
  for (int n = 0; n < ib.grid.num_nodes(); ++n) ib_nodal[n] = nodal[ib.node_map[n]];
  return make_p1_nodal(ib.grid, ib_nodal);
}

} // namespace mdest
