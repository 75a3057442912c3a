#pragma once

#include "mdest/solver.hpp"

namespace mdest {

/// Conforming P1 potential rebuilt from the mixed solution of one subdomain.
/// Each cell proposes the linear function through (barycenter, p_K) with
/// gradient -K^{-1} u_h(barycenter); node values average the proposals of all
/// adjacent cells (slit copies are distinct nodes, so the two sides of a cut
/// keep separate traces), then Dirichlet nodes are pinned to the data.
inline GridField reconstruct_potential(const Subdomain& sub, const SimplicialGrid& g,
                                       const std::vector<double>& pressure,
                                       const std::vector<double>& flux, double eps_geom) {
  if (sub.dim == 0) return make_p1_nodal(g, {pressure[0]});

  std::vector<double> sum(g.num_nodes(), 0.0);
  std::vector<int> count(g.num_nodes(), 0);
  for (int c = 0; c < g.num_cells(); ++c) {
    const Rt0Cell r = rt0_cell(g, c);
    const Vec2 bary = cell_barycenter(g, c);
    const Vec2 u = rt0_eval(r, flux, bary);
    const Vec2 grad = sub.dim == 2 ? Vec2(-(detail::inv_k2(sub, bary) * u))
                                   : Vec2(-detail::inv_k1(sub, bary) * u);
    for (int k = 0; k <= g.dim; ++k) {
      const int n = g.cells[c][k];
      sum[n] += pressure[c] + grad.dot(g.nodes[n] - bary);
      count[n] += 1;
    }
  }
  std::vector<double> nodal(g.num_nodes());
  for (int n = 0; n < g.num_nodes(); ++n) nodal[n] = sum[n] / count[n];

  for (const Face& face : g.faces) {
    if (face.tag != FaceTag::dirichlet) continue;
    const ScalarField* gd = detail::dirichlet_field_for_face(sub, g, face, eps_geom);
    for (int k = 0; k < face.num_nodes(); ++k)
      nodal[face.nodes[k]] = gd && *gd ? (*gd)(g.nodes[face.nodes[k]]) : 0.0;
  }
  return make_p1_nodal(g, nodal);
}

/// Reconstructed potentials for every subdomain of a solved system.
inline std::vector<GridField> reconstruct_all(const MdSystem& sys, const MdSolution& sol) {
  const GridBundle& bundle = *sys.bundle;
  const MdDomain& dom = *bundle.domain;
  std::vector<GridField> out;
  out.reserve(dom.subdomains.size());
  for (int i = 0; i < static_cast<int>(dom.subdomains.size()); ++i)
    out.push_back(reconstruct_potential(dom.subdomains[i], bundle.subgrids[i], sol.pressure[i],
                                        sol.flux[i], dom.eps_geom));
  return out;
}

} // namespace mdest
