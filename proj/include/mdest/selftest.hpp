#pragma once

#include <random>

#include "mdest/scenario.hpp"

namespace mdest {

/// Outcome of one randomized property suite.
struct PropertyResult {
  std::string name;
  bool pass = false;
  double worst = 0; // largest observed residual
  double bound = 0; // the tolerance the property must meet
  int cases = 0;
};

namespace detail {

/// Two independent partitions of one random segment in the plane. min_gap
/// bounds cell sizes from below: the roundoff of dual-basis and averaging
/// identities scales like 1/h, so exactness suites with 1e-13..1e-14 bounds
/// need grids away from degeneracy while stress suites can go finer.
inline std::pair<SimplicialGrid, SimplicialGrid> random_segment_pair(std::mt19937_64& rng,
                                                                     double min_gap = 1e-3) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double ang = 2 * M_PI * U(rng);
  const Vec2 a(U(rng), U(rng));
  const double len = 0.3 + 1.2 * U(rng);
  const Vec2 b = a + len * Vec2(std::cos(ang), std::sin(ang));
  auto params = [&] {
    std::vector<double> ps{0.0, 1.0};
    const int n = 1 + static_cast<int>(U(rng) * 8);
    for (int i = 0; i < n; ++i) ps.push_back(U(rng));
    std::sort(ps.begin(), ps.end());
    std::vector<double> out;
    for (double p : ps)
      if (out.empty() || p - out.back() > min_gap) out.push_back(p);
    if (out.back() != 1.0) out.back() = 1.0;
    return out;
  };
  return {make_segment_grid(a, b, params()), make_segment_grid(a, b, params())};
}

/// Star-shaped random polygon with two fan triangulations from different
/// kernel points; both triangulate the same region.
struct PolygonPair {
  std::vector<Vec2> ring;
  SimplicialGrid a, b;
  double area = 0; // shoelace, independent of any clipping
};

inline SimplicialGrid fan_triangulation(const std::vector<Vec2>& ring, const Vec2& center) {
  SimplicialGrid g;
  g.dim = 2;
  g.nodes.push_back(center);
  for (const Vec2& p : ring) g.nodes.push_back(p);
  const int n = static_cast<int>(ring.size());
  for (int i = 0; i < n; ++i) g.cells.push_back({0, 1 + i, 1 + (i + 1) % n});
  g.finalize();
  return g;
}

inline PolygonPair random_polygon_pair(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  PolygonPair pp;
  const Vec2 c(U(rng), U(rng));
  const int n = 5 + static_cast<int>(U(rng) * 4);
  // Jittered uniform angles keep every gap (wrap included) below pi, which
  // makes the radial polygon star-shaped with respect to c.
  std::vector<double> angs;
  for (int i = 0; i < n; ++i) angs.push_back(2 * M_PI * (i + 0.05 + 0.9 * U(rng)) / n);
  for (int i = 0; i < n; ++i) {
    const double r = 0.4 + 0.6 * U(rng);
    pp.ring.push_back(c + r * Vec2(std::cos(angs[i]), std::sin(angs[i])));
  }
  for (int i = 0; i < n; ++i) {
    const Vec2& p = pp.ring[i];
    const Vec2& q = pp.ring[(i + 1) % n];
    pp.area += 0.5 * (p.x() * q.y() - p.y() * q.x());
  }
  pp.area = std::abs(pp.area);
  // The second fan point must stay in the polygon's kernel: bound the offset
  // by the distance from c to the nearest edge's supporting line.
  double dmin = std::numeric_limits<double>::max();
  for (int i = 0; i < n; ++i) {
    const Vec2& p = pp.ring[i];
    const Vec2& q = pp.ring[(i + 1) % n];
    const Vec2 e = q - p;
    dmin = std::min(dmin, std::abs(e.x() * (c.y() - p.y()) - e.y() * (c.x() - p.x())) / e.norm());
  }
  const Vec2 off(0.3 * dmin * (2 * U(rng) - 1), 0.3 * dmin * (2 * U(rng) - 1));
  pp.a = fan_triangulation(pp.ring, c);
  pp.b = fan_triangulation(pp.ring, c + off);
  return pp;
}

inline GridField random_broken_field(const SimplicialGrid& g, int degree, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  GridField f;
  f.grid = &g;
  f.degree = degree;
  f.conforming = false;
  f.coeffs.resize(static_cast<size_t>(g.num_cells()) * (degree == 0 ? 1 : g.dim + 1));
  for (double& c : f.coeffs) c = U(rng);
  return f;
}

inline bool nodes_included(const TransferGrid& tg, const SimplicialGrid& g, double tol) {
  for (const Vec2& p : g.nodes) {
    bool found = false;
    for (const Vec2& q : tg.nodes)
      if ((p - q).norm() <= tol) {
        found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

} // namespace detail

/// Transfer cells partition the common region: measures sum to the region
/// measure and every parent node reappears as a transfer node.
inline PropertyResult selftest_transfer_partition(int n_1d = 200, int n_2d = 200,
                                                  uint64_t seed = 0x5eed01) {
  std::mt19937_64 rng(seed);
  PropertyResult res;
  res.name = "transfer_partition";
  res.bound = 1e-12;
  for (int i = 0; i < n_1d; ++i) {
    auto [ga, gb] = detail::random_segment_pair(rng);
    const TransferGrid tg = build_transfer(ga, gb);
    const double len = grid_measure(ga);
    res.worst = std::max(res.worst, std::abs(tg.total_measure() - len) / len);
    const double tol = 1e-9 * len;
    if (!detail::nodes_included(tg, ga, tol) || !detail::nodes_included(tg, gb, tol))
      res.worst = std::max(res.worst, 1.0);
    ++res.cases;
  }
  for (int i = 0; i < n_2d; ++i) {
    const detail::PolygonPair pp = detail::random_polygon_pair(rng);
    const TransferGrid tg = build_transfer(pp.a, pp.b);
    res.worst = std::max(res.worst, std::abs(tg.total_measure() - pp.area) / pp.area);
    const double tol = 1e-9;
    if (!detail::nodes_included(tg, pp.a, tol) || !detail::nodes_included(tg, pp.b, tol))
      res.worst = std::max(res.worst, 1.0);
    ++res.cases;
  }
  res.pass = res.worst <= res.bound;
  return res;
}

/// Mass-constrained projections keep the exact integral over every target
/// cell, for k in {0, 1} and broken inputs of both degrees.
inline PropertyResult selftest_projection_mass(int n_1d = 1000, int n_2d = 200,
                                               uint64_t seed = 0x5eed02) {
  std::mt19937_64 rng(seed);
  PropertyResult res;
  res.name = "projection_mass";
  res.bound = 1e-12;
  auto check_pair = [&](const SimplicialGrid& ga, const SimplicialGrid& gb, int degree, int k) {
    const TransferGrid tg = build_transfer(ga, gb);
    const ProjectionCache cache = make_projection_cache(tg);
    const GridField w = detail::random_broken_field(ga, degree, rng);
    const TransferField tw = prolong(w, tg, Side::src);
    const GridField out = mass_constrained_project(tw, gb, Side::dst, cache, k);
    for (int cd = 0; cd < gb.num_cells(); ++cd) {
      double src_mass = 0;
      detail::integrate_children(tg, cache.children(Side::dst, cd), degree,
                                 [&](int child, const Vec2& x, double wq) {
                                   src_mass += wq * eval(tw, child, x);
                                 });
      double dst_mass = 0;
      const QuadratureRule rule = quadrature_rule(gb.dim, k);
      std::array<Vec2, 3> vs;
      for (int q = 0; q <= gb.dim; ++q) vs[q] = gb.nodes[gb.cells[cd][q]];
      for_each_qp(std::span<const Vec2>(vs.data(), gb.dim + 1), rule,
                  [&](const Vec2& x, double wq) { dst_mass += wq * eval(out, cd, x); });
      res.worst = std::max(res.worst, std::abs(dst_mass - src_mass));
    }
    ++res.cases;
  };
  for (int i = 0; i < n_1d; ++i) {
    auto [ga, gb] = detail::random_segment_pair(rng);
    check_pair(ga, gb, i % 2, (i / 2) % 2);
  }
  for (int i = 0; i < n_2d; ++i) {
    const detail::PolygonPair pp = detail::random_polygon_pair(rng);
    check_pair(pp.a, pp.b, i % 2, (i / 2) % 2);
  }
  res.pass = res.worst <= res.bound;
  return res;
}

namespace detail {

/// Max |f_a - f_b| sampled inside matched cells of two grids covering the
/// same region (cells matched by barycenter).
inline double max_matched_eval_diff(const GridField& fa, const GridField& fb) {
  const SimplicialGrid& ga = *fa.grid;
  const SimplicialGrid& gb = *fb.grid;
  if (ga.num_cells() != gb.num_cells()) return 1.0;
  double worst = 0;
  for (int ca = 0; ca < ga.num_cells(); ++ca) {
    const Vec2 bca = cell_barycenter(ga, ca);
    int match = -1;
    for (int cb = 0; cb < gb.num_cells(); ++cb)
      if ((cell_barycenter(gb, cb) - bca).norm() <= 1e-9) {
        match = cb;
        break;
      }
    if (match < 0) return 1.0;
    std::array<Vec2, 3> vs;
    for (int q = 0; q <= ga.dim; ++q) vs[q] = ga.nodes[ga.cells[ca][q]];
    std::vector<Vec2> samples{bca};
    for (int q = 0; q <= ga.dim; ++q) samples.push_back(0.8 * vs[q] + 0.2 * bca);
    for (const Vec2& x : samples)
      worst = std::max(worst, std::abs(eval(fa, ca, x) - eval(fb, match, x)));
  }
  return worst;
}

} // namespace detail

/// On matching bundles every interface operator must reduce to the identity.
inline PropertyResult selftest_matching_identity(uint64_t seed = 0x5eed03) {
  std::mt19937_64 rng(seed);
  PropertyResult res;
  res.name = "matching_identity";
  res.bound = 1e-13;
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (const Scenario& sc :
       {series_resistance_scenario(), smooth_source_scenario(), network_scenario_2d()}) {
    const GridBundle bundle = generate_matching_bundle(sc.domain, 0.25);
    for (size_t q = 0; q < sc.domain.interfaces.size(); ++q) {
      const InterfaceProjector pr = make_interface_projector(
          sc.domain.interfaces[q], bundle.interface_grids[q], bundle.internal_boundaries[q],
          bundle.subgrids[sc.domain.sub_index.at(sc.domain.interfaces[q].lo)]);
      const SimplicialGrid& gamma = bundle.interface_grids[q];
      const SimplicialGrid& ib = bundle.internal_boundaries[q].grid;
      const SimplicialGrid& lo = *pr.lo;

      auto nodal_random = [&](const SimplicialGrid& g) {
        std::vector<double> vals(g.num_nodes());
        for (double& v : vals) v = U(rng);
        return make_p1_nodal(g, vals);
      };
      const GridField trace = nodal_random(ib);
      res.worst = std::max(
          res.worst, detail::max_matched_eval_diff(pr.primal_from_hi(trace), trace));
      const GridField wlo = nodal_random(lo);
      res.worst =
          std::max(res.worst, detail::max_matched_eval_diff(pr.primal_from_lo(wlo), wlo));
      for (int k : {0, 1}) {
        const GridField bh = detail::random_broken_field(ib, k, rng);
        res.worst = std::max(res.worst,
                             detail::max_matched_eval_diff(pr.dual_potential_from_hi(bh, k), bh));
        const GridField bl = detail::random_broken_field(lo, k, rng);
        res.worst = std::max(res.worst,
                             detail::max_matched_eval_diff(pr.dual_potential_from_lo(bl, k), bl));
        const GridField m = detail::random_broken_field(gamma, k, rng);
        res.worst =
            std::max(res.worst, detail::max_matched_eval_diff(pr.flux_to_hi(m, k), m));
        res.worst =
            std::max(res.worst, detail::max_matched_eval_diff(pr.flux_to_lo(m, k), m));
      }
      ++res.cases;
    }
  }
  res.pass = res.worst <= res.bound;
  return res;
}

/// The k = 0 constrained projection is exactly the overlap-weighted average.
inline PropertyResult selftest_overlap_average(int n = 500, uint64_t seed = 0x5eed04) {
  std::mt19937_64 rng(seed);
  PropertyResult res;
  res.name = "overlap_average";
  res.bound = 1e-14;
  for (int i = 0; i < n; ++i) {
    auto [ga, gb] = detail::random_segment_pair(rng, 0.05);
    const TransferGrid tg = build_transfer(ga, gb);
    const ProjectionCache cache = make_projection_cache(tg);
    const GridField w = detail::random_broken_field(ga, 1, rng);
    const TransferField tw = prolong(w, tg, Side::src);
    const GridField out = mass_constrained_project(tw, gb, Side::dst, cache, 0);
    for (int cd = 0; cd < gb.num_cells(); ++cd) {
      double mass = 0, meas = 0;
      for (int child : cache.children(Side::dst, cd)) {
        const TransferCell& c = tg.cells[child];
        const Vec2 mid = 0.5 * (c.verts[0] + c.verts[1]);
        mass += c.measure * eval(tw, child, mid); // exact for affine input
        meas += c.measure;
      }
      res.worst = std::max(res.worst, std::abs(*out.cell(cd) - mass / meas));
    }
    ++res.cases;
  }
  res.pass = res.worst <= res.bound;
  return res;
}

/// Scott-Zhang reproduces degree-1 polynomials through non-matching transfer.
inline PropertyResult selftest_sz_reproduction(int n = 500, uint64_t seed = 0x5eed05) {
  std::mt19937_64 rng(seed);
  PropertyResult res;
  res.name = "sz_reproduction";
  res.bound = 1e-13;
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int i = 0; i < n; ++i) {
    auto [ga, gb] = detail::random_segment_pair(rng, 0.05);
    const double alpha = U(rng), bx = U(rng), by = U(rng);
    auto affine = [&](const Vec2& p) { return alpha + bx * p.x() + by * p.y(); };
    std::vector<double> vals(ga.num_nodes());
    for (int k = 0; k < ga.num_nodes(); ++k) vals[k] = affine(ga.nodes[k]);
    const GridField w = make_p1_nodal(ga, vals);
    const TransferGrid tg = build_transfer(ga, gb);
    const ProjectionCache cache = make_projection_cache(tg);
    const GridField out = scott_zhang(prolong(w, tg, Side::src), gb, Side::dst, cache);
    const std::vector<double> got = nodal_values(out);
    for (int k = 0; k < gb.num_nodes(); ++k)
      res.worst = std::max(res.worst, std::abs(got[k] - affine(gb.nodes[k])));
    ++res.cases;
  }
  res.pass = res.worst <= res.bound;
  return res;
}

inline std::vector<PropertyResult> run_projection_selftests() {
  return {selftest_transfer_partition(), selftest_projection_mass(),
          selftest_matching_identity(), selftest_overlap_average(),
          selftest_sz_reproduction()};
}

} // namespace mdest
