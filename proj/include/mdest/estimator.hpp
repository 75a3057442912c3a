#pragma once

#include <map>
#include <memory>

#include "mdest/reconstruction.hpp"

namespace mdest {

/// Local estimators, aggregates, and the majorant; true errors and
/// effectivities are attached when a reference is available.
struct EstimateReport {
  std::vector<std::vector<double>> eta_df_par;  // [subdomain][cell]
  std::vector<std::vector<double>> eta_r;       // [subdomain][cell]
  std::vector<std::vector<double>> eta_df_perp; // [interface][mortar cell]
  std::map<int, double> eta_subdomain;          // subdomain id -> eta_Omega_i
  std::map<int, double> eta_interface;          // interface id -> eta_Gamma_j
  std::map<int, double> eta_omega_dim;          // d -> eta_Omega^d
  std::map<int, double> eta_gamma_dim;          // d -> eta_Gamma^d
  double eta_df = 0;
  double eta_res = 0;
  double majorant = 0;

  bool has_true_errors = false;
  double err_primal = 0, err_dual = 0;
  double eff_primal = 0, eff_dual = 0;
};

struct TrueErrors {
  double primal = 0, dual = 0;
};

namespace detail {

/// Smallest eigenvalue of the cell permeability, sampled at quadrature points.
inline double min_permeability_eigenvalue(const Subdomain& sub, const SimplicialGrid& g, int c) {
  const QuadratureRule rule = quadrature_rule(g.dim, 3);
  std::array<Vec2, 3> vs;
  for (int k = 0; k <= g.dim; ++k) vs[k] = g.nodes[g.cells[c][k]];
  double cmin = std::numeric_limits<double>::max();
  auto sample = [&](const Vec2& x) {
    if (g.dim == 2) {
      const Mat2 K = sub.K2 ? sub.K2(x) : Mat2::Identity();
      const double tr = K(0, 0) + K(1, 1);
      const double det = K(0, 0) * K(1, 1) - K(0, 1) * K(1, 0);
      const double disc = std::sqrt(std::max(0.0, tr * tr - 4 * det));
      cmin = std::min(cmin, 0.5 * (tr - disc));
    } else {
      cmin = std::min(cmin, sub.K1 ? sub.K1(x) : 1.0);
    }
  };
  sample(cell_barycenter(g, c));
  for_each_qp(std::span<const Vec2>(vs.data(), g.dim + 1), rule,
              [&](const Vec2& x, double) { sample(x); });
  return cmin;
}

/// Well strength accumulated per containing cell.
inline std::vector<double> well_cell_sums(const Subdomain& sub, const SimplicialGrid& g) {
  std::vector<double> s(g.num_cells(), 0.0);
  if (sub.cell_sources.empty()) return s;
  std::optional<CellLocator> locator;
  if (g.dim == 2) locator.emplace(g);
  for (const auto& [p, strength] : sub.cell_sources) {
    int c = -1;
    if (g.dim == 2) {
      c = locator->locate(p);
    } else if (g.dim == 1) {
      for (int cc = 0; cc < g.num_cells() && c < 0; ++cc)
        if (point_on_segment(p, g.nodes[g.cells[cc][0]], g.nodes[g.cells[cc][1]], 1e-10)) c = cc;
    } else {
      c = 0;
    }
    if (c < 0) throw OutOfDomainError("well location outside its subdomain grid");
    s[c] += strength;
  }
  return s;
}

/// Piecewise evaluation of a 1D-grid field by parameter along a segment.
struct SegmentSampler {
  const GridField* f = nullptr;
  Vec2 a, b;
  std::vector<double> t0, t1; // per piece, ascending
  std::vector<int> cell;

  double at(double t) const {
    int lo = 0, hi = static_cast<int>(cell.size()) - 1;
    while (lo < hi) {
      const int mid = (lo + hi) / 2;
      if (t > t1[mid]) lo = mid + 1; else hi = mid;
    }
    const Vec2 x = a + t * (b - a);
    return eval(*f, cell[lo], x);
  }
};

inline SegmentSampler make_segment_sampler(const GridField& f, const Vec2& a, const Vec2& b) {
  SegmentSampler s;
  s.f = &f;
  s.a = a;
  s.b = b;
  const SimplicialGrid& g = *f.grid;
  std::vector<std::pair<double, int>> order;
  for (int c = 0; c < g.num_cells(); ++c) {
    const double ta = line_param(g.nodes[g.cells[c][0]], a, b);
    const double tb = line_param(g.nodes[g.cells[c][1]], a, b);
    order.emplace_back(std::min(ta, tb), c);
  }
  std::sort(order.begin(), order.end());
  for (const auto& [t, c] : order) {
    const double ta = line_param(g.nodes[g.cells[c][0]], a, b);
    const double tb = line_param(g.nodes[g.cells[c][1]], a, b);
    s.t0.push_back(std::min(ta, tb));
    s.t1.push_back(std::max(ta, tb));
    s.cell.push_back(c);
  }
  return s;
}

inline void merge_breakpoints(std::vector<double>& ts, const SegmentSampler& s) {
  ts.insert(ts.end(), s.t0.begin(), s.t0.end());
  if (!s.t1.empty()) ts.push_back(s.t1.back());
}

inline std::vector<double> sorted_unique(std::vector<double> ts) {
  ts.push_back(0.0);
  ts.push_back(1.0);
  std::sort(ts.begin(), ts.end());
  std::vector<double> out;
  for (double t : ts) {
    const double tc = std::clamp(t, 0.0, 1.0);
    if (out.empty() || tc - out.back() > 1e-12) out.push_back(tc);
  }
  return out;
}

/// Streamed intersection of two grids covering the same region; pieces are
/// emitted as simplices. fn(cell_a, cell_b, span<const Vec2> verts).
template <class Fn>
inline void for_each_overlap(const SimplicialGrid& A, const SimplicialGrid& B, Fn&& fn) {
  if (A.dim == 0) {
    const std::array<Vec2, 1> v{A.nodes[A.cells[0][0]]};
    fn(0, 0, std::span<const Vec2>(v.data(), 1));
    return;
  }
  if (A.dim == 1) {
    // Interval sweep along the common segment.
    auto pieces = [](const SimplicialGrid& g) {
      const Vec2 origin = g.nodes[g.cells[0][0]];
      std::vector<std::tuple<double, double, int>> list;
      for (int c = 0; c < g.num_cells(); ++c) {
        const double ta = g.tangent.dot(g.nodes[g.cells[c][0]] - origin);
        const double tb = g.tangent.dot(g.nodes[g.cells[c][1]] - origin);
        list.emplace_back(std::min(ta, tb), std::max(ta, tb), c);
      }
      std::sort(list.begin(), list.end());
      return list;
    };
    const Vec2 origin = A.nodes[A.cells[0][0]];
    auto la = pieces(A);
    std::vector<std::tuple<double, double, int>> lb;
    for (int c = 0; c < B.num_cells(); ++c) {
      const double ta = A.tangent.dot(B.nodes[B.cells[c][0]] - origin);
      const double tb = A.tangent.dot(B.nodes[B.cells[c][1]] - origin);
      lb.emplace_back(std::min(ta, tb), std::max(ta, tb), c);
    }
    std::sort(lb.begin(), lb.end());
    size_t ib = 0;
    for (const auto& [a0, a1, ca] : la) {
      while (ib < lb.size() && std::get<1>(lb[ib]) < a0 + 1e-14) ++ib;
      for (size_t k = ib; k < lb.size() && std::get<0>(lb[k]) < a1 - 1e-14; ++k) {
        const double p0 = std::max(a0, std::get<0>(lb[k]));
        const double p1 = std::min(a1, std::get<1>(lb[k]));
        if (p1 - p0 < 1e-14) continue;
        const std::array<Vec2, 2> v{origin + p0 * A.tangent, origin + p1 * A.tangent};
        fn(ca, std::get<2>(lb[k]), std::span<const Vec2>(v.data(), 2));
      }
    }
    return;
  }
  // 2D: bin B cells by bounding box, clip candidates against each A cell.
  const Aabb bb = aabb_of(B.nodes.begin(), B.nodes.end());
  const double diam = (bb.hi - bb.lo).norm();
  const double eps = 1e-12 * diam;
  const int nb = std::max(1, static_cast<int>(std::sqrt(B.num_cells() / 2.0)));
  const Vec2 span = bb.hi - bb.lo;
  auto bin_of = [&](const Vec2& p, bool hi_side) {
    int bx = static_cast<int>((p.x() - bb.lo.x()) / span.x() * nb) + (hi_side ? 1 : 0);
    int by = static_cast<int>((p.y() - bb.lo.y()) / span.y() * nb) + (hi_side ? 1 : 0);
    return std::pair{std::clamp(bx, 0, nb - 1), std::clamp(by, 0, nb - 1)};
  };
  std::vector<std::vector<int>> bins(static_cast<size_t>(nb) * nb);
  std::vector<Aabb> bbox(B.num_cells());
  for (int c = 0; c < B.num_cells(); ++c) {
    std::array<Vec2, 3> vs{B.nodes[B.cells[c][0]], B.nodes[B.cells[c][1]],
                           B.nodes[B.cells[c][2]]};
    bbox[c] = aabb_of(vs.begin(), vs.end());
    const auto [x0, y0] = bin_of(bbox[c].lo, false);
    const auto [x1, y1] = bin_of(bbox[c].hi, true);
    for (int bx = x0; bx <= x1; ++bx)
      for (int by = y0; by <= y1; ++by) bins[static_cast<size_t>(by) * nb + bx].push_back(c);
  }
  std::vector<int> stamp(B.num_cells(), -1);
  for (int ca = 0; ca < A.num_cells(); ++ca) {
    const std::array<Vec2, 3> ta{A.nodes[A.cells[ca][0]], A.nodes[A.cells[ca][1]],
                                 A.nodes[A.cells[ca][2]]};
    const Aabb abox = aabb_of(ta.begin(), ta.end());
    const double amin = 1e-12 * triangle_area(ta[0], ta[1], ta[2]);
    const auto [x0, y0] = bin_of(abox.lo, false);
    const auto [x1, y1] = bin_of(abox.hi, true);
    for (int bx = x0; bx <= x1; ++bx)
      for (int by = y0; by <= y1; ++by)
        for (int cb : bins[static_cast<size_t>(by) * nb + bx]) {
          if (stamp[cb] == ca) continue;
          stamp[cb] = ca;
          if (!abox.overlaps(bbox[cb], eps)) continue;
          const std::array<Vec2, 3> tb{B.nodes[B.cells[cb][0]], B.nodes[B.cells[cb][1]],
                                       B.nodes[B.cells[cb][2]]};
          const std::vector<Vec2> poly = clip_triangles(ta, tb, eps);
          if (poly.size() < 3) continue;
          const Vec2 ctr = polygon_centroid(poly);
          for (size_t k = 0; k < poly.size(); ++k) {
            const std::array<Vec2, 3> tri{poly[k], poly[(k + 1) % poly.size()], ctr};
            if (triangle_area(tri[0], tri[1], tri[2]) < amin) continue;
            fn(ca, cb, std::span<const Vec2>(tri.data(), 3));
          }
        }
  }
}

} // namespace detail

/// Evaluate the local estimators and the majorant of a solved configuration.
/// `srec` are the reconstructed conforming potentials, one per subdomain.
inline EstimateReport estimate(const MdSystem& sys, const MdSolution& sol,
                               const std::vector<GridField>& srec) {
  const GridBundle& bundle = *sys.bundle;
  const MdDomain& dom = *bundle.domain;
  const int ns = static_cast<int>(dom.subdomains.size());
  const int ni = static_cast<int>(dom.interfaces.size());
  EstimateReport rep;
  rep.eta_df_par.resize(ns);
  rep.eta_r.resize(ns);
  rep.eta_df_perp.resize(ni);

  // Mortar projections used by the residual terms, per interface.
  std::vector<GridField> mortar_fields, dlam_lo, q_hi, q_lo;
  mortar_fields.reserve(ni);
  for (int j = 0; j < ni; ++j) {
    mortar_fields.push_back(make_p0(bundle.interface_grids[j], sol.mortar[j]));
    dlam_lo.push_back(sys.projectors[j].flux_to_lo(mortar_fields[j], 0));
    q_hi.push_back(sys.projectors[j].primal_from_hi(
        trace_on_internal_boundary(srec[sys.hi_sub[j]], bundle.internal_boundaries[j])));
    q_lo.push_back(sys.projectors[j].primal_from_lo(srec[sys.lo_sub[j]]));
  }

  for (int i = 0; i < ns; ++i) {
    const Subdomain& sub = dom.subdomains[i];
    const SimplicialGrid& g = bundle.subgrids[i];
    rep.eta_df_par[i].assign(g.num_cells(), 0.0);
    rep.eta_r[i].assign(g.num_cells(), 0.0);
    if (sub.dim == 0) continue; // point cells carry no volume estimators
    const std::vector<double> wells = detail::well_cell_sums(sub, g);
    const QuadratureRule rule = quadrature_rule(g.dim, 3);
    std::array<Vec2, 3> vs;
    for (int c = 0; c < g.num_cells(); ++c) {
      const Rt0Cell r = rt0_cell(g, c);
      const Vec2 grad_s = cell_gradient_of_field(srec[i], c);
      for (int k = 0; k <= g.dim; ++k) vs[k] = g.nodes[g.cells[c][k]];

      double df2 = 0;
      double divu = 0;
      for (int a = 0; a < r.nf; ++a) divu += r.basis_div(a) * sol.flux[i][r.faces[a]];
      double lam_src = wells[c] / r.measure;
      for (int jid : dom.hat_S(sub.id))
        lam_src += *dlam_lo[dom.iface_index.at(jid)].cell(c);
      double r2 = 0;
      for_each_qp(std::span<const Vec2>(vs.data(), g.dim + 1), rule, [&](const Vec2& x, double w) {
        const Vec2 u = rt0_eval(r, sol.flux[i], x);
        if (g.dim == 2) {
          const Mat2 K = sub.K2 ? sub.K2(x) : Mat2::Identity();
          const Vec2 d = detail::inv_k2(sub, x) * u + grad_s;
          df2 += w * d.dot(K * d);
        } else {
          const double k1 = sub.K1 ? sub.K1(x) : 1.0;
          const Vec2 d = u / k1 + grad_s;
          df2 += w * k1 * d.dot(d);
        }
        const double resid = (sub.source ? sub.source(x) : 0.0) + lam_src - divu;
        r2 += w * resid * resid;
      });
      rep.eta_df_par[i][c] = std::sqrt(std::max(0.0, df2));
      const double ck = detail::min_permeability_eigenvalue(sub, g, c);
      rep.eta_r[i][c] = cell_diameter(g, c) / (M_PI * ck) * std::sqrt(std::max(0.0, r2));
    }
  }

  for (int j = 0; j < ni; ++j) {
    const Interface& ifc = dom.interfaces[j];
    const SimplicialGrid& gamma = bundle.interface_grids[j];
    rep.eta_df_perp[j].assign(gamma.num_cells(), 0.0);
    const QuadratureRule rule = quadrature_rule(gamma.dim, 3);
    std::array<Vec2, 3> vs;
    for (int m = 0; m < gamma.num_cells(); ++m) {
      const double lam = sol.mortar[j][m];
      for (int k = 0; k <= gamma.dim; ++k) vs[k] = gamma.nodes[gamma.cells[m][k]];
      double s2 = 0;
      for_each_qp(std::span<const Vec2>(vs.data(), gamma.dim + 1), rule,
                  [&](const Vec2& x, double w) {
                    const double kap = ifc.kappa(x);
                    const double jump = eval(q_lo[j], m, x) - eval(q_hi[j], m, x);
                    const double v = lam / std::sqrt(kap) + std::sqrt(kap) * jump;
                    s2 += w * v * v;
                  });
      rep.eta_df_perp[j][m] = std::sqrt(std::max(0.0, s2));
    }
  }

  // Aggregates. eta_Omega_i^2 collects the volume terms of one subdomain,
  // eta_Gamma_j^2 the interface terms; dimension tallies sum those.
  double df2 = 0, r2 = 0;
  for (int i = 0; i < ns; ++i) {
    double s = 0;
    for (double v : rep.eta_df_par[i]) s += v * v;
    for (double v : rep.eta_r[i]) s += v * v;
    rep.eta_subdomain[dom.subdomains[i].id] = std::sqrt(s);
    rep.eta_omega_dim[dom.subdomains[i].dim] += s;
    for (double v : rep.eta_df_par[i]) df2 += v * v;
    for (double v : rep.eta_r[i]) r2 += v * v;
  }
  for (int j = 0; j < ni; ++j) {
    double s = 0;
    for (double v : rep.eta_df_perp[j]) s += v * v;
    rep.eta_interface[dom.interfaces[j].id] = std::sqrt(s);
    rep.eta_gamma_dim[dom.interfaces[j].dim] += s;
    df2 += s;
  }
  for (auto& [d, v] : rep.eta_omega_dim) v = std::sqrt(v);
  for (auto& [d, v] : rep.eta_gamma_dim) v = std::sqrt(v);
  rep.eta_df = std::sqrt(df2);
  rep.eta_res = std::sqrt(r2);
  rep.majorant = rep.eta_df + rep.eta_res;
  return rep;
}

/// Closed-form reference fields, single-valued per subdomain.
struct ExactReference {
  std::function<double(int sub_id, const Vec2&)> pressure;
  std::function<Vec2(int sub_id, const Vec2&)> grad;
  std::function<Vec2(int sub_id, const Vec2&)> flux;
  std::function<double(int iface_id, const Vec2&)> mortar;
};

/// Fine matching solve used as reference truth.
struct Surrogate {
  std::unique_ptr<GridBundle> bundle;
  std::unique_ptr<MdSystem> sys;
  MdSolution sol;
  std::vector<GridField> srec;
};

inline Surrogate make_surrogate(const MdDomain& dom, double h_ref, const SolveOptions& opts = {}) {
  Surrogate s;
  s.bundle = std::make_unique<GridBundle>(generate_matching_bundle(dom, h_ref));
  s.sys = std::make_unique<MdSystem>(build_system(*s.bundle));
  s.sol = solve(*s.sys, opts);
  s.srec = reconstruct_all(*s.sys, s.sol);
  return s;
}

namespace detail {

template <class HiTrace, class LoValue, class Kappa>
inline double jump_error_sq(const std::vector<double>& breakpoints, const Vec2& a, const Vec2& b,
                            HiTrace&& ref_jump, LoValue&& num_jump, Kappa&& kappa) {
  const QuadratureRule rule = quadrature_rule(1, 5);
  const double len = (b - a).norm();
  double s = 0;
  for (size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    const double t0 = breakpoints[k], t1 = breakpoints[k + 1];
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const double t = t0 + rule.points[q].x() * (t1 - t0);
      const Vec2 x = a + t * (b - a);
      const double e = ref_jump(t, x) - num_jump(t, x);
      s += rule.weights[q] * (t1 - t0) * len * kappa(x) * e * e;
    }
  }
  return s;
}

} // namespace detail

/// Energy-norm distances to a closed-form reference: continuous norms with
/// identity traces (the estimator's projected traces appear only in the
/// majorant).
inline TrueErrors true_errors_exact(const MdSystem& sys, const MdSolution& sol,
                                    const std::vector<GridField>& srec,
                                    const ExactReference& ref) {
  if (!ref.pressure || !ref.grad || !ref.flux || !ref.mortar)
    throw MissingReferenceError("closed-form reference is incomplete");
  const GridBundle& bundle = *sys.bundle;
  const MdDomain& dom = *bundle.domain;
  TrueErrors err;
  const QuadratureRule rule2 = quadrature_rule(2, 5), rule1 = quadrature_rule(1, 5);
  for (int i = 0; i < static_cast<int>(dom.subdomains.size()); ++i) {
    const Subdomain& sub = dom.subdomains[i];
    if (sub.dim == 0) continue;
    const SimplicialGrid& g = bundle.subgrids[i];
    const QuadratureRule& rule = g.dim == 2 ? rule2 : rule1;
    std::array<Vec2, 3> vs;
    for (int c = 0; c < g.num_cells(); ++c) {
      const Rt0Cell r = rt0_cell(g, c);
      const Vec2 grad_s = cell_gradient_of_field(srec[i], c);
      for (int k = 0; k <= g.dim; ++k) vs[k] = g.nodes[g.cells[c][k]];
      for_each_qp(std::span<const Vec2>(vs.data(), g.dim + 1), rule, [&](const Vec2& x, double w) {
        const Vec2 dg = ref.grad(sub.id, x) - grad_s;
        const Vec2 du = ref.flux(sub.id, x) - rt0_eval(r, sol.flux[i], x);
        if (g.dim == 2) {
          const Mat2 K = sub.K2 ? sub.K2(x) : Mat2::Identity();
          err.primal += w * dg.dot(K * dg);
          err.dual += w * du.dot(detail::inv_k2(sub, x) * du);
        } else {
          const double k1 = sub.K1 ? sub.K1(x) : 1.0;
          err.primal += w * k1 * dg.dot(dg);
          err.dual += w * du.dot(du) / k1;
        }
      });
    }
  }
  for (int j = 0; j < static_cast<int>(dom.interfaces.size()); ++j) {
    const Interface& ifc = dom.interfaces[j];
    const int hi_id = ifc.hi, lo_id = ifc.lo;
    const GridField trace_hi =
        trace_on_internal_boundary(srec[sys.hi_sub[j]], bundle.internal_boundaries[j]);
    const GridField& s_lo = srec[sys.lo_sub[j]];
    const GridField lam_h = make_p0(bundle.interface_grids[j], sol.mortar[j]);
    if (ifc.dim == 0) {
      const Vec2 x = ifc.a;
      const double ej = (ref.pressure(lo_id, x) - ref.pressure(hi_id, x)) -
                        (eval(s_lo, 0, x) - eval(trace_hi, 0, x));
      err.primal += ifc.kappa(x) * ej * ej;
      const double el = ref.mortar(ifc.id, x) - sol.mortar[j][0];
      err.dual += el * el / ifc.kappa(x);
      continue;
    }
    const detail::SegmentSampler sh = detail::make_segment_sampler(trace_hi, ifc.a, ifc.b);
    const detail::SegmentSampler sl = detail::make_segment_sampler(s_lo, ifc.a, ifc.b);
    const detail::SegmentSampler sm = detail::make_segment_sampler(lam_h, ifc.a, ifc.b);
    std::vector<double> ts;
    detail::merge_breakpoints(ts, sh);
    detail::merge_breakpoints(ts, sl);
    detail::merge_breakpoints(ts, sm);
    const std::vector<double> bp = detail::sorted_unique(std::move(ts));
    err.primal += detail::jump_error_sq(
        bp, ifc.a, ifc.b,
        [&](double, const Vec2& x) { return ref.pressure(lo_id, x) - ref.pressure(hi_id, x); },
        [&](double t, const Vec2&) { return sl.at(t) - sh.at(t); },
        [&](const Vec2& x) { return ifc.kappa(x); });
    err.dual += detail::jump_error_sq(
        bp, ifc.a, ifc.b, [&](double, const Vec2& x) { return ref.mortar(ifc.id, x); },
        [&](double t, const Vec2&) { return sm.at(t); },
        [&](const Vec2& x) { return 1.0 / ifc.kappa(x); });
  }
  err.primal = std::sqrt(err.primal);
  err.dual = std::sqrt(err.dual);
  return err;
}

/// Energy-norm distances to a fine-grid surrogate, integrated exactly on the
/// streamed intersection of coarse and fine grids.
inline TrueErrors true_errors_surrogate(const MdSystem& sys, const MdSolution& sol,
                                        const std::vector<GridField>& srec, const Surrogate& ref) {
  const GridBundle& coarse = *sys.bundle;
  const GridBundle& fine = *ref.bundle;
  if (coarse.domain != fine.domain)
    throw MissingReferenceError("surrogate was built for a different domain");
  const MdDomain& dom = *coarse.domain;
  TrueErrors err;
  for (int i = 0; i < static_cast<int>(dom.subdomains.size()); ++i) {
    const Subdomain& sub = dom.subdomains[i];
    if (sub.dim == 0) continue;
    const SimplicialGrid& gc = coarse.subgrids[i];
    const SimplicialGrid& gf = fine.subgrids[i];
    const QuadratureRule rule = quadrature_rule(sub.dim, 5);
    int last_ca = -1, last_cb = -1;
    Rt0Cell rc, rf;
    Vec2 grad_c(0, 0), grad_f(0, 0);
    detail::for_each_overlap(gc, gf, [&](int ca, int cb, std::span<const Vec2> verts) {
      if (ca != last_ca) {
        rc = rt0_cell(gc, ca);
        grad_c = cell_gradient_of_field(srec[i], ca);
        last_ca = ca;
      }
      if (cb != last_cb) {
        rf = rt0_cell(gf, cb);
        grad_f = cell_gradient_of_field(ref.srec[i], cb);
        last_cb = cb;
      }
      const Vec2 dg = grad_f - grad_c;
      for_each_qp(verts, rule, [&](const Vec2& x, double w) {
        const Vec2 du = rt0_eval(rf, ref.sol.flux[i], x) - rt0_eval(rc, sol.flux[i], x);
        if (sub.dim == 2) {
          const Mat2 K = sub.K2 ? sub.K2(x) : Mat2::Identity();
          err.primal += w * dg.dot(K * dg);
          err.dual += w * du.dot(detail::inv_k2(sub, x) * du);
        } else {
          const double k1 = sub.K1 ? sub.K1(x) : 1.0;
          err.primal += w * k1 * dg.dot(dg);
          err.dual += w * du.dot(du) / k1;
        }
      });
    });
  }
  for (int j = 0; j < static_cast<int>(dom.interfaces.size()); ++j) {
    const Interface& ifc = dom.interfaces[j];
    const GridField tr_c =
        trace_on_internal_boundary(srec[sys.hi_sub[j]], coarse.internal_boundaries[j]);
    const GridField tr_f =
        trace_on_internal_boundary(ref.srec[sys.hi_sub[j]], fine.internal_boundaries[j]);
    const GridField& lo_c = srec[sys.lo_sub[j]];
    const GridField& lo_f = ref.srec[sys.lo_sub[j]];
    const GridField lam_c = make_p0(coarse.interface_grids[j], sol.mortar[j]);
    const GridField lam_f = make_p0(fine.interface_grids[j], ref.sol.mortar[j]);
    if (ifc.dim == 0) {
      const Vec2 x = ifc.a;
      const double ej = (eval(lo_f, 0, x) - eval(tr_f, 0, x)) -
                        (eval(lo_c, 0, x) - eval(tr_c, 0, x));
      err.primal += ifc.kappa(x) * ej * ej;
      const double el = ref.sol.mortar[j][0] - sol.mortar[j][0];
      err.dual += el * el / ifc.kappa(x);
      continue;
    }
    const detail::SegmentSampler shc = detail::make_segment_sampler(tr_c, ifc.a, ifc.b);
    const detail::SegmentSampler shf = detail::make_segment_sampler(tr_f, ifc.a, ifc.b);
    const detail::SegmentSampler slc = detail::make_segment_sampler(lo_c, ifc.a, ifc.b);
    const detail::SegmentSampler slf = detail::make_segment_sampler(lo_f, ifc.a, ifc.b);
    const detail::SegmentSampler smc = detail::make_segment_sampler(lam_c, ifc.a, ifc.b);
    const detail::SegmentSampler smf = detail::make_segment_sampler(lam_f, ifc.a, ifc.b);
    std::vector<double> ts;
    for (const auto* s : {&shc, &shf, &slc, &slf, &smc, &smf}) detail::merge_breakpoints(ts, *s);
    const std::vector<double> bp = detail::sorted_unique(std::move(ts));
    err.primal += detail::jump_error_sq(
        bp, ifc.a, ifc.b, [&](double t, const Vec2&) { return slf.at(t) - shf.at(t); },
        [&](double t, const Vec2&) { return slc.at(t) - shc.at(t); },
        [&](const Vec2& x) { return ifc.kappa(x); });
    err.dual += detail::jump_error_sq(
        bp, ifc.a, ifc.b, [&](double t, const Vec2&) { return smf.at(t); },
        [&](double t, const Vec2&) { return smc.at(t); },
        [&](const Vec2& x) { return 1.0 / ifc.kappa(x); });
  }
  err.primal = std::sqrt(err.primal);
  err.dual = std::sqrt(err.dual);
  return err;
}

inline void attach_true_errors(EstimateReport& rep, const TrueErrors& err) {
  rep.has_true_errors = true;
  rep.err_primal = err.primal;
  rep.err_dual = err.dual;
  rep.eff_primal = err.primal > 0 ? rep.majorant / err.primal
                                  : std::numeric_limits<double>::infinity();
  rep.eff_dual = err.dual > 0 ? rep.majorant / err.dual
                              : std::numeric_limits<double>::infinity();
}

} // namespace mdest
