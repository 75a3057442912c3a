#pragma once

#include <cstdio>
#include <optional>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#ifdef MDEST_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include "mdest/projection.hpp"

namespace mdest {

/// Value-normalized RT0 data on one cell: phi_a(x) = sign_a |f_a| / (d |K|)
/// (x - opp_a), whose trace along the global normal of face a is 1 and whose
/// divergence is sign_a |f_a| / |K|. Point faces count |f| = 1.
struct Rt0Cell {
  int dim = 2;
  int nf = 3;
  double measure = 0;
  std::array<int, 3> faces{{-1, -1, -1}};
  std::array<double, 3> fmeas{};
  std::array<double, 3> sign{};
  std::array<Vec2, 3> opp;
  std::array<Vec2, 3> verts;

  Vec2 basis(int a, const Vec2& x) const {
    return sign[a] * fmeas[a] / (dim * measure) * (x - opp[a]);
  }
  double basis_div(int a) const { return sign[a] * fmeas[a] / measure; }
};

inline Rt0Cell rt0_cell(const SimplicialGrid& g, int c) {
  Rt0Cell r;
  r.dim = g.dim;
  r.nf = g.dim + 1;
  r.measure = cell_measure(g, c);
  for (int k = 0; k <= g.dim; ++k) r.verts[k] = g.nodes[g.cells[c][k]];
  for (int a = 0; a < r.nf; ++a) {
    const int fid = g.cell_faces[c][a];
    const Face& f = g.faces[fid];
    r.faces[a] = fid;
    r.fmeas[a] = f.measure;
    r.sign[a] = f.cells[0] == c ? f.sign[0] : f.sign[1];
    for (int k = 0; k <= g.dim; ++k) {
      const int node = g.cells[c][k];
      if (node != f.nodes[0] && node != f.nodes[1]) {
        r.opp[a] = g.nodes[node];
        break;
      }
    }
  }
  return r;
}

/// Flux vector at x from per-face normal-trace coefficients (full array,
/// indexed by face id).
inline Vec2 rt0_eval(const Rt0Cell& r, const std::vector<double>& face_coeffs, const Vec2& x) {
  Vec2 u(0, 0);
  for (int a = 0; a < r.nf; ++a) u += face_coeffs[r.faces[a]] * r.basis(a, x);
  return u;
}

/// How each face of a subdomain grid enters the linear system.
struct FaceRole {
  int dof = -1;     // global flux unknown, or -1
  int iface = -1;   // interface position when mortar-driven
  int ib_cell = -1; // row in that interface's trace-weight matrix
};

struct DofMap {
  std::vector<std::vector<FaceRole>> roles; // [subdomain][face]
  std::vector<int> lambda_offset;           // per interface position
  std::vector<int> p_offset;                // per subdomain position
  int n_u = 0, n_lambda = 0, n_p = 0, total = 0;
};

/// Everything derived from a bundle that both the solve and the error
/// estimate need: projection operators per interface, overlap and
/// trace-weight matrices, and the dof layout.
struct MdSystem {
  const GridBundle* bundle = nullptr;
  std::vector<InterfaceProjector> projectors; // per interface position
  std::vector<Eigen::MatrixXd> O_hi;          // [ib cell x mortar cell] overlap
  std::vector<Eigen::MatrixXd> W_hi;          // O_hi rows divided by face measure
  std::vector<Eigen::MatrixXd> O_lo;          // [lo cell x mortar cell] overlap
  std::vector<int> hi_sub, lo_sub;            // subdomain positions per interface
  DofMap dofs;
};

namespace detail {

/// (f, 1)_K per cell, degree-4 quadrature, plus any well terms.
inline std::vector<double> cell_source_integrals(const Subdomain& sub, const SimplicialGrid& g) {
  std::vector<double> s(g.num_cells(), 0.0);
  if (sub.source) {
    const QuadratureRule rule = quadrature_rule(g.dim, 4);
    std::array<Vec2, 3> vs;
    for (int c = 0; c < g.num_cells(); ++c) {
      for (int k = 0; k <= g.dim; ++k) vs[k] = g.nodes[g.cells[c][k]];
      for_each_qp(std::span<const Vec2>(vs.data(), g.dim + 1), rule,
                  [&](const Vec2& x, double w) { s[c] += w * sub.source(x); });
    }
  }
  if (!sub.cell_sources.empty()) {
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
  }
  return s;
}

inline Mat2 inv_k2(const Subdomain& sub, const Vec2& x) {
  if (!sub.K2) return Mat2::Identity();
  return sub.K2(x).inverse();
}

/// Dirichlet datum covering a boundary face, or nullptr for homogeneous data.
/// Explicit pieces win over a rest-piece.
inline const ScalarField* dirichlet_field_for_face(const Subdomain& sub, const SimplicialGrid& g,
                                                   const Face& face, double eps) {
  const ScalarField* gd = nullptr;
  for (const BoundaryPiece& piece : sub.boundary) {
    if (piece.type != BcType::dirichlet) continue;
    bool on = true;
    for (int k = 0; k < face.num_nodes(); ++k)
      if (!piece.rest && !point_on_segment(g.nodes[face.nodes[k]], piece.a, piece.b, eps))
        on = false;
    if (on) gd = &piece.value;
    if (on && !piece.rest) break;
  }
  return gd;
}

inline double inv_k1(const Subdomain& sub, const Vec2& x) {
  return sub.K1 ? 1.0 / sub.K1(x) : 1.0;
}

/// Local RT0 mass matrix weighted by the inverse permeability.
inline Eigen::MatrixXd rt0_local_mass(const Subdomain& sub, const Rt0Cell& r) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(r.nf, r.nf);
  const QuadratureRule rule = quadrature_rule(r.dim, 4);
  for_each_qp(std::span<const Vec2>(r.verts.data(), r.nf), rule, [&](const Vec2& x, double w) {
    std::array<Vec2, 3> v;
    for (int a = 0; a < r.nf; ++a) v[a] = r.basis(a, x);
    if (r.dim == 2) {
      const Mat2 Ki = inv_k2(sub, x);
      for (int a = 0; a < r.nf; ++a)
        for (int b = 0; b < r.nf; ++b) M(a, b) += w * v[a].dot(Ki * v[b]);
    } else {
      const double ki = inv_k1(sub, x);
      for (int a = 0; a < r.nf; ++a)
        for (int b = 0; b < r.nf; ++b) M(a, b) += w * ki * v[a].dot(v[b]);
    }
  });
  return M;
}

} // namespace detail

inline MdSystem build_system(const GridBundle& bundle) {
  const MdDomain& dom = *bundle.domain;
  MdSystem sys;
  sys.bundle = &bundle;
  const int ni = static_cast<int>(dom.interfaces.size());
  sys.projectors.reserve(ni);
  for (int j = 0; j < ni; ++j) {
    const Interface& ifc = dom.interfaces[j];
    const int lo = dom.sub_index.at(ifc.lo);
    sys.hi_sub.push_back(dom.sub_index.at(ifc.hi));
    sys.lo_sub.push_back(lo);
    sys.projectors.push_back(make_interface_projector(ifc, bundle.interface_grids[j],
                                                      bundle.internal_boundaries[j],
                                                      bundle.subgrids[lo]));
    sys.O_hi.push_back(overlap_matrix(sys.projectors.back().tg_hi));
    sys.O_lo.push_back(overlap_matrix(sys.projectors.back().tg_lo));
    Eigen::MatrixXd W = sys.O_hi.back();
    const InternalBoundary& ib = bundle.internal_boundaries[j];
    for (int e = 0; e < W.rows(); ++e) W.row(e) /= cell_measure(ib.grid, e);
    sys.W_hi.push_back(std::move(W));
  }

  // Flux dofs first, then mortars, then pressures.
  DofMap& dm = sys.dofs;
  const int ns = static_cast<int>(dom.subdomains.size());
  dm.roles.resize(ns);
  // face id -> ib cell, per interface, on the higher subdomain's grid
  std::vector<std::map<int, int>> ib_cell_of_face(ni);
  for (int j = 0; j < ni; ++j) {
    const auto& ids = bundle.internal_boundaries[j].face_ids;
    for (int e = 0; e < static_cast<int>(ids.size()); ++e) ib_cell_of_face[j][ids[e]] = e;
  }
  int next = 0;
  for (int i = 0; i < ns; ++i) {
    const SimplicialGrid& g = bundle.subgrids[i];
    dm.roles[i].resize(g.faces.size());
    if (dom.subdomains[i].dim == 0) continue;
    for (int f = 0; f < static_cast<int>(g.faces.size()); ++f) {
      const Face& face = g.faces[f];
      if (face.tag == FaceTag::interior || face.tag == FaceTag::dirichlet) {
        dm.roles[i][f].dof = next++;
      } else if (face.tag == FaceTag::internal) {
        const int j = dom.iface_index.at(face.interface_id);
        dm.roles[i][f].iface = j;
        dm.roles[i][f].ib_cell = ib_cell_of_face[j].at(f);
      }
      // Neumann faces stay at the prescribed no-flux value.
    }
  }
  dm.n_u = next;
  dm.lambda_offset.resize(ni);
  for (int j = 0; j < ni; ++j) {
    dm.lambda_offset[j] = next;
    next += bundle.interface_grids[j].num_cells();
  }
  dm.n_lambda = next - dm.n_u;
  dm.p_offset.resize(ns);
  for (int i = 0; i < ns; ++i) {
    dm.p_offset[i] = next;
    next += bundle.subgrids[i].num_cells();
  }
  dm.n_p = next - dm.n_u - dm.n_lambda;
  dm.total = next;
  return sys;
}

struct SolveOptions {
  double solver_tol = 1e-9; // relative residual acceptance bound
  int dense_threshold = 500;
};

struct MdSolution {
  std::vector<std::vector<double>> flux;     // [subdomain][face] normal-trace values
  std::vector<std::vector<double>> pressure; // [subdomain][cell]
  std::vector<std::vector<double>> mortar;   // [interface][mortar cell]
  double residual = 0;
  int unknowns = 0;
};

namespace detail {

inline Eigen::VectorXd solve_linear(const std::vector<Eigen::Triplet<double>>& trip, int n,
                                    const Eigen::VectorXd& rhs, const SolveOptions& opts,
                                    double* residual_out) {
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd x;
  if (n <= opts.dense_threshold) {
    Eigen::MatrixXd D(A);
    x = Eigen::PartialPivLU<Eigen::MatrixXd>(D).solve(rhs);
  } else {
#ifdef MDEST_HAVE_UMFPACK
    Eigen::UmfPackLU<Eigen::SparseMatrix<double>> lu(A);
    if (lu.info() != Eigen::Success) throw SingularSystemError("sparse factorization failed");
    x = lu.solve(rhs);
#else
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) throw SingularSystemError("sparse factorization failed");
    x = lu.solve(rhs);
#endif
  }
  const double res = (A * x - rhs).cwiseAbs().maxCoeff() /
                     std::max(1.0, rhs.cwiseAbs().maxCoeff());
  if (residual_out) *residual_out = res;
  if (!x.allFinite() || res > opts.solver_tol) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3e", res);
    throw SingularSystemError("linear solve residual " + std::string(buf) +
                              " exceeds tolerance");
  }
  return x;
}

} // namespace detail

/// Assemble and solve the coupled mixed system. Unknowns are free flux
/// traces, mortars, and pressures; mortar-driven faces are eliminated through
/// the trace weights, and conservation rows are negated so the system is
/// symmetric.
inline MdSolution solve(const MdSystem& sys, const SolveOptions& opts = {}) {
  const GridBundle& bundle = *sys.bundle;
  const MdDomain& dom = *bundle.domain;
  const DofMap& dm = sys.dofs;
  const int ns = static_cast<int>(dom.subdomains.size());
  const int ni = static_cast<int>(dom.interfaces.size());

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dm.total);

  // Column/row expansion of each face's coefficient in the unknown vector.
  // Free faces map to their own dof; mortar-driven faces spread over the
  // interface's mortar dofs with trace weights. Neumann faces expand to
  // nothing (their value is zero).
  std::vector<std::pair<int, double>> ea, eb;
  auto expand = [&](int i, int f, std::vector<std::pair<int, double>>& out) {
    out.clear();
    const FaceRole& role = dm.roles[i][f];
    if (role.dof >= 0) {
      out.emplace_back(role.dof, 1.0);
    } else if (role.iface >= 0) {
      const Eigen::MatrixXd& W = sys.W_hi[role.iface];
      const int off = dm.lambda_offset[role.iface];
      for (int m = 0; m < W.cols(); ++m)
        if (W(role.ib_cell, m) != 0.0) out.emplace_back(off + m, W(role.ib_cell, m));
    }
  };

  const QuadratureRule face_rule_1d = quadrature_rule(1, 4);
  for (int i = 0; i < ns; ++i) {
    const Subdomain& sub = dom.subdomains[i];
    const SimplicialGrid& g = bundle.subgrids[i];
    const std::vector<double> src = detail::cell_source_integrals(sub, g);
    if (sub.dim == 0) {
      rhs[dm.p_offset[i]] -= src[0];
      continue;
    }
    for (int c = 0; c < g.num_cells(); ++c) {
      const Rt0Cell r = rt0_cell(g, c);
      const Eigen::MatrixXd M = detail::rt0_local_mass(sub, r);
      const int pdof = dm.p_offset[i] + c;
      for (int a = 0; a < r.nf; ++a) {
        expand(i, r.faces[a], ea);
        if (ea.empty()) continue;
        for (int b = 0; b < r.nf; ++b) {
          expand(i, r.faces[b], eb);
          for (const auto& [ra, wa] : ea)
            for (const auto& [cb, wb] : eb) trip.emplace_back(ra, cb, wa * wb * M(a, b));
        }
        // momentum-pressure coupling, and its negated-conservation mirror
        const double dv = r.sign[a] * r.fmeas[a];
        for (const auto& [ra, wa] : ea) {
          trip.emplace_back(ra, pdof, -wa * dv);
          trip.emplace_back(pdof, ra, -wa * dv);
        }
      }
      rhs[pdof] -= src[c];
    }
    // Dirichlet data enters the momentum rows of its faces.
    for (int f = 0; f < static_cast<int>(g.faces.size()); ++f) {
      const Face& face = g.faces[f];
      if (face.tag != FaceTag::dirichlet) continue;
      const ScalarField* gd = detail::dirichlet_field_for_face(sub, g, face, dom.eps_geom);
      if (!gd || !*gd) continue;
      double integral = 0;
      if (face.num_nodes() == 1) {
        integral = (*gd)(g.nodes[face.nodes[0]]);
      } else {
        const std::array<Vec2, 2> vs{g.nodes[face.nodes[0]], g.nodes[face.nodes[1]]};
        for_each_qp(std::span<const Vec2>(vs.data(), 2), face_rule_1d,
                    [&](const Vec2& x, double w) { integral += w * (*gd)(x); });
      }
      rhs[dm.roles[i][f].dof] -= integral;
    }
  }

  // Mortar mass and the lower-side coupling.
  for (int j = 0; j < ni; ++j) {
    const Interface& ifc = dom.interfaces[j];
    const SimplicialGrid& gamma = bundle.interface_grids[j];
    const int off = dm.lambda_offset[j];
    const QuadratureRule rule = quadrature_rule(gamma.dim, 4);
    std::array<Vec2, 3> vs;
    for (int m = 0; m < gamma.num_cells(); ++m) {
      double mass = 0;
      for (int k = 0; k <= gamma.dim; ++k) vs[k] = gamma.nodes[gamma.cells[m][k]];
      for_each_qp(std::span<const Vec2>(vs.data(), gamma.dim + 1), rule,
                  [&](const Vec2& x, double w) { mass += w / ifc.kappa(x); });
      trip.emplace_back(off + m, off + m, mass);
    }
    const Eigen::MatrixXd& O = sys.O_lo[j];
    const int plo = dm.p_offset[sys.lo_sub[j]];
    for (int K = 0; K < O.rows(); ++K)
      for (int m = 0; m < O.cols(); ++m)
        if (O(K, m) != 0.0) {
          trip.emplace_back(plo + K, off + m, O(K, m));
          trip.emplace_back(off + m, plo + K, O(K, m));
        }
  }

  MdSolution sol;
  sol.unknowns = dm.total;
  const Eigen::VectorXd x = detail::solve_linear(trip, dm.total, rhs, opts, &sol.residual);

  sol.flux.resize(ns);
  sol.pressure.resize(ns);
  for (int i = 0; i < ns; ++i) {
    const SimplicialGrid& g = bundle.subgrids[i];
    sol.pressure[i].resize(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) sol.pressure[i][c] = x[dm.p_offset[i] + c];
    sol.flux[i].assign(g.faces.size(), 0.0);
    for (int f = 0; f < static_cast<int>(g.faces.size()); ++f) {
      expand(i, f, ea);
      double v = 0;
      for (const auto& [idx, w] : ea) v += w * x[idx];
      sol.flux[i][f] = v;
    }
  }
  sol.mortar.resize(ni);
  for (int j = 0; j < ni; ++j) {
    sol.mortar[j].resize(bundle.interface_grids[j].num_cells());
    for (int m = 0; m < static_cast<int>(sol.mortar[j].size()); ++m)
      sol.mortar[j][m] = x[dm.lambda_offset[j] + m];
  }
  return sol;
}

/// Largest cellwise mass balance defect of a solution:
/// |div u_K - sum_{j in hatS} (O_lo lambda)_K - (f, 1)_K|.
inline double max_conservation_residual(const MdSystem& sys, const MdSolution& sol) {
  const GridBundle& bundle = *sys.bundle;
  const MdDomain& dom = *bundle.domain;
  double worst = 0;
  for (int i = 0; i < static_cast<int>(dom.subdomains.size()); ++i) {
    const Subdomain& sub = dom.subdomains[i];
    const SimplicialGrid& g = bundle.subgrids[i];
    const std::vector<double> src = detail::cell_source_integrals(sub, g);
    std::vector<double> resid(g.num_cells(), 0.0);
    if (sub.dim > 0) {
      for (int c = 0; c < g.num_cells(); ++c) {
        const Rt0Cell r = rt0_cell(g, c);
        for (int a = 0; a < r.nf; ++a)
          resid[c] += r.sign[a] * r.fmeas[a] * sol.flux[i][r.faces[a]];
      }
    }
    for (int jid : dom.hat_S(sub.id)) {
      const int j = dom.iface_index.at(jid);
      const Eigen::MatrixXd& O = sys.O_lo[j];
      for (int K = 0; K < O.rows(); ++K)
        for (int m = 0; m < O.cols(); ++m) resid[K] -= O(K, m) * sol.mortar[j][m];
    }
    for (int c = 0; c < g.num_cells(); ++c)
      worst = std::max(worst, std::abs(resid[c] - src[c]));
  }
  return worst;
}

} // namespace mdest
