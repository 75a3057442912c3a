#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdest/geometry.hpp"

namespace mdest {

using ScalarField = std::function<double(const Vec2&)>;
using MatrixField = std::function<Mat2(const Vec2&)>;

inline ScalarField constant_field(double v) {
  return [v](const Vec2&) { return v; };
}
inline MatrixField constant_tensor(double v) {
  return [v](const Vec2&) { return Mat2(Mat2::Identity() * v); };
}

enum class BcType { dirichlet, neumann };

/// One declared piece of a subdomain's external boundary. For 2D subdomains a
/// segment, for 1D subdomains a point (b == a). `rest` pieces catch every
/// boundary face not claimed by an explicit piece or an interface.
struct BoundaryPiece {
  BcType type = BcType::neumann;
  bool rest = false;
  Vec2 a{0, 0}, b{0, 0};
  ScalarField value; // Dirichlet data; Neumann pieces are no-flux
};

/// Subdomain of intrinsic dimension 0, 1, or 2. Geometry fields are used
/// according to dim; materials are callables sampled per cell at attach time.
struct Subdomain {
  int id = -1;
  int dim = 2;
  std::vector<Vec2> polygon; // dim 2 (CCW rectangle for the built-in mesher)
  Vec2 seg_a{0, 0}, seg_b{0, 0}; // dim 1
  Vec2 point{0, 0};              // dim 0

  MatrixField K2;          // dim 2 permeability
  ScalarField K1;          // dim 1 tangential permeability
  ScalarField source;      // smooth part of f_i
  std::vector<std::pair<Vec2, double>> cell_sources; // P0 well terms: (location, value)
  std::vector<BoundaryPiece> boundary;

  Vec2 seg_tangent() const { return (seg_b - seg_a).normalized(); }
};

/// Codimension-one coupling object. dim equals the lower subdomain's dim.
/// For dim 1 the geometry is a segment and side_normal is the unit normal of
/// that segment pointing into the bulk of the higher-dimensional side; for
/// dim 0 the geometry is the point a (b == a).
struct Interface {
  int id = -1;
  int hi = -1; // subdomain id of the higher-dimensional side
  int lo = -1;
  int dim = 1;
  Vec2 a{0, 0}, b{0, 0};
  Vec2 side_normal{0, 0};
  ScalarField kappa; // normal permeability, > 0
};

struct CouplingTriplet {
  const Interface* iface;
  const Subdomain* hi;
  const Subdomain* lo;
};

/// Mixed-dimensional domain: subdomains, interfaces, and the two index sets
/// per subdomain (hat_S: interfaces toward higher-dimensional neighbours,
/// i.e. this subdomain is the lower side; check_S: this subdomain is the
/// higher side).
struct MdDomain {
  std::vector<Subdomain> subdomains;
  std::vector<Interface> interfaces;
  double eps_geom = 1e-10;

  std::map<int, int> sub_index;   // id -> position
  std::map<int, int> iface_index; // id -> position
  std::map<int, std::vector<int>> hat_s;
  std::map<int, std::vector<int>> check_s;

  const Subdomain& subdomain(int id) const { return subdomains[sub_index.at(id)]; }
  const Interface& interface_by_id(int id) const { return interfaces[iface_index.at(id)]; }
  const std::vector<int>& hat_S(int sub_id) const { return hat_s.at(sub_id); }
  const std::vector<int>& check_S(int sub_id) const { return check_s.at(sub_id); }
};

inline CouplingTriplet coupling_triplet(const MdDomain& d, int interface_id) {
  const Interface& ifc = d.interface_by_id(interface_id);
  const Subdomain& hi = d.subdomain(ifc.hi);
  const Subdomain& lo = d.subdomain(ifc.lo);
  const double tol = d.eps_geom;
  if (ifc.dim == 1) {
    if (!segments_coincide(ifc.a, ifc.b, lo.seg_a, lo.seg_b, tol))
      throw GeometryMismatchError("interface segment does not coincide with lower subdomain");
  } else {
    if ((ifc.a - lo.point).norm() > tol)
      throw GeometryMismatchError("interface point does not coincide with lower subdomain");
    const bool at_end = (ifc.a - hi.seg_a).norm() <= tol || (ifc.a - hi.seg_b).norm() <= tol;
    if (!at_end)
      throw GeometryMismatchError("point interface must sit at an endpoint of the higher side");
  }
  return {&ifc, &hi, &lo};
}

namespace detail {

inline void check_spd_samples(const Subdomain& s, const std::vector<Vec2>& pts) {
  for (const Vec2& p : pts) {
    if (s.dim == 2) {
      const Mat2 K = s.K2 ? s.K2(p) : Mat2::Identity();
      if (std::abs(K(0, 1) - K(1, 0)) > 1e-12 * K.norm() + 1e-300)
        throw NonSpdError("permeability tensor not symmetric");
      Eigen::SelfAdjointEigenSolver<Mat2> es(K);
      if (es.eigenvalues().minCoeff() <= 0) throw NonSpdError("permeability tensor not positive");
    } else if (s.dim == 1) {
      const double k = s.K1 ? s.K1(p) : 1.0;
      if (k <= 0) throw NonSpdError("tangential permeability not positive");
    }
  }
}

inline std::vector<Vec2> sample_points(const Subdomain& s) {
  std::vector<Vec2> pts;
  if (s.dim == 2) {
    Vec2 c(0, 0);
    for (const Vec2& v : s.polygon) c += v;
    c /= double(s.polygon.size());
    pts.push_back(c);
    for (const Vec2& v : s.polygon) pts.push_back(0.5 * (v + c));
  } else if (s.dim == 1) {
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) pts.push_back(s.seg_a + t * (s.seg_b - s.seg_a));
  } else {
    pts.push_back(s.point);
  }
  return pts;
}

} // namespace detail

/// Validates and indexes a domain description. Throws CouplingDimensionError,
/// GeometryMismatchError, NonSpdError, or MissingDirichletError.
inline MdDomain build_domain(std::vector<Subdomain> subs, std::vector<Interface> ifaces) {
  MdDomain d;
  d.subdomains = std::move(subs);
  d.interfaces = std::move(ifaces);

  std::vector<Vec2> all_pts;
  for (const Subdomain& s : d.subdomains) {
    if (s.dim == 2) {
      if (s.polygon.size() < 3) throw GeometryMismatchError("2D subdomain needs a polygon");
      all_pts.insert(all_pts.end(), s.polygon.begin(), s.polygon.end());
    } else if (s.dim == 1) {
      all_pts.push_back(s.seg_a);
      all_pts.push_back(s.seg_b);
    } else if (s.dim == 0) {
      all_pts.push_back(s.point);
    } else {
      throw CouplingDimensionError("subdomain dimension outside {0,1,2}");
    }
  }
  if (all_pts.empty()) throw GeometryMismatchError("empty domain");
  const Aabb box = aabb_of(all_pts.begin(), all_pts.end());
  d.eps_geom = 1e-10 * std::max((box.hi - box.lo).norm(), 1e-30);

  for (size_t k = 0; k < d.subdomains.size(); ++k) {
    const int id = d.subdomains[k].id;
    if (!d.sub_index.emplace(id, static_cast<int>(k)).second)
      throw GeometryMismatchError("duplicate subdomain id " + std::to_string(id));
    d.hat_s[id];
    d.check_s[id];
  }
  for (size_t k = 0; k < d.interfaces.size(); ++k) {
    Interface& ifc = d.interfaces[k];
    if (!d.iface_index.emplace(ifc.id, static_cast<int>(k)).second)
      throw GeometryMismatchError("duplicate interface id " + std::to_string(ifc.id));
    if (!d.sub_index.count(ifc.hi) || !d.sub_index.count(ifc.lo))
      throw GeometryMismatchError("interface references unknown subdomain");
    const Subdomain& hi = d.subdomain(ifc.hi);
    const Subdomain& lo = d.subdomain(ifc.lo);
    if (hi.dim != lo.dim + 1)
      throw CouplingDimensionError("interface sides must differ by one dimension");
    ifc.dim = lo.dim;
    if (ifc.dim == 1) {
      // Both sides of an immersed segment carry their own interface; the
      // normal is the only thing that tells them apart.
      if (ifc.side_normal.norm() == 0)
        throw GeometryMismatchError("interface " + std::to_string(ifc.id) +
                                    " needs a side_normal selecting its host side");
      ifc.side_normal.normalize();
    }
    d.hat_s[lo.id].push_back(ifc.id);
    d.check_s[hi.id].push_back(ifc.id);
  }
  for (const Interface& ifc : d.interfaces) coupling_triplet(d, ifc.id);

  bool any_dirichlet = false;
  for (const Subdomain& s : d.subdomains) {
    detail::check_spd_samples(s, detail::sample_points(s));
    for (const BoundaryPiece& b : s.boundary)
      if (b.type == BcType::dirichlet) any_dirichlet = true;
  }
  for (const Interface& ifc : d.interfaces) {
    const ScalarField& kap = ifc.kappa;
    const Vec2 mid = 0.5 * (ifc.a + ifc.b);
    if (kap && kap(mid) <= 0) throw NonSpdError("interface permeability not positive");
  }
  if (!any_dirichlet)
    throw MissingDirichletError("domain declares no Dirichlet boundary anywhere");
  return d;
}

} // namespace mdest
