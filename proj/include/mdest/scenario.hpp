#pragma once

#include <optional>
#include <string>

#include "mdest/estimator.hpp"

namespace mdest {

enum class ReferenceKind { analytic, surrogate, none };

/// A bundled verification setup: domain, default sweep, and the reference
/// truth used for effectivities.
struct Scenario {
  std::string name;
  MdDomain domain;
  std::vector<double> mesh_sizes;
  std::vector<int> perturb_directions;
  ReferenceKind reference = ReferenceKind::none;
  ExactReference exact; // populated when reference == analytic
  std::string expected_table; // regression fixture, relative to the data dir
};

/// Two matrix blocks in series with a unit-width conductive fracture between
/// them; the exact solution is piecewise linear with jump 1/3 at each side.
inline Scenario series_resistance_scenario() {
  Scenario sc;
  sc.name = "series_resistance";
  sc.mesh_sizes = {0.125, 0.0625, 0.03125};
  sc.perturb_directions = {+1, -1};
  sc.reference = ReferenceKind::analytic;
  sc.expected_table = "series_resistance.csv";

  Subdomain left;
  left.id = 1;
  left.dim = 2;
  left.polygon = {Vec2(0, 0), Vec2(0.5, 0), Vec2(0.5, 1), Vec2(0, 1)};
  left.K2 = constant_tensor(1.0);
  BoundaryPiece inlet;
  inlet.type = BcType::dirichlet;
  inlet.a = Vec2(0, 0);
  inlet.b = Vec2(0, 1);
  inlet.value = constant_field(1.0);
  BoundaryPiece sealed;
  sealed.type = BcType::neumann;
  sealed.rest = true;
  left.boundary = {inlet, sealed};

  Subdomain right;
  right.id = 2;
  right.dim = 2;
  right.polygon = {Vec2(0.5, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0.5, 1)};
  right.K2 = constant_tensor(1.0);
  BoundaryPiece outlet;
  outlet.type = BcType::dirichlet;
  outlet.a = Vec2(1, 0);
  outlet.b = Vec2(1, 1);
  outlet.value = constant_field(0.0);
  right.boundary = {outlet, sealed};

  Subdomain frac;
  frac.id = 3;
  frac.dim = 1;
  frac.seg_a = Vec2(0.5, 0);
  frac.seg_b = Vec2(0.5, 1);
  frac.K1 = constant_field(1.0);
  frac.boundary = {sealed};

  Interface il;
  il.id = 10;
  il.hi = 1;
  il.lo = 3;
  il.dim = 1;
  il.a = Vec2(0.5, 0);
  il.b = Vec2(0.5, 1);
  il.side_normal = Vec2(-1, 0);
  il.kappa = constant_field(1.0);
  Interface ir = il;
  ir.id = 11;
  ir.hi = 2;
  ir.side_normal = Vec2(1, 0);

  sc.domain = build_domain({left, right, frac}, {il, ir});

  sc.exact.pressure = [](int id, const Vec2& x) {
    return id == 1 ? 1 - x.x() / 3 : (id == 2 ? (1 - x.x()) / 3 : 0.5);
  };
  sc.exact.grad = [](int id, const Vec2&) {
    return id == 3 ? Vec2(0, 0) : Vec2(-1.0 / 3, 0);
  };
  sc.exact.flux = [](int id, const Vec2&) {
    return id == 3 ? Vec2(0, 0) : Vec2(1.0 / 3, 0);
  };
  sc.exact.mortar = [](int iid, const Vec2&) { return iid == 10 ? 1.0 / 3 : -1.0 / 3; };
  return sc;
}

/// A single matrix block with an embedded fracture whose tips end inside the
/// domain, driven by through-flow and a smooth volumetric source.
inline Scenario smooth_source_scenario() {
  Scenario sc;
  sc.name = "smooth_source";
  sc.mesh_sizes = {0.125, 0.0625, 0.03125};
  sc.perturb_directions = {+1, -1};
  sc.reference = ReferenceKind::surrogate;
  sc.expected_table = "smooth_source.csv";

  Subdomain matrix;
  matrix.id = 1;
  matrix.dim = 2;
  matrix.polygon = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  matrix.K2 = constant_tensor(1.0);
  matrix.source = [](const Vec2& x) {
    return std::sin(M_PI * x.x()) * std::cos(M_PI * x.y());
  };
  BoundaryPiece inlet;
  inlet.type = BcType::dirichlet;
  inlet.a = Vec2(0, 0);
  inlet.b = Vec2(0, 1);
  inlet.value = constant_field(1.0);
  BoundaryPiece outlet;
  outlet.type = BcType::dirichlet;
  outlet.a = Vec2(1, 0);
  outlet.b = Vec2(1, 1);
  outlet.value = constant_field(0.0);
  BoundaryPiece sealed;
  sealed.type = BcType::neumann;
  sealed.rest = true;
  matrix.boundary = {inlet, outlet, sealed};

  Subdomain frac;
  frac.id = 2;
  frac.dim = 1;
  frac.seg_a = Vec2(0.5, 0.25);
  frac.seg_b = Vec2(0.5, 0.75);
  frac.K1 = constant_field(100.0);
  frac.boundary = {sealed};

  Interface il;
  il.id = 11;
  il.hi = 1;
  il.lo = 2;
  il.dim = 1;
  il.a = frac.seg_a;
  il.b = frac.seg_b;
  il.side_normal = Vec2(-1, 0);
  il.kappa = constant_field(100.0);
  Interface ir = il;
  ir.id = 12;
  ir.side_normal = Vec2(1, 0);

  sc.domain = build_domain({matrix, frac}, {il, ir});
  return sc;
}

/// Two full-cut fractures crossing at a 0D intersection, split into four arm
/// subdomains around the crossing point; heterogeneous matrix blocks and a
/// well doublet in the fracture arms.
inline Scenario network_scenario_2d() {
  Scenario sc;
  sc.name = "network_2d";
  sc.mesh_sizes = {0.125, 0.0625, 0.03125};
  sc.perturb_directions = {+1, -1};
  sc.reference = ReferenceKind::surrogate;
  sc.expected_table = "network_2d.csv";

  BoundaryPiece sealed;
  sealed.type = BcType::neumann;
  sealed.rest = true;

  auto quadrant = [&](int id, double x0, double y0, double kval,
                      std::optional<double> dirichlet_at_x, double pval) {
    Subdomain q;
    q.id = id;
    q.dim = 2;
    q.polygon = {Vec2(x0, y0), Vec2(x0 + 0.5, y0), Vec2(x0 + 0.5, y0 + 0.5),
                 Vec2(x0, y0 + 0.5)};
    q.K2 = constant_tensor(kval);
    if (dirichlet_at_x) {
      BoundaryPiece d;
      d.type = BcType::dirichlet;
      d.a = Vec2(*dirichlet_at_x, y0);
      d.b = Vec2(*dirichlet_at_x, y0 + 0.5);
      d.value = constant_field(pval);
      q.boundary = {d, sealed};
    } else {
      q.boundary = {sealed};
    }
    return q;
  };
  const Subdomain ll = quadrant(1, 0.0, 0.0, 1.0, 0.0, 1.0);
  const Subdomain lr = quadrant(2, 0.5, 0.0, 0.1, 1.0, 0.0);
  const Subdomain ul = quadrant(3, 0.0, 0.5, 0.1, 0.0, 1.0);
  const Subdomain ur = quadrant(4, 0.5, 0.5, 1.0, 1.0, 0.0);

  auto arm = [&](int id, const Vec2& a, const Vec2& b) {
    Subdomain s;
    s.id = id;
    s.dim = 1;
    s.seg_a = a;
    s.seg_b = b;
    s.K1 = constant_field(1e4);
    s.boundary = {sealed};
    return s;
  };
  Subdomain bottom = arm(5, Vec2(0.5, 0), Vec2(0.5, 0.5));
  Subdomain top = arm(6, Vec2(0.5, 0.5), Vec2(0.5, 1));
  Subdomain west = arm(7, Vec2(0, 0.5), Vec2(0.5, 0.5));
  Subdomain east = arm(8, Vec2(0.5, 0.5), Vec2(1, 0.5));
  bottom.cell_sources = {{Vec2(0.5, 0.25), +0.1}};
  top.cell_sources = {{Vec2(0.5, 0.75), -0.1}};

  Subdomain cross;
  cross.id = 9;
  cross.dim = 0;
  cross.point = Vec2(0.5, 0.5);

  auto coupling = [&](int id, int hi, int lo, const Vec2& a, const Vec2& b,
                      const Vec2& n) {
    Interface ifc;
    ifc.id = id;
    ifc.hi = hi;
    ifc.lo = lo;
    ifc.dim = 1;
    ifc.a = a;
    ifc.b = b;
    ifc.side_normal = n;
    ifc.kappa = constant_field(1e4);
    return ifc;
  };
  auto point_coupling = [&](int id, int hi) {
    Interface ifc;
    ifc.id = id;
    ifc.hi = hi;
    ifc.lo = 9;
    ifc.dim = 0;
    ifc.a = Vec2(0.5, 0.5);
    ifc.b = Vec2(0.5, 0.5);
    ifc.kappa = constant_field(1e4);
    return ifc;
  };

  sc.domain = build_domain(
      {ll, lr, ul, ur, bottom, top, west, east, cross},
      {coupling(101, 1, 5, Vec2(0.5, 0), Vec2(0.5, 0.5), Vec2(-1, 0)),
       coupling(102, 2, 5, Vec2(0.5, 0), Vec2(0.5, 0.5), Vec2(1, 0)),
       coupling(103, 3, 6, Vec2(0.5, 0.5), Vec2(0.5, 1), Vec2(-1, 0)),
       coupling(104, 4, 6, Vec2(0.5, 0.5), Vec2(0.5, 1), Vec2(1, 0)),
       coupling(105, 1, 7, Vec2(0, 0.5), Vec2(0.5, 0.5), Vec2(0, -1)),
       coupling(106, 3, 7, Vec2(0, 0.5), Vec2(0.5, 0.5), Vec2(0, 1)),
       coupling(107, 2, 8, Vec2(0.5, 0.5), Vec2(1, 0.5), Vec2(0, -1)),
       coupling(108, 4, 8, Vec2(0.5, 0.5), Vec2(1, 0.5), Vec2(0, 1)),
       point_coupling(109, 5), point_coupling(110, 6), point_coupling(111, 7),
       point_coupling(112, 8)});
  return sc;
}

inline std::optional<Scenario> scenario_by_name(const std::string& name) {
  if (name == "series_resistance") return series_resistance_scenario();
  if (name == "smooth_source") return smooth_source_scenario();
  if (name == "network_2d") return network_scenario_2d();
  return std::nullopt;
}

} // namespace mdest
