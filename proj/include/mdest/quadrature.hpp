#pragma once

#include <span>
#include <vector>

#include "mdest/geometry.hpp"

namespace mdest {

/// Quadrature on the reference simplex.
/// dim 0: the point itself, weight 1 (counting measure).
/// dim 1: segment [0,1], weights sum to 1, points (t, 0).
/// dim 2: triangle (0,0)-(1,0)-(0,1), weights sum to 1/2.
struct QuadratureRule {
  int dim = 1;
  int degree = 1; // highest polynomial degree integrated exactly
  std::vector<Vec2> points;
  std::vector<double> weights;
  int size() const { return static_cast<int>(points.size()); }
};

namespace detail {

inline QuadratureRule gauss_segment(int n) {
  // Nodes/weights on [-1,1], mapped to [0,1].
  static const std::vector<std::vector<std::pair<double, double>>> tables = {
      {{0.0, 2.0}},
      {{-0.5773502691896257, 1.0}, {0.5773502691896257, 1.0}},
      {{-0.7745966692414834, 0.5555555555555556},
       {0.0, 0.8888888888888888},
       {0.7745966692414834, 0.5555555555555556}},
      {{-0.8611363115940526, 0.3478548451374538},
       {-0.3399810435848563, 0.6521451548625461},
       {0.3399810435848563, 0.6521451548625461},
       {0.8611363115940526, 0.3478548451374538}},
      {{-0.9061798459386640, 0.2369268850561891},
       {-0.5384693101056831, 0.4786286704993665},
       {0.0, 0.5688888888888889},
       {0.5384693101056831, 0.4786286704993665},
       {0.9061798459386640, 0.2369268850561891}}};
  QuadratureRule r;
  r.dim = 1;
  r.degree = 2 * n - 1;
  for (const auto& [x, w] : tables[n - 1]) {
    r.points.emplace_back(0.5 * (1.0 + x), 0.0);
    r.weights.push_back(0.5 * w);
  }
  return r;
}

inline void push_cyclic(QuadratureRule& r, double l1, double l2, double l3, double w) {
  // Barycentric coordinates on the reference triangle; weight scaled by ref area 1/2.
  r.points.emplace_back(l2, l3);
  r.weights.push_back(0.5 * w);
  if (l2 != l1 || l3 != l2) {
    r.points.emplace_back(l3, l1);
    r.weights.push_back(0.5 * w);
    r.points.emplace_back(l1, l2);
    r.weights.push_back(0.5 * w);
  }
}

inline QuadratureRule triangle_rule(int degree) {
  QuadratureRule r;
  r.dim = 2;
  if (degree <= 1) {
    r.degree = 1;
    push_cyclic(r, 1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0);
  } else if (degree <= 2) {
    r.degree = 2;
    push_cyclic(r, 2.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 3);
  } else if (degree <= 4) {
    r.degree = 4;
    push_cyclic(r, 0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011);
    push_cyclic(r, 0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322);
  } else {
    r.degree = 5;
    push_cyclic(r, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0.225);
    push_cyclic(r, 0.059715871789770, 0.470142064105115, 0.470142064105115, 0.132394152788506);
    push_cyclic(r, 0.797426985353087, 0.101286507323456, 0.101286507323456, 0.125939180544827);
  }
  return r;
}

} // namespace detail

/// Smallest stored rule integrating the requested degree exactly.
inline QuadratureRule quadrature_rule(int dim, int degree) {
  if (dim == 0) {
    QuadratureRule r;
    r.dim = 0;
    r.degree = 1000;
    r.points.emplace_back(0, 0);
    r.weights.push_back(1.0);
    return r;
  }
  if (dim == 1) {
    const int n = std::min(5, std::max(1, (degree + 2) / 2));
    return detail::gauss_segment(n);
  }
  return detail::triangle_rule(degree);
}

/// Apply fn(x_phys, w_phys) at each quadrature point of a physical simplex
/// with vertices verts (size dim+1). Weights sum to the simplex measure
/// (count 1 for points).
template <class Fn>
inline void for_each_qp(std::span<const Vec2> verts, const QuadratureRule& rule, Fn&& fn) {
  if (rule.dim == 0) {
    fn(verts[0], 1.0);
    return;
  }
  if (rule.dim == 1) {
    const Vec2 a = verts[0], b = verts[1];
    const double len = (b - a).norm();
    for (int q = 0; q < rule.size(); ++q)
      fn(a + rule.points[q].x() * (b - a), rule.weights[q] * len);
    return;
  }
  const Vec2 a = verts[0], b = verts[1], c = verts[2];
  const double scale = 2.0 * triangle_area(a, b, c);
  for (int q = 0; q < rule.size(); ++q) {
    const double u = rule.points[q].x(), v = rule.points[q].y();
    fn(a + u * (b - a) + v * (c - a), rule.weights[q] * scale);
  }
}

} // namespace mdest
