#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "mdest/errors.hpp"

namespace mdest {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Rotate by -90 degrees: maps a CCW edge direction to its outward normal.
inline Vec2 rot_cw(const Vec2& v) { return Vec2(v.y(), -v.x()); }

inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * cross2(b - a, c - a);
}

inline double triangle_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return std::abs(signed_area(a, b, c));
}

/// Arc-length parameter of the projection of p onto the line through a,b.
inline double line_param(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  return (p - a).dot(d) / d.squaredNorm();
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double t = std::clamp(line_param(p, a, b), 0.0, 1.0);
  return (p - (a + t * (b - a))).norm();
}

inline bool point_on_segment(const Vec2& p, const Vec2& a, const Vec2& b, double tol) {
  return point_segment_distance(p, a, b) <= tol;
}

/// Same point set up to endpoint order.
inline bool segments_coincide(const Vec2& a1, const Vec2& b1, const Vec2& a2, const Vec2& b2,
                              double tol) {
  return ((a1 - a2).norm() <= tol && (b1 - b2).norm() <= tol) ||
         ((a1 - b2).norm() <= tol && (b1 - a2).norm() <= tol);
}

/// Barycentric membership test with an absolute geometric tolerance.
inline bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c,
                              double tol) {
  const double area = signed_area(a, b, c);
  if (std::abs(area) <= 0.0) return false;
  const double s = area > 0 ? 1.0 : -1.0;
  // Each sub-area over the edge length gives a distance; compare against tol directly.
  const double d0 = s * 2.0 * signed_area(a, b, p) / (b - a).norm();
  const double d1 = s * 2.0 * signed_area(b, c, p) / (c - b).norm();
  const double d2 = s * 2.0 * signed_area(c, a, p) / (a - c).norm();
  return d0 >= -tol && d1 >= -tol && d2 >= -tol;
}

struct Aabb {
  Vec2 lo{0, 0}, hi{0, 0};
  bool overlaps(const Aabb& o, double tol) const {
    return lo.x() <= o.hi.x() + tol && o.lo.x() <= hi.x() + tol && lo.y() <= o.hi.y() + tol &&
           o.lo.y() <= hi.y() + tol;
  }
};

template <class It>
inline Aabb aabb_of(It begin, It end) {
  Aabb box;
  box.lo = Vec2(std::numeric_limits<double>::max(), std::numeric_limits<double>::max());
  box.hi = -box.lo;
  for (It it = begin; it != end; ++it) {
    box.lo = box.lo.cwiseMin(*it);
    box.hi = box.hi.cwiseMax(*it);
  }
  return box;
}

inline double polygon_area(const std::vector<Vec2>& poly) {
  double twice = 0.0;
  const int n = static_cast<int>(poly.size());
  for (int i = 0; i < n; ++i) twice += cross2(poly[i], poly[(i + 1) % n]);
  return 0.5 * twice;
}

/// Area centroid of a convex polygon (vertex mean would bias the fan split).
inline Vec2 polygon_centroid(const std::vector<Vec2>& poly) {
  const int n = static_cast<int>(poly.size());
  double twice = 0.0;
  Vec2 c(0, 0);
  for (int i = 0; i < n; ++i) {
    const double w = cross2(poly[i], poly[(i + 1) % n]);
    twice += w;
    c += w * (poly[i] + poly[(i + 1) % n]);
  }
  if (std::abs(twice) <= 0.0) return poly[0];
  return c / (3.0 * twice);
}

/// Sutherland-Hodgman clip of a convex CCW polygon against the half-plane
/// left of the directed line a->b, with tolerance band eps.
inline std::vector<Vec2> clip_half_plane(const std::vector<Vec2>& poly, const Vec2& a,
                                         const Vec2& b, double eps) {
  std::vector<Vec2> out;
  const int n = static_cast<int>(poly.size());
  if (n == 0) return out;
  const Vec2 d = b - a;
  const double len = d.norm();
  auto dist = [&](const Vec2& p) { return cross2(d, p - a) / len; };
  for (int i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    const double dp = dist(p);
    const double dq = dist(q);
    if (dp >= -eps) out.push_back(p);
    if ((dp > eps && dq < -eps) || (dp < -eps && dq > eps)) {
      const double t = dp / (dp - dq);
      out.push_back(p + t * (q - p));
    }
  }
  return out;
}

inline void dedupe_ring(std::vector<Vec2>& poly, double eps) {
  std::vector<Vec2> out;
  for (const Vec2& p : poly) {
    if (out.empty() || (out.back() - p).norm() > eps) out.push_back(p);
  }
  while (out.size() > 1 && (out.front() - out.back()).norm() <= eps) out.pop_back();
  poly.swap(out);
}

/// Intersection of two triangles as a convex CCW polygon (possibly empty).
/// Both inputs must be CCW. eps controls vertex welding.
inline std::vector<Vec2> clip_triangles(const std::array<Vec2, 3>& tA,
                                        const std::array<Vec2, 3>& tB, double eps) {
  std::vector<Vec2> poly(tA.begin(), tA.end());
  for (int e = 0; e < 3 && !poly.empty(); ++e)
    poly = clip_half_plane(poly, tB[e], tB[(e + 1) % 3], eps);
  dedupe_ring(poly, eps);
  return poly;
}

} // namespace mdest
