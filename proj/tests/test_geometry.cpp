#include <catch2/catch_amalgamated.hpp>

#include <mdest/geometry.hpp>
#include <mdest/quadrature.hpp>

#include <cmath>
#include <random>

using namespace mdest;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Exact monomial integral x^a y^b over the unit reference triangle.
double ref_tri_monomial(int a, int b) {
  return factorial(a) * factorial(b) / factorial(a + b + 2);
}

} // namespace

TEST_CASE("cross product and areas") {
  REQUIRE(cross2(Vec2(1, 0), Vec2(0, 1)) == 1.0);
  REQUIRE(cross2(Vec2(0, 1), Vec2(1, 0)) == -1.0);

  Vec2 a(0, 0), b(1, 0), c(0, 1);
  REQUIRE(signed_area(a, b, c) == Catch::Approx(0.5));
  REQUIRE(signed_area(a, c, b) == Catch::Approx(-0.5));
  REQUIRE(triangle_area(a, c, b) == Catch::Approx(0.5));
}

TEST_CASE("rot_cw turns CCW edges into outward normals") {
  // CCW unit square, bottom edge (0,0)->(1,0): outward normal points down.
  Vec2 n = rot_cw(Vec2(1, 0));
  REQUIRE(n.x() == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(n.y() == Catch::Approx(-1.0));
}

TEST_CASE("segment parametrization and distance") {
  Vec2 a(1, 1), b(3, 1);
  REQUIRE(line_param(Vec2(2, 1), a, b) == Catch::Approx(0.5));
  REQUIRE(line_param(a, a, b) == Catch::Approx(0.0));
  REQUIRE(point_segment_distance(Vec2(2, 2), a, b) == Catch::Approx(1.0));
  // Beyond the endpoint the distance is to the endpoint, not the line.
  REQUIRE(point_segment_distance(Vec2(4, 1), a, b) == Catch::Approx(1.0));

  REQUIRE(point_on_segment(Vec2(2, 1), a, b, 1e-12));
  REQUIRE_FALSE(point_on_segment(Vec2(2, 1.01), a, b, 1e-12));
}

TEST_CASE("segments_coincide is orientation insensitive") {
  Vec2 a(0, 0), b(1, 0);
  REQUIRE(segments_coincide(a, b, b, a, 1e-12));
  REQUIRE(segments_coincide(a, b, a, b, 1e-12));
  REQUIRE_FALSE(segments_coincide(a, b, a, Vec2(1, 0.1), 1e-12));
  REQUIRE_FALSE(segments_coincide(a, b, a, Vec2(0.9, 0), 1e-12));
}

TEST_CASE("point_in_triangle with boundary tolerance") {
  Vec2 a(0, 0), b(1, 0), c(0, 1);
  REQUIRE(point_in_triangle(Vec2(0.2, 0.2), a, b, c, 1e-12));
  REQUIRE(point_in_triangle(Vec2(0.5, 0.5), a, b, c, 1e-9)); // on hypotenuse
  REQUIRE_FALSE(point_in_triangle(Vec2(0.6, 0.6), a, b, c, 1e-9));
}

TEST_CASE("aabb overlap") {
  Vec2 pts1[] = {Vec2(0, 0), Vec2(1, 1)};
  Vec2 pts2[] = {Vec2(2, 0), Vec2(3, 1)};
  Aabb a = aabb_of(std::begin(pts1), std::end(pts1));
  Aabb b = aabb_of(std::begin(pts2), std::end(pts2));
  REQUIRE_FALSE(a.overlaps(b, 0.0));
  REQUIRE(a.overlaps(b, 1.5));
  Vec2 pts3[] = {Vec2(0.5, 0.5), Vec2(2.5, 0.5)};
  REQUIRE(a.overlaps(aabb_of(std::begin(pts3), std::end(pts3)), 0.0));
}

TEST_CASE("polygon area and centroid of the unit square") {
  std::vector<Vec2> sq = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  REQUIRE(polygon_area(sq) == Catch::Approx(1.0));
  Vec2 c = polygon_centroid(sq);
  REQUIRE(c.x() == Catch::Approx(0.5));
  REQUIRE(c.y() == Catch::Approx(0.5));

  std::reverse(sq.begin(), sq.end());
  REQUIRE(polygon_area(sq) == Catch::Approx(-1.0)); // signed
}

TEST_CASE("half plane clipping keeps the left side") {
  std::vector<Vec2> sq = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  // Keep x <= 0.5: clip against the upward line through (0.5, 0).
  auto clipped = clip_half_plane(sq, Vec2(0.5, 0), Vec2(0.5, 1), 1e-12);
  REQUIRE(polygon_area(clipped) == Catch::Approx(0.5));
  for (const auto& p : clipped) REQUIRE(p.x() <= 0.5 + 1e-12);
}

TEST_CASE("triangle clipping: crossed diagonals") {
  // Overlap of the two halves of the unit square cut by opposite diagonals.
  std::array<Vec2, 3> ta = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1)};
  std::array<Vec2, 3> tb = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  auto poly = clip_triangles(ta, tb, 1e-12);
  REQUIRE(poly.size() == 3);
  REQUIRE(polygon_area(poly) == Catch::Approx(0.25));
  // The overlap is the triangle (0,0), (1,0), (0.5,0.5).
  bool found_apex = false;
  for (const auto& p : poly)
    if ((p - Vec2(0.5, 0.5)).norm() < 1e-12) found_apex = true;
  REQUIRE(found_apex);
}

TEST_CASE("triangle clipping: identical and disjoint") {
  std::array<Vec2, 3> t = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  auto same = clip_triangles(t, t, 1e-12);
  REQUIRE(polygon_area(same) == Catch::Approx(0.5));

  std::array<Vec2, 3> far = {Vec2(5, 5), Vec2(6, 5), Vec2(5, 6)};
  auto empty = clip_triangles(t, far, 1e-12);
  REQUIRE(polygon_area(empty) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("dedupe_ring removes repeated corners") {
  std::vector<Vec2> ring = {Vec2(0, 0), Vec2(0, 0), Vec2(1, 0),
                            Vec2(1, 1), Vec2(1, 1), Vec2(0, 0)};
  dedupe_ring(ring, 1e-12);
  REQUIRE(ring.size() == 3);
  REQUIRE(ring[0] == Vec2(0, 0));
  REQUIRE(ring[2] == Vec2(1, 1));
}

TEST_CASE("quadrature weights sum to the reference measure") {
  for (int deg : {1, 2, 3, 4, 5}) {
    auto r1 = quadrature_rule(1, deg);
    double s1 = 0;
    for (double w : r1.weights) s1 += w;
    REQUIRE(s1 == Catch::Approx(1.0));

    auto r2 = quadrature_rule(2, deg);
    double s2 = 0;
    for (double w : r2.weights) s2 += w;
    REQUIRE(s2 == Catch::Approx(0.5));
  }
  auto r0 = quadrature_rule(0, 1);
  REQUIRE(r0.points.size() == 1);
  REQUIRE(r0.weights[0] == 1.0);
}

TEST_CASE("quadrature is exact for monomials up to the declared degree") {
  for (int deg : {1, 2, 3, 4, 5}) {
    auto r1 = quadrature_rule(1, deg);
    for (int k = 0; k <= r1.degree; ++k) {
      double got = 0;
      for (std::size_t q = 0; q < r1.size(); ++q)
        got += r1.weights[q] * std::pow(r1.points[q].x(), k);
      REQUIRE(got == Catch::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }

    auto r2 = quadrature_rule(2, deg);
    for (int a = 0; a <= r2.degree; ++a)
      for (int b = 0; a + b <= r2.degree; ++b) {
        double got = 0;
        for (std::size_t q = 0; q < r2.size(); ++q)
          got += r2.weights[q] * std::pow(r2.points[q].x(), a) *
                 std::pow(r2.points[q].y(), b);
        REQUIRE(got == Catch::Approx(ref_tri_monomial(a, b)).epsilon(1e-12));
      }
  }
}

TEST_CASE("for_each_qp integrates over physical simplices") {
  // Triangle (0,0), (2,0), (0,2): area 2, centroid (2/3, 2/3).
  std::array<Vec2, 3> tri = {Vec2(0, 0), Vec2(2, 0), Vec2(0, 2)};
  auto rule = quadrature_rule(2, 2);
  double area = 0, ix = 0;
  for_each_qp(std::span<const Vec2>(tri.data(), 3), rule,
              [&](const Vec2& x, double w) {
                area += w;
                ix += w * x.x();
              });
  REQUIRE(area == Catch::Approx(2.0));
  REQUIRE(ix == Catch::Approx(2.0 * 2.0 / 3.0));

  // Segment (1,1)-(3,1): length 2, first moment of x is 4.
  std::array<Vec2, 2> seg = {Vec2(1, 1), Vec2(3, 1)};
  auto r1 = quadrature_rule(1, 3);
  double len = 0, sx = 0;
  for_each_qp(std::span<const Vec2>(seg.data(), 2), r1,
              [&](const Vec2& x, double w) {
                len += w;
                sx += w * x.x();
              });
  REQUIRE(len == Catch::Approx(2.0));
  REQUIRE(sx == Catch::Approx(4.0));

  // A point counts its value with weight 1.
  std::array<Vec2, 1> pt = {Vec2(0.25, 0.5)};
  double v = 0;
  for_each_qp(std::span<const Vec2>(pt.data(), 1), quadrature_rule(0, 1),
              [&](const Vec2& x, double w) { v += w * x.x(); });
  REQUIRE(v == Catch::Approx(0.25));
}

TEST_CASE("clipping is symmetric in its arguments") {
  std::mt19937_64 rng(0x9e0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::array<Vec2, 3> ta, tb;
    auto fill = [&](std::array<Vec2, 3>& t) {
      do {
        for (auto& p : t) p = Vec2(u(rng), u(rng));
      } while (std::abs(signed_area(t[0], t[1], t[2])) < 0.02);
      if (signed_area(t[0], t[1], t[2]) < 0) std::swap(t[1], t[2]);
    };
    fill(ta);
    fill(tb);
    double ab = std::abs(polygon_area(clip_triangles(ta, tb, 1e-12)));
    double ba = std::abs(polygon_area(clip_triangles(tb, ta, 1e-12)));
    REQUIRE(ab == Catch::Approx(ba).margin(1e-12));
    double bound = std::min(std::abs(signed_area(ta[0], ta[1], ta[2])),
                            std::abs(signed_area(tb[0], tb[1], tb[2])));
    REQUIRE(ab <= bound + 1e-12);
  }
}
