#include <catch2/catch_amalgamated.hpp>

#include <mdest/selftest.hpp>
#include <mdest/transfer.hpp>

#include <algorithm>
#include <random>

using namespace mdest;

namespace {

SimplicialGrid seg(std::vector<double> params) {
  return make_segment_grid(Vec2(0, 0), Vec2(1, 0), params);
}

SimplicialGrid square_one_diagonal(bool flip) {
  SimplicialGrid g;
  g.dim = 2;
  g.nodes = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  if (flip)
    g.cells = {{0, 1, 3}, {1, 2, 3}}; // diagonal (1,0)-(0,1)
  else
    g.cells = {{0, 1, 2}, {0, 2, 3}}; // diagonal (0,0)-(1,1)
  g.finalize();
  return g;
}

} // namespace

TEST_CASE("1D transfer of a simple non-matching pair") {
  auto a = seg({0.0, 0.5, 1.0});
  auto b = seg({0.0, 0.4, 1.0});
  auto tg = build_transfer(a, b);

  REQUIRE(tg.dim == 1);
  REQUIRE(tg.num_cells() == 3);
  REQUIRE(tg.total_measure() == Catch::Approx(1.0));

  // Union breakpoints {0, 0.4, 0.5, 1} with parents (src,dst).
  std::vector<std::pair<double, double>> spans;
  for (const auto& c : tg.cells)
    spans.emplace_back(std::min(c.verts[0].x(), c.verts[1].x()),
                       std::max(c.verts[0].x(), c.verts[1].x()));
  std::sort(spans.begin(), spans.end());
  REQUIRE(spans[0].second == Catch::Approx(0.4));
  REQUIRE(spans[1].second == Catch::Approx(0.5));
  REQUIRE(spans[2].first == Catch::Approx(0.5));

  for (const auto& c : tg.cells) {
    const double mid = 0.5 * (c.verts[0].x() + c.verts[1].x());
    REQUIRE(c.src == (mid < 0.5 ? 0 : 1));
    REQUIRE(c.dst == (mid < 0.4 ? 0 : 1));
  }
}

TEST_CASE("identical grids give the identity transfer") {
  auto a = seg({0.0, 0.3, 0.7, 1.0});
  auto tg = build_transfer(a, a);
  REQUIRE(tg.num_cells() == a.num_cells());
  for (const auto& c : tg.cells) REQUIRE(c.src == c.dst);
  REQUIRE(tg.total_measure() == Catch::Approx(grid_measure(a)));
}

TEST_CASE("coverage mismatch is rejected") {
  auto a = seg({0.0, 0.5, 1.0});
  auto b = make_segment_grid(Vec2(0, 0), Vec2(0.9, 0), {0.0, 0.5, 1.0});
  REQUIRE_THROWS_AS(build_transfer(a, b), CoverageMismatchError);

  auto p = make_point_grid(Vec2(0, 0));
  auto q = make_point_grid(Vec2(0.5, 0));
  REQUIRE_THROWS_AS(build_transfer(p, q), CoverageMismatchError);
}

TEST_CASE("0D transfer is a single coincident cell") {
  auto p = make_point_grid(Vec2(0.25, 0.5));
  auto q = make_point_grid(Vec2(0.25, 0.5));
  auto tg = build_transfer(p, q);
  REQUIRE(tg.num_cells() == 1);
  REQUIRE(tg.cells[0].src == 0);
  REQUIRE(tg.cells[0].dst == 0);
  REQUIRE(tg.total_measure() == Catch::Approx(1.0));
}

TEST_CASE("2D transfer of opposite-diagonal triangulations") {
  auto a = square_one_diagonal(false);
  auto b = square_one_diagonal(true);
  auto tg = build_transfer(a, b);

  REQUIRE(tg.num_cells() == 4); // each src half meets each dst half in a quarter
  REQUIRE(tg.total_measure() == Catch::Approx(1.0).epsilon(1e-12));
  for (const auto& c : tg.cells) REQUIRE(c.measure == Catch::Approx(0.25).epsilon(1e-12));

  // Each transfer cell's barycenter lies strictly inside both parents.
  for (const auto& c : tg.cells) {
    Vec2 bc(0, 0);
    for (int k = 0; k < c.nverts; ++k) bc += c.verts[k];
    bc /= double(c.nverts);
    const auto& sc = a.cells[c.src];
    REQUIRE(point_in_triangle(bc, a.nodes[sc[0]], a.nodes[sc[1]], a.nodes[sc[2]], -1e-9));
    const auto& dc = b.cells[c.dst];
    REQUIRE(point_in_triangle(bc, b.nodes[dc[0]], b.nodes[dc[1]], b.nodes[dc[2]], -1e-9));
  }
}

TEST_CASE("2D transfer of identical triangulations is the identity") {
  auto a = square_one_diagonal(false);
  auto tg = build_transfer(a, a);
  REQUIRE(tg.num_cells() == a.num_cells());
  for (const auto& c : tg.cells) REQUIRE(c.src == c.dst);
}

TEST_CASE("locate_parents with tie-breaking") {
  auto a = seg({0.0, 0.5, 1.0});
  auto b = seg({0.0, 0.4, 1.0});
  auto tg = build_transfer(a, b);

  auto [s1, d1] = locate_parents(tg, Vec2(0.45, 0));
  REQUIRE(s1 == 0);
  REQUIRE(d1 == 1);

  // A shared breakpoint resolves to the lowest transfer cell index.
  auto [s2, d2] = locate_parents(tg, Vec2(0.4, 0));
  REQUIRE(s2 == 0);
  REQUIRE(d2 == 0);

  REQUIRE_THROWS_AS(locate_parents(tg, Vec2(1.5, 0)), OutOfDomainError);
}

TEST_CASE("transfer refines both parents") {
  std::mt19937_64 rng(0x7f01);
  for (int trial = 0; trial < 40; ++trial) {
    auto [a, b] = detail::random_segment_pair(rng);
    auto tg = build_transfer(a, b);
    REQUIRE(tg.num_cells() >= std::max(a.num_cells(), b.num_cells()));
    REQUIRE(tg.total_measure() ==
            Catch::Approx(grid_measure(a)).epsilon(1e-12));

    // Every parent node appears among the transfer nodes.
    REQUIRE(detail::nodes_included(tg, a, 1e-9));
    REQUIRE(detail::nodes_included(tg, b, 1e-9));

    // Per-parent partition: child measures sum to the parent cell measure.
    std::vector<double> src_sum(a.num_cells(), 0.0), dst_sum(b.num_cells(), 0.0);
    for (const auto& c : tg.cells) {
      src_sum[c.src] += c.measure;
      dst_sum[c.dst] += c.measure;
    }
    for (int c = 0; c < a.num_cells(); ++c)
      REQUIRE(src_sum[c] == Catch::Approx(cell_measure(a, c)).epsilon(1e-10));
    for (int c = 0; c < b.num_cells(); ++c)
      REQUIRE(dst_sum[c] == Catch::Approx(cell_measure(b, c)).epsilon(1e-10));
  }
}

TEST_CASE("2D transfer partitions random polygon pairs") {
  std::mt19937_64 rng(0x7f02);
  for (int trial = 0; trial < 15; ++trial) {
    const detail::PolygonPair pp = detail::random_polygon_pair(rng);
    const SimplicialGrid& a = pp.a;
    const SimplicialGrid& b = pp.b;
    auto tg = build_transfer(a, b);
    REQUIRE(tg.total_measure() ==
            Catch::Approx(grid_measure(a)).epsilon(1e-9));
    std::vector<double> src_sum(a.num_cells(), 0.0);
    for (const auto& c : tg.cells) src_sum[c.src] += c.measure;
    for (int c = 0; c < a.num_cells(); ++c)
      REQUIRE(src_sum[c] == Catch::Approx(cell_measure(a, c)).epsilon(1e-9));

    // Spot-check membership through locate_parents at transfer barycenters.
    for (int k = 0; k < std::min(10, tg.num_cells()); ++k) {
      const auto& c = tg.cells[k];
      Vec2 bc(0, 0);
      for (int v = 0; v < c.nverts; ++v) bc += c.verts[v];
      bc /= double(c.nverts);
      auto [s, d] = locate_parents(tg, bc);
      REQUIRE(s == c.src);
      REQUIRE(d == c.dst);
    }
  }
}
