#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "covlab/lattice.hpp"

using namespace covlab;

namespace {

using PointSet = std::set<std::pair<std::int64_t, std::int64_t>>;

PointSet as_set(const std::vector<LatticePoint>& v) {
  PointSet s;
  for (const auto& p : v) s.insert({p.x, p.y});
  return s;
}

// Brute-force oracles over a box, using only integer arithmetic on r^2.
PointSet brute_disk(std::int64_t r2) {
  PointSet s;
  for (std::int64_t x = -100; x <= 100; ++x)
    for (std::int64_t y = -100; y <= 100; ++y)
      if (x * x + y * y <= r2) s.insert({x, y});
  return s;
}

PointSet brute_boundary(std::int64_t r2) {
  PointSet s;
  for (std::int64_t x = -101; x <= 101; ++x)
    for (std::int64_t y = -101; y <= 101; ++y) {
      if (x * x + y * y <= r2) continue;
      for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
        const auto nx = x + dx, ny = y + dy;
        if (nx * nx + ny * ny <= r2) { s.insert({x, y}); break; }
      }
    }
  return s;
}

}  // namespace

TEST(DiskPoints, SmallCases) {
  EXPECT_EQ(disk_points(0.0).size(), 1u);
  EXPECT_EQ(as_set(disk_points(1.0)), (PointSet{{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}}));
  EXPECT_EQ(disk_points(2.0).size(), 13u);
  EXPECT_EQ(disk_points(8.0).size(), 197u);
  EXPECT_THROW(disk_points(-1.0), std::invalid_argument);
}

TEST(DiskPoints, MatchBruteForce) {
  for (std::int64_t r2 = 0; r2 <= 2500; r2 += 37)
    ASSERT_EQ(as_set(disk_points(Radius::from_squared(r2))), brute_disk(r2)) << "r^2 = " << r2;
}

TEST(BoundaryPoints, SmallCases) {
  EXPECT_EQ(as_set(boundary_points(0.0)), (PointSet{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}));
  EXPECT_EQ(as_set(boundary_points(1.0)),
            (PointSet{{2, 0}, {-2, 0}, {0, 2}, {0, -2}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}));
}

TEST(BoundaryPoints, MatchBruteForceAndAreDisjoint) {
  for (std::int64_t r2 = 0; r2 <= 2500; r2 += 41) {
    const auto b = as_set(boundary_points(Radius::from_squared(r2)));
    ASSERT_EQ(b, brute_boundary(r2)) << "r^2 = " << r2;
    for (const auto& p : as_set(disk_points(Radius::from_squared(r2)))) ASSERT_FALSE(b.count(p));
  }
}

TEST(BoundaryPoints, DihedralInvariance) {
  for (double r : {2.0, 3.7, 10.0, 17.3}) {
    for (const auto& pts : {disk_points(r), boundary_points(r)}) {
      const auto s = as_set(pts);
      for (int g = 0; g < 8; ++g)
        for (const auto& p : pts) {
          const auto q = apply_symmetry(g, p);
          ASSERT_TRUE(s.count({q.x, q.y}));
        }
    }
  }
}

TEST(DiskPoints, DensityWithinFivePercent) {
  for (double r : {50.0, 80.0, 120.0}) {
    const double ratio = static_cast<double>(disk_points(r).size()) / (std::numbers::pi * r * r);
    EXPECT_NEAR(ratio, 1.0, 0.05) << r;
  }
}

TEST(DiskPoints, MonotoneInRadius) {
  std::size_t prev = 0;
  for (double r = 0.0; r < 30.0; r += 0.25) {
    const auto n = disk_points(r).size();
    ASSERT_GE(n, prev);
    prev = n;
  }
}

TEST(Radius, ExactSquaresAreNotMisclassified) {
  // 5^2 = 3^2 + 4^2 lies on the circle of radius 5.
  EXPECT_TRUE(in_disk(LatticePoint{3, 4}, Radius::from_real(5.0).limit));
  EXPECT_FALSE(in_disk(LatticePoint{3, 4}, Radius::from_real(4.999999).limit));
  EXPECT_TRUE(in_disk(LatticePoint{1, 1}, Radius::from_real(std::sqrt(2.0)).limit));
  EXPECT_TRUE(in_disk(LatticePoint{1, 2}, Radius::from_real(std::sqrt(5.0)).limit));
}

TEST(CoverRadius, Examples) {
  VisitedGrid g(5.0);
  EXPECT_DOUBLE_EQ(cover_radius(g).value, 0.0);
  g.mark(LatticePoint{0, 0});
  EXPECT_DOUBLE_EQ(cover_radius(g).value, 1.0);
  for (const auto& p : disk_points(2.0)) g.mark(p);
  EXPECT_DOUBLE_EQ(cover_radius(g).value, std::sqrt(5.0));
  for (const auto& p : disk_points(5.0)) g.mark(p);
  EXPECT_TRUE(cover_radius(g).saturated);
}

TEST(VisitedGrid, CountAndIdempotence) {
  VisitedGrid g(7.5);
  const auto pts = disk_points(7.5);
  EXPECT_EQ(g.uncovered(), static_cast<std::int64_t>(pts.size()));
  EXPECT_TRUE(g.mark(pts[3]));
  EXPECT_FALSE(g.mark(pts[3]));
  EXPECT_FALSE(g.mark(LatticePoint{100, 0}));
  EXPECT_EQ(g.uncovered(), static_cast<std::int64_t>(pts.size()) - 1);
  std::int64_t unvisited = 0;
  for (const auto& p : pts) unvisited += !g.visited(p);
  EXPECT_EQ(unvisited, g.uncovered());
}

TEST(CoverRadius, MonotoneUnderMarking) {
  VisitedGrid g(12.0);
  auto pts = disk_points(12.0);
  // Deterministic scrambled order.
  for (std::size_t i = 0; i < pts.size(); ++i) std::swap(pts[i], pts[(i * 7919) % pts.size()]);
  double prev = 0.0;
  for (const auto& p : pts) {
    g.mark(p);
    const double c = cover_radius(g).value;
    ASSERT_GE(c, prev);
    prev = c;
  }
}
