#include "frc/delaunay.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace frc;

namespace {

// Box [0, s]^2 with corners, edge points every `step` and random interior
// points kept `step` away from the edges (so every hull edge is Gabriel).
std::vector<IPoint> boxed_points(std::int64_t s, std::int64_t step, int interior, unsigned seed) {
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  std::vector<IPoint> out;
  auto add = [&](std::int64_t x, std::int64_t y) {
    if (seen.insert({x, y}).second) out.push_back({x, y});
  };
  for (std::int64_t v = 0; v <= s; v += step) {
    add(v, 0);
    add(v, s);
    add(0, v);
    add(s, v);
  }
  add(s, s);
  std::mt19937 rng(seed);
  std::uniform_int_distribution<std::int64_t> u(step, s - step);
  for (int i = 0; i < interior; ++i) add(u(rng), u(rng));
  return out;
}

__int128 total_area(const std::vector<IPoint>& p, const std::vector<std::array<int, 3>>& t) {
  __int128 a = 0;
  for (const auto& tri : t) a += orient2d(p[tri[0]], p[tri[1]], p[tri[2]]);
  return a;
}

}  // namespace

TEST(Predicates, SignsAndExactness) {
  EXPECT_GT(orient2d({0, 0}, {1, 0}, {0, 1}), 0);
  EXPECT_LT(orient2d({0, 0}, {0, 1}, {1, 0}), 0);
  EXPECT_EQ(orient2d({0, 0}, {1 << 25, 1}, {1 << 24, 0}), -(1 << 24));
  const std::int64_t big = (std::int64_t{1} << 26) - 1;
  EXPECT_EQ(orient2d({-big, -big}, {big, big}, {0, 0}), 0);
  EXPECT_GT(incircle({0, 0}, {2, 0}, {0, 2}, {1, 1}), 0);
  EXPECT_EQ(incircle({0, 0}, {2, 0}, {0, 2}, {2, 2}), 0);
  EXPECT_LT(incircle({0, 0}, {2, 0}, {0, 2}, {3, 3}), 0);
  EXPECT_EQ(incircle({-big, -big}, {big, -big}, {big, big}, {-big, big}), 0);
}

TEST(Delaunay, EmptyCircumcirclesAndCoverage) {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const std::int64_t s = 1 << 20;
    const auto p = boxed_points(s, s / 16, 300, seed);
    const auto t = delaunay(p);
    for (const auto& tri : t) {
      ASSERT_GT(orient2d(p[tri[0]], p[tri[1]], p[tri[2]]), 0);
      for (std::size_t k = 0; k < p.size(); ++k) {
        ASSERT_LE(incircle(p[tri[0]], p[tri[1]], p[tri[2]], p[k]), 0) << "seed " << seed;
      }
    }
    EXPECT_EQ(total_area(p, t), static_cast<__int128>(2) * s * s);
    // Euler: T = 2n - h - 2 with every edge point on the hull
    const int hull = 4 * 16;
    EXPECT_EQ(static_cast<int>(t.size()), 2 * static_cast<int>(p.size()) - hull - 2);
  }
}

TEST(Delaunay, CocircularGrid) {
  std::vector<IPoint> p;
  for (int j = 0; j < 20; ++j)
    for (int i = 0; i < 20; ++i) p.push_back({i * 1000, j * 1000});
  const auto t = delaunay(p);
  EXPECT_EQ(t.size(), 2u * 19 * 19);
  EXPECT_EQ(total_area(p, t), static_cast<__int128>(2) * 19000 * 19000);
}

TEST(Delaunay, RejectsDuplicatesAndRange) {
  EXPECT_THROW(delaunay({{0, 0}, {5, 0}, {0, 5}, {5, 0}}), std::invalid_argument);
  EXPECT_THROW(delaunay({{0, 0}, {kDelaunayRange, 0}, {0, 5}}), std::invalid_argument);
}
