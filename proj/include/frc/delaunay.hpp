#pragma once

// 2D Delaunay triangulation on integer coordinates with exact predicates.
// Coordinates must satisfy |x|, |y| < 2^26 so that the in-circle determinant
// fits in 128-bit arithmetic.

#include <array>
#include <cstdint>
#include <vector>

namespace frc {

struct IPoint {
  std::int64_t x = 0;
  std::int64_t y = 0;
  bool operator==(const IPoint&) const = default;
};

inline constexpr std::int64_t kDelaunayRange = std::int64_t{1} << 26;

/// Twice the signed area of (a, b, c); positive for counter-clockwise.
__int128 orient2d(const IPoint& a, const IPoint& b, const IPoint& c);
/// Positive when d lies strictly inside the circumcircle of ccw (a, b, c).
__int128 incircle(const IPoint& a, const IPoint& b, const IPoint& c, const IPoint& d);

/// Counter-clockwise triangles over the input indices. Points must be
/// distinct. An enclosing triangle is used during insertion and discarded, so
/// a hull edge is guaranteed only when its diametral circle holds no other
/// point (always the case for the mesher's recovered boundary segments).
std::vector<std::array<int, 3>> delaunay(const std::vector<IPoint>& pts);

}  // namespace frc
