#pragma once

// Discrete disks D_r = {z in Z^2 : |z| <= r}, their outer boundaries
// dD_r = {z not in D_r : some 4-neighbour of z is in D_r}, and a dense
// occupancy grid used for cover detection.
//
// All membership tests are integer comparisons against floor(r^2).

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <vector>

namespace covlab {

struct LatticePoint {
  std::int64_t x = 0;
  std::int64_t y = 0;

  constexpr std::int64_t norm2() const { return x * x + y * y; }
  constexpr auto operator<=>(const LatticePoint&) const = default;
};

inline constexpr LatticePoint kSteps[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

/// A disk radius together with the integer floor(r^2) that all membership
/// tests use.
struct Radius {
  double value = 0.0;
  std::int64_t limit = 0;  // floor(value^2)

  /// Exact constructor from an integer squared radius.
  static Radius from_squared(std::int64_t r2) {
    if (r2 < 0) throw std::invalid_argument("squared radius must be >= 0");
    return Radius{std::sqrt(static_cast<double>(r2)), r2};
  }

  /// From a real radius. r^2 is formed in long double; a value within 1e-9
  /// (relative) below an integer is treated as that integer, so radii such as
  /// sqrt(5) passed as doubles classify the way they were meant to.
  static Radius from_real(double r) {
    if (!(r >= 0.0) || !std::isfinite(r))
      throw std::invalid_argument("radius must be finite and >= 0");
    const long double r2 = static_cast<long double>(r) * r;
    long double fl = std::floor(r2);
    const long double up = fl + 1.0L;
    if (up - r2 < 1e-9L * std::max<long double>(1.0L, r2)) fl = up;
    return Radius{r, static_cast<std::int64_t>(fl)};
  }
};

inline Radius radius(double r) { return Radius::from_real(r); }

constexpr bool in_disk(const LatticePoint& p, std::int64_t limit) {
  return p.norm2() <= limit;
}

/// Smallest squared norm among the four neighbours of p.
constexpr std::int64_t min_neighbour_norm2(const LatticePoint& p) {
  const std::int64_t ax = p.x < 0 ? -p.x : p.x;
  const std::int64_t ay = p.y < 0 ? -p.y : p.y;
  return p.norm2() - 2 * std::max(ax, ay) + 1;
}

constexpr bool on_boundary(const LatticePoint& p, std::int64_t limit) {
  return p.norm2() > limit && min_neighbour_norm2(p) <= limit;
}

inline bool in_disk(const LatticePoint& p, const Radius& r) {
  return in_disk(p, r.limit);
}
inline bool on_boundary(const LatticePoint& p, const Radius& r) {
  return on_boundary(p, r.limit);
}

/// floor(sqrt(n)) for n >= 0, exact.
inline std::int64_t isqrt(std::int64_t n) {
  auto s = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
  while (s * s > n) --s;
  while ((s + 1) * (s + 1) <= n) ++s;
  return s;
}

/// Points of D_r ordered by (norm^2, x, y).
inline std::vector<LatticePoint> disk_points(const Radius& r) {
  const std::int64_t w = isqrt(r.limit);
  std::vector<LatticePoint> pts;
  for (std::int64_t y = -w; y <= w; ++y)
    for (std::int64_t x = -w; x <= w; ++x)
      if (x * x + y * y <= r.limit) pts.push_back({x, y});
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    if (a.norm2() != b.norm2()) return a.norm2() < b.norm2();
    return a < b;
  });
  return pts;
}

inline std::vector<LatticePoint> disk_points(double r) {
  return disk_points(Radius::from_real(r));
}

/// Points of dD_r ordered by (norm^2, x, y).
inline std::vector<LatticePoint> boundary_points(const Radius& r) {
  const std::int64_t w = isqrt(r.limit) + 1;
  std::vector<LatticePoint> pts;
  for (std::int64_t y = -w; y <= w; ++y)
    for (std::int64_t x = -w; x <= w; ++x)
      if (on_boundary(LatticePoint{x, y}, r.limit)) pts.push_back({x, y});
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    if (a.norm2() != b.norm2()) return a.norm2() < b.norm2();
    return a < b;
  });
  return pts;
}

inline std::vector<LatticePoint> boundary_points(double r) {
  return boundary_points(Radius::from_real(r));
}

/// Element k (0..7) of the dihedral group of the square acting on Z^2:
/// k mod 4 quarter turns, followed by the reflection x <-> y when k >= 4.
constexpr LatticePoint apply_symmetry(int k, LatticePoint p) {
  for (int i = 0; i < (k & 3); ++i) p = {-p.y, p.x};
  if (k >= 4) p = {p.y, p.x};
  return p;
}

/// Dense index of a point set inside the square [-w, w]^2.
class PointIndex {
 public:
  PointIndex() = default;
  explicit PointIndex(std::vector<LatticePoint> pts) : points_(std::move(pts)) {
    std::int64_t w = 0;
    for (const auto& p : points_) w = std::max({w, std::abs(p.x), std::abs(p.y)});
    half_ = w;
    side_ = 2 * w + 1;
    slot_.assign(static_cast<std::size_t>(side_ * side_), -1);
    for (std::size_t i = 0; i < points_.size(); ++i)
      slot_[offset(points_[i])] = static_cast<std::int32_t>(i);
  }

  std::size_t size() const { return points_.size(); }
  const std::vector<LatticePoint>& points() const { return points_; }
  const LatticePoint& operator[](std::size_t i) const { return points_[i]; }

  /// Index of p, or -1 if p is not in the set.
  std::int32_t find(const LatticePoint& p) const {
    if (std::abs(p.x) > half_ || std::abs(p.y) > half_) return -1;
    return slot_[offset(p)];
  }

 private:
  std::size_t offset(const LatticePoint& p) const {
    return static_cast<std::size_t>((p.y + half_) * side_ + (p.x + half_));
  }

  std::vector<LatticePoint> points_;
  std::vector<std::int32_t> slot_;
  std::int64_t half_ = 0;
  std::int64_t side_ = 1;
};

/// Occupancy record over D_extent. Flags are 1 for disk points not yet
/// visited and 0 otherwise (visited, or outside the disk).
class VisitedGrid {
 public:
  explicit VisitedGrid(const Radius& extent)
      : extent_(extent), half_(isqrt(extent.limit)), side_(2 * half_ + 1) {
    const auto pts = disk_points(extent);
    by_norm_.reserve(pts.size());
    norm2_.reserve(pts.size());
    for (const auto& p : pts) {
      by_norm_.push_back(static_cast<std::uint32_t>(offset(p.x, p.y)));
      norm2_.push_back(p.norm2());
    }
    reset();
  }
  explicit VisitedGrid(double extent) : VisitedGrid(Radius::from_real(extent)) {}

  void reset() {
    flags_.assign(static_cast<std::size_t>(side_ * side_), 0);
    for (auto off : by_norm_) flags_[off] = 1;
    uncovered_ = static_cast<std::int64_t>(by_norm_.size());
    cursor_ = 0;
  }

  /// Marks (x, y) visited. Returns true if it was an unvisited disk point.
  bool mark(std::int64_t x, std::int64_t y) {
    if (x < -half_ || x > half_ || y < -half_ || y > half_) return false;
    auto& f = flags_[offset(x, y)];
    if (f == 0) return false;
    f = 0;
    --uncovered_;
    return true;
  }
  bool mark(const LatticePoint& p) { return mark(p.x, p.y); }

  bool visited(const LatticePoint& p) const {
    if (!in_disk(p, extent_.limit)) return false;
    return flags_[offset(p.x, p.y)] == 0;
  }

  std::int64_t uncovered() const { return uncovered_; }
  bool covered() const { return uncovered_ == 0; }
  std::int64_t size() const { return static_cast<std::int64_t>(by_norm_.size()); }
  const Radius& extent() const { return extent_; }

  /// Squared norm of the nearest unvisited disk point, or -1 if none.
  std::int64_t nearest_unvisited_norm2() const {
    while (cursor_ < by_norm_.size() && flags_[by_norm_[cursor_]] == 0) ++cursor_;
    return cursor_ < by_norm_.size() ? norm2_[cursor_] : -1;
  }

 private:
  std::size_t offset(std::int64_t x, std::int64_t y) const {
    return static_cast<std::size_t>((y + half_) * side_ + (x + half_));
  }

  Radius extent_;
  std::int64_t half_;
  std::int64_t side_;
  std::vector<std::uint8_t> flags_;
  std::vector<std::uint32_t> by_norm_;
  std::vector<std::int64_t> norm2_;
  std::int64_t uncovered_ = 0;
  // Marking only ever clears flags, so the scan position never moves back.
  mutable std::size_t cursor_ = 0;
};

struct CoverRadius {
  double value = 0.0;
  bool saturated = false;  // every tracked point is visited; value = extent
};

/// sup{r : D_r subset of visited}: the norm of the nearest unvisited point.
inline CoverRadius cover_radius(const VisitedGrid& grid) {
  const std::int64_t n2 = grid.nearest_unvisited_norm2();
  if (n2 < 0) return {grid.extent().value, true};
  return {std::sqrt(static_cast<double>(n2)), false};
}

}  // namespace covlab
