#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "toothalign/geometry.hpp"

namespace toothalign {

struct Aabb {
  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity()};

  void expand(const Vec3& p);
  void expand(const Aabb& b);
  Aabb dilated(double r) const;
  bool overlaps(const Aabb& b) const;
  /// Squared distance from q to the box (0 inside). Never exceeds the
  /// rounded squared distance to any contained point.
  double distance2(const Vec3& q) const;
};

/// Axis-aligned bounding-box hierarchy over a point cloud. Leaves hold
/// contiguous structure-of-arrays slices scanned by the SIMD kernels.
class PointBvh {
 public:
  explicit PointBvh(std::span<const Vec3> pts, std::size_t leaf_size = 8);

  const Aabb& bounds() const { return nodes_.front().box; }
  std::size_t size() const { return order_.size(); }

  /// Squared distance to the nearest point, or `bound2` if none is closer.
  double nearest_distance2(const Vec3& q,
                           double bound2 = std::numeric_limits<double>::infinity()) const;

  /// True iff some point p satisfies |p - q|^2 < r2.
  bool any_within(const Vec3& q, double r2) const;

 private:
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // leaf: first point; inner: left child
    std::uint32_t count = 0;  // leaf: point count; inner: 0
    std::uint32_t right = 0;
  };

  std::uint32_t build(std::uint32_t first, std::uint32_t count, std::span<const Vec3> pts, std::size_t leaf);

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  PointsSoA soa_;
};

/// Smallest squared distance between any point of `a` and any point of `b`.
double closest_pair_distance2(std::span<const Vec3> a, const PointBvh& b);

}  // namespace toothalign
