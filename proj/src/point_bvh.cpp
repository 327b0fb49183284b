#include "toothalign/point_bvh.hpp"

#include <algorithm>
#include <numeric>

#include "toothalign/errors.hpp"
#include "toothalign/kernels.hpp"

namespace toothalign {

void Aabb::expand(const Vec3& p) {
  lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
  hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
}

void Aabb::expand(const Aabb& b) {
  expand(b.lo);
  expand(b.hi);
}

Aabb Aabb::dilated(double r) const {
  Aabb b = *this;
  b.lo -= Vec3{r, r, r};
  b.hi += Vec3{r, r, r};
  return b;
}

bool Aabb::overlaps(const Aabb& b) const {
  return lo.x <= b.hi.x && b.lo.x <= hi.x && lo.y <= b.hi.y && b.lo.y <= hi.y && lo.z <= b.hi.z &&
         b.lo.z <= hi.z;
}

double Aabb::distance2(const Vec3& q) const {
  // Same operand order as the distance kernels so pruning is exact.
  auto axis = [](double l, double h, double v) {
    if (v < l) return l - v;
    if (v > h) return v - h;
    return 0.0;
  };
  const double dx = axis(lo.x, hi.x, q.x);
  const double dy = axis(lo.y, hi.y, q.y);
  const double dz = axis(lo.z, hi.z, q.z);
  return dx * dx + dy * dy + dz * dz;
}

PointBvh::PointBvh(std::span<const Vec3> pts, std::size_t leaf_size) {
  if (pts.empty()) throw Error(ErrorCode::EmptyCloud, "bvh over an empty cloud");
  order_.resize(pts.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * pts.size() / std::max<std::size_t>(leaf_size, 1) + 2);
  build(0, static_cast<std::uint32_t>(pts.size()), pts, std::max<std::size_t>(leaf_size, 1));

  std::vector<Vec3> reordered;
  reordered.reserve(pts.size());
  for (auto i : order_) reordered.push_back(pts[i]);
  soa_ = PointsSoA(reordered);
}

std::uint32_t PointBvh::build(std::uint32_t first, std::uint32_t count, std::span<const Vec3> pts,
                              std::size_t leaf) {
  const auto idx = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({});
  Aabb box;
  for (std::uint32_t i = first; i < first + count; ++i) box.expand(pts[order_[i]]);
  nodes_[idx].box = box;

  if (count <= leaf) {
    nodes_[idx].first = first;
    nodes_[idx].count = count;
    return idx;
  }

  const Vec3 ext = box.hi - box.lo;
  const int axis = (ext.x >= ext.y && ext.x >= ext.z) ? 0 : (ext.y >= ext.z ? 1 : 2);
  const std::uint32_t half = count / 2;
  auto begin = order_.begin() + first;
  std::nth_element(begin, begin + half, begin + count, [&](std::uint32_t a, std::uint32_t b) {
    const double va = pts[a][axis];
    const double vb = pts[b][axis];
    return va < vb || (va == vb && a < b);
  });

  const std::uint32_t left = build(first, half, pts, leaf);
  const std::uint32_t right = build(first + half, count - half, pts, leaf);
  nodes_[idx].first = left;
  nodes_[idx].count = 0;
  nodes_[idx].right = right;
  return idx;
}

double PointBvh::nearest_distance2(const Vec3& q, double bound2) const {
  const auto& k = kernels::active();
  double best = bound2;
  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    if (n.box.distance2(q) >= best) continue;
    if (n.count > 0) {
      const double d = k.min_dist2_3d(q.x, q.y, q.z, soa_.xs.data() + n.first, soa_.ys.data() + n.first,
                                      soa_.zs.data() + n.first, n.count);
      best = std::min(best, d);
      continue;
    }
    // visit the nearer child first
    const double dl = nodes_[n.first].box.distance2(q);
    const double dr = nodes_[n.right].box.distance2(q);
    if (dl <= dr) {
      stack[top++] = n.right;
      stack[top++] = n.first;
    } else {
      stack[top++] = n.first;
      stack[top++] = n.right;
    }
  }
  return best;
}

bool PointBvh::any_within(const Vec3& q, double r2) const { return nearest_distance2(q, r2) < r2; }

double closest_pair_distance2(std::span<const Vec3> a, const PointBvh& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : a) best = b.nearest_distance2(p, best);
  return best;
}

}  // namespace toothalign
