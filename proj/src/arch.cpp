#include "toothalign/arch.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "toothalign/errors.hpp"
#include "toothalign/point_bvh.hpp"
#include "toothalign/rng.hpp"

namespace toothalign {

namespace {

// 5-point Gauss-Legendre on [-1, 1]
constexpr std::array<double, 5> kGlNodes{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                         0.9061798459386640};
constexpr std::array<double, 5> kGlWeights{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                           0.4786286704993665, 0.2369268850561891};

constexpr Vec3 kUp{0.0, 0.0, 1.0};

}  // namespace

ArchLine ArchLine::from_knots(std::vector<Vec3> knots, std::optional<double> midline_s, double extension) {
  if (knots.size() < 2) throw Error(ErrorCode::TooFewTeeth, "an arch line needs at least two knots");
  if (!(extension >= 0.0)) throw Error(ErrorCode::InvalidArgument, "arch extension must be nonnegative");
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    if (knots[k] == knots[k + 1]) throw Error(ErrorCode::InvalidArgument, "coincident consecutive arch knots");
  }

  ArchLine a;
  a.knots_ = std::move(knots);
  a.extension_ = extension;
  const std::size_t m = a.knots_.size();
  a.tangents_.resize(m);
  a.tangents_[0] = a.knots_[1] - a.knots_[0];
  a.tangents_[m - 1] = a.knots_[m - 1] - a.knots_[m - 2];
  for (std::size_t k = 1; k + 1 < m; ++k) a.tangents_[k] = 0.5 * (a.knots_[k + 1] - a.knots_[k - 1]);

  a.table_.assign(1, 0.0);
  a.cumulative_.assign(1, 0.0);
  for (std::size_t seg = 0; seg + 1 < m; ++seg) {
    for (std::size_t j = 0; j < kSubIntervals; ++j) {
      const double t0 = static_cast<double>(j) / kSubIntervals;
      const double t1 = static_cast<double>(j + 1) / kSubIntervals;
      double sum = 0.0;
      for (std::size_t g = 0; g < 5; ++g) sum += kGlWeights[g] * a.speed(seg, 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * kGlNodes[g]);
      const double len = 0.5 * (t1 - t0) * sum;
      if (!(len > 0.0)) throw Error(ErrorCode::InvalidArgument, "arch line has a stationary point");
      a.table_.push_back(a.table_.back() + len);
    }
    a.cumulative_.push_back(a.table_.back());
  }

  // Labial orientation: the knot polygon's winding tells which side of the
  // tangent the arch interior lies on.
  double area = 0.0;
  Aabb box;
  for (std::size_t k = 0; k < m; ++k) {
    const Vec3& p = a.knots_[k];
    const Vec3& q = a.knots_[(k + 1) % m];
    area += p.x * q.y - q.x * p.y;
    box.expand(p);
  }
  const double diag2 = squared_norm(box.hi - box.lo);
  a.orientation_ = area > 1e-9 * diag2 ? -1.0 : 1.0;

  a.midline_ = midline_s.value_or(0.5 * a.length());
  return a;
}

void ArchLine::hermite(std::size_t seg, double t, Vec3* pos, Vec3* d1, Vec3* d2) const {
  const Vec3& c0 = knots_[seg];
  const Vec3& c1 = knots_[seg + 1];
  const Vec3& m0 = tangents_[seg];
  const Vec3& m1 = tangents_[seg + 1];
  const double t2 = t * t;
  const double t3 = t2 * t;
  if (pos != nullptr) {
    *pos = (2.0 * t3 - 3.0 * t2 + 1.0) * c0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * c1 +
           (t3 - t2) * m1;
  }
  if (d1 != nullptr) {
    *d1 = (6.0 * t2 - 6.0 * t) * c0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * c1 +
          (3.0 * t2 - 2.0 * t) * m1;
  }
  if (d2 != nullptr) {
    *d2 = (12.0 * t - 6.0) * c0 + (6.0 * t - 4.0) * m0 + (-12.0 * t + 6.0) * c1 + (6.0 * t - 2.0) * m1;
  }
}

double ArchLine::speed(std::size_t seg, double t) const {
  Vec3 d;
  hermite(seg, t, nullptr, &d, nullptr);
  return norm(d);
}

std::size_t ArchLine::segment_of(double u, double* t) const {
  const double umax = static_cast<double>(segments());
  u = std::clamp(u, 0.0, umax);
  auto seg = static_cast<std::size_t>(std::floor(u));
  if (seg >= segments()) seg = segments() - 1;
  *t = u - static_cast<double>(seg);
  return seg;
}

Vec3 ArchLine::evaluate(double u) const {
  double t = 0.0;
  const std::size_t seg = segment_of(u, &t);
  Vec3 p;
  hermite(seg, t, &p, nullptr, nullptr);
  return p;
}

Vec3 ArchLine::derivative(double u) const {
  double t = 0.0;
  const std::size_t seg = segment_of(u, &t);
  Vec3 d;
  hermite(seg, t, nullptr, &d, nullptr);
  return d;
}

double ArchLine::segment_arclength(std::size_t seg, double t) const {
  const double scaled = t * kSubIntervals;
  auto j = static_cast<std::size_t>(std::floor(scaled));
  if (j >= kSubIntervals) j = kSubIntervals - 1;
  const double t0 = static_cast<double>(j) / kSubIntervals;
  double sum = 0.0;
  if (t > t0) {
    for (std::size_t g = 0; g < 5; ++g) sum += kGlWeights[g] * speed(seg, 0.5 * (t0 + t) + 0.5 * (t - t0) * kGlNodes[g]);
    sum *= 0.5 * (t - t0);
  }
  return table_[seg * kSubIntervals + j] + sum;
}

double ArchLine::arclength_at(double u) const {
  double t = 0.0;
  const std::size_t seg = segment_of(u, &t);
  return segment_arclength(seg, t);
}

double ArchLine::param_at_arclength(double s) const {
  s = std::clamp(s, 0.0, length());
  auto it = std::upper_bound(table_.begin(), table_.end(), s);
  std::size_t i = static_cast<std::size_t>(it - table_.begin());
  i = std::clamp<std::size_t>(i, 1, table_.size() - 1) - 1;  // sub-interval index
  const std::size_t seg = i / kSubIntervals;
  const std::size_t j = i % kSubIntervals;
  double lo = static_cast<double>(j) / kSubIntervals;
  double hi = static_cast<double>(j + 1) / kSubIntervals;
  double t = lo + (hi - lo) * (s - table_[i]) / (table_[i + 1] - table_[i]);
  for (int it_n = 0; it_n < 60; ++it_n) {
    const double f = segment_arclength(seg, t) - s;
    if (std::abs(f) <= 1e-13 * std::max(1.0, length())) break;
    if (f > 0.0) hi = t; else lo = t;
    double next = t - f / speed(seg, t);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == t) break;
    t = next;
  }
  return static_cast<double>(seg) + t;
}

Vec3 ArchLine::point_at_arclength(double s) const {
  const double L = length();
  if (s < -extension_ - 1e-9 || s > L + extension_ + 1e-9) {
    throw Error(ErrorCode::ArchOverrun, "arc length " + std::to_string(s) + " outside [" +
                                            std::to_string(-extension_) + ", " + std::to_string(L + extension_) + "]");
  }
  if (s < 0.0) return knots_.front() + s * normalized(derivative(0.0));
  if (s > L) return knots_.back() + (s - L) * normalized(derivative(static_cast<double>(segments())));
  return evaluate(param_at_arclength(s));
}

Vec3 ArchLine::tangent_at_arclength(double s) const {
  const double L = length();
  if (s < -extension_ - 1e-9 || s > L + extension_ + 1e-9) {
    throw Error(ErrorCode::ArchOverrun, "arc length " + std::to_string(s) + " outside the arch domain");
  }
  if (s <= 0.0) return normalized(derivative(0.0));
  if (s >= L) return normalized(derivative(static_cast<double>(segments())));
  return normalized(derivative(param_at_arclength(s)));
}

Vec3 ArchLine::outward_normal(double s) const {
  return orientation_ * normalized(cross(kUp, tangent_at_arclength(s)));
}

void ArchLine::refine(std::size_t seg, const Vec3& p, double& t, double& d2) const {
  for (int it = 0; it < 50; ++it) {
    Vec3 c, d1, dd;
    hermite(seg, t, &c, &d1, &dd);
    const Vec3 r = c - p;
    const double f = dot(r, d1);
    double fp = dot(d1, d1) + dot(r, dd);
    if (!(fp > 0.0)) fp = dot(d1, d1);
    if (!(fp > 0.0)) break;
    double step = f / fp;
    bool improved = false;
    for (int h = 0; h < 30; ++h) {
      const double tn = std::clamp(t - step, 0.0, 1.0);
      Vec3 cn;
      hermite(seg, tn, &cn, nullptr, nullptr);
      const double dn = squared_norm(cn - p);
      if (dn <= d2) {
        const bool moved = tn != t;
        t = tn;
        d2 = dn;
        improved = moved;
        break;
      }
      step *= 0.5;
    }
    if (!improved || std::abs(step) < 1e-14) break;
  }
}

ArchProjection ArchLine::project(const Vec3& p) const {
  ArchProjection best;
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best_seg = 0;
  double best_t = 0.0;

  // visit segments by distance to their control polygon box; the Hermite
  // segment lies in the convex hull of its Bezier control points
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(segments());
  for (std::size_t seg = 0; seg < segments(); ++seg) {
    Aabb box;
    box.expand(knots_[seg]);
    box.expand(knots_[seg] + tangents_[seg] / 3.0);
    box.expand(knots_[seg + 1] - tangents_[seg + 1] / 3.0);
    box.expand(knots_[seg + 1]);
    order.emplace_back(box.distance2(p), seg);
  }
  std::sort(order.begin(), order.end());

  for (const auto& [box_d2, seg] : order) {
    if (box_d2 > best_d2) break;
    double t = 0.0;
    double d2 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j <= kProjectionSamples; ++j) {
      const double tj = static_cast<double>(j) / kProjectionSamples;
      Vec3 c;
      hermite(seg, tj, &c, nullptr, nullptr);
      const double dj = squared_norm(c - p);
      if (dj < d2) {
        d2 = dj;
        t = tj;
      }
    }
    refine(seg, p, t, d2);
    if (d2 < best_d2) {
      best_d2 = d2;
      best_seg = seg;
      best_t = t;
    }
  }

  Vec3 foot, d1;
  hermite(best_seg, best_t, &foot, &d1, nullptr);
  best.point = foot;
  best.tangent = normalized(d1);
  best.s = segment_arclength(best_seg, best_t);

  // straight extensions
  const Vec3 u0 = normalized(derivative(0.0));
  const Vec3 u1 = normalized(derivative(static_cast<double>(segments())));
  const double l0 = std::clamp(dot(p - knots_.front(), -u0), 0.0, extension_);
  const double l1 = std::clamp(dot(p - knots_.back(), u1), 0.0, extension_);
  const Vec3 e0 = knots_.front() - l0 * u0;
  const Vec3 e1 = knots_.back() + l1 * u1;
  if (l0 > 0.0 && squared_norm(e0 - p) < best_d2) {
    best_d2 = squared_norm(e0 - p);
    best.point = e0;
    best.tangent = u0;
    best.s = -l0;
  }
  if (l1 > 0.0 && squared_norm(e1 - p) < best_d2) {
    best_d2 = squared_norm(e1 - p);
    best.point = e1;
    best.tangent = u1;
    best.s = length() + l1;
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

ArchLine fit_arch_line(const Jaw& jaw) {
  const auto present = jaw.present();
  if (present.size() < 2) {
    throw Error(ErrorCode::TooFewTeeth, "arch fitting needs two present teeth, got " + std::to_string(present.size()));
  }
  std::vector<Vec3> knots;
  knots.reserve(present.size());
  for (const Tooth* t : present) knots.push_back(t->center());

  // a throwaway fit gives knot arc lengths for the midline
  ArchLine a = ArchLine::from_knots(knots);
  const int boundary = jaw.side == JawSide::upper ? 8 : 24;
  std::optional<std::size_t> last_left;
  for (std::size_t i = 0; i < present.size(); ++i)
    if (present[i]->id.value() <= boundary) last_left = i;
  double mid = 0.0;
  if (!last_left) {
    mid = 0.0;
  } else if (*last_left + 1 == present.size()) {
    mid = a.length();
  } else {
    mid = 0.5 * (a.knot_arclength(*last_left) + a.knot_arclength(*last_left + 1));
  }
  return ArchLine::from_knots(std::move(knots), mid);
}

double signed_arch_distance(const ArchLine& arch, const Vec3& p, bool labial_positive) {
  const ArchProjection pr = arch.project(p);
  if (pr.distance == 0.0) return 0.0;
  const double side = dot(arch.outward_normal(pr.s), p - pr.point);
  const double sign = (side >= 0.0) == labial_positive ? 1.0 : -1.0;
  return sign * pr.distance;
}

double distance_from_midline(const ArchLine& arch, const Vec3& p) {
  return std::abs(arch.project(p).s - arch.midline());
}

namespace {

double away_direction(const ArchLine& arch, double s) {
  const double m = arch.midline();
  if (s > m) return 1.0;
  if (s < m) return -1.0;
  return m >= arch.length() ? -1.0 : 1.0;
}

}  // namespace

Vec3 move_along_arch(const ArchLine& arch, const Vec3& p, double delta) {
  if (delta == 0.0) return p;
  const ArchProjection pr = arch.project(p);
  const double s1 = pr.s + away_direction(arch, pr.s) * delta;

  const Vec3 t0 = pr.tangent;
  const Vec3 n0 = normalized(cross(kUp, t0));
  const Vec3 b0 = cross(t0, n0);
  const Vec3 off = p - pr.point;
  const double a = dot(off, t0);
  const double b = dot(off, n0);
  const double c = dot(off, b0);

  const Vec3 q1 = arch.point_at_arclength(s1);
  const Vec3 t1 = arch.tangent_at_arclength(s1);
  const Vec3 n1 = normalized(cross(kUp, t1));
  const Vec3 b1 = cross(t1, n1);
  return q1 + a * t1 + b * n1 + c * b1;
}

std::vector<Vec3> arch_polyline(const ArchLine& arch, std::size_t n) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "polyline needs at least two samples");
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = arch.length() * static_cast<double>(i) / static_cast<double>(n - 1);
    out.push_back(arch.point_at_arclength(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Orderings

namespace {

std::vector<std::size_t> sort_by_key(const std::vector<double>& key) {
  std::vector<std::size_t> idx(key.size());
  std::iota(idx.begin(), idx.end(), 0u);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  return idx;
}

}  // namespace

std::vector<std::size_t> serialize_points(std::span<const Vec3> pts, const ArchLine& arch, bool labial_positive) {
  std::vector<double> key(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) key[i] = signed_arch_distance(arch, pts[i], labial_positive);
  return sort_by_key(key);
}

std::vector<std::size_t> order_local_z(std::span<const Vec3> pts) {
  std::vector<double> key(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) key[i] = -pts[i].z;
  return sort_by_key(key);
}

std::vector<std::size_t> order_center_distance(std::span<const Vec3> pts, const Vec3& mouth_center) {
  std::vector<double> key(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) key[i] = squared_norm(pts[i] - mouth_center);
  return sort_by_key(key);
}

std::vector<std::size_t> order_random(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng = make_rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace toothalign
