#include "toothalign/augment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>

#include "toothalign/errors.hpp"
#include "toothalign/point_bvh.hpp"
#include "toothalign/rng.hpp"

namespace toothalign {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kGapTargetMargin = 0.05;    // closed gaps land this far under the threshold
constexpr double kGapTolerance = 0.02;
constexpr double kArchTargetMargin = 1e-4;  // pulled centroids land this far inside the range
constexpr int kMaxJointRounds = 10;

void translate(Tooth& t, const Vec3& d) {
  for (Vec3& p : t.points) p += d;
}

// Interlocking points of A (inside B's proxy) and of B (inside A's proxy);
// nullopt when there are none.
std::optional<double> penetration_impl(const Tooth& a, const PointBvh& bvh_a, const Tooth& b, const PointBvh& bvh_b) {
  const double r = a.proxy_radius + b.proxy_radius;
  const double r2 = r * r;
  std::vector<Vec3> ia, ib;
  for (const Vec3& p : a.points)
    if (bvh_b.any_within(p, r2)) ia.push_back(p);
  if (ia.empty()) return std::nullopt;
  for (const Vec3& p : b.points)
    if (bvh_a.any_within(p, r2)) ib.push_back(p);

  const Vec3 ca = centroid(a.points);
  const Vec3 cb = centroid(b.points);
  Vec3 u;
  if (squared_norm(cb - ca) > 0.0) {
    u = normalized(cb - ca);
  } else {
    // coincident centroids: use the direction of the farthest interlocking pair
    double best = -1.0;
    for (const Vec3& p : ia) {
      for (const Vec3& q : ib) {
        const double d = squared_norm(q - p);
        if (d > best) {
          best = d;
          u = q - p;
        }
      }
    }
    u = best > 0.0 ? normalized(u) : Vec3{1.0, 0.0, 0.0};
  }
  double max_a = -std::numeric_limits<double>::infinity();
  double min_b = std::numeric_limits<double>::infinity();
  for (const Vec3& p : ia) max_a = std::max(max_a, dot(p, u));
  for (const Vec3& q : ib) min_b = std::min(min_b, dot(q, u));
  return max_a - min_b + r;
}

bool collide_impl(const Tooth& a, const Tooth& b, const PointBvh& bvh_b) {
  const double r = a.proxy_radius + b.proxy_radius;
  const double r2 = r * r;
  for (const Vec3& p : a.points)
    if (bvh_b.any_within(p, r2)) return true;
  return false;
}

bool boxes_close(const PointBvh& a, const PointBvh& b, double r) {
  return a.bounds().dilated(r + 1e-9).overlaps(b.bounds());
}

double gap_between(const Tooth& a, const Tooth& b) {
  const PointBvh bvh(b.points);
  return std::sqrt(closest_pair_distance2(a.points, bvh));
}

// Present teeth walking outward from the midline: left side by descending id,
// right side by ascending id.
void outward_lists(Jaw& jaw, std::vector<Tooth*>& left, std::vector<Tooth*>& right) {
  const int boundary = jaw.side == JawSide::upper ? 8 : 24;
  for (Tooth& t : jaw.teeth) {
    if (!t.present) continue;
    (t.id.value() <= boundary ? left : right).push_back(&t);
  }
  auto by_id = [](const Tooth* a, const Tooth* b) { return a->id < b->id; };
  std::sort(left.begin(), left.end(), [&](const Tooth* a, const Tooth* b) { return by_id(b, a); });
  std::sort(right.begin(), right.end(), by_id);
}

void pull_into_range(Tooth& t, const ArchLine& arch, const AugmentConfig& cfg) {
  const Vec3 c = t.center();
  const ArchProjection pr = arch.project(c);
  const double d = pr.distance;
  double target = d;
  if (d > cfg.arch_dist_max) target = std::max(cfg.arch_dist_min, cfg.arch_dist_max - kArchTargetMargin);
  if (d < cfg.arch_dist_min) target = std::min(cfg.arch_dist_max, cfg.arch_dist_min + kArchTargetMargin);
  if (target == d) return;
  const Vec3 dir = d > 0.0 ? (c - pr.point) / d : arch.outward_normal(pr.s);
  translate(t, pr.point + target * dir - c);
}

// Moves `mover` toward the midline until its gap to `fixed` is back under the
// threshold.
void close_gap(Tooth& mover, const Tooth& fixed, const ArchLine& arch, const AugmentConfig& cfg) {
  const PointBvh fixed_bvh(fixed.points);
  auto gap_of = [&](const Tooth& t) { return std::sqrt(closest_pair_distance2(t.points, fixed_bvh)); };
  const double g0 = gap_of(mover);
  if (g0 <= cfg.gap_threshold) return;

  const double target = std::max(cfg.gap_threshold - kGapTargetMargin, 0.5 * cfg.gap_threshold);
  const Tooth start = mover;
  auto moved_by = [&](double delta) {
    Tooth t = start;
    shift_tooth_along_arch(t, arch, -delta);
    return t;
  };

  double lo = 0.0;
  double hi = g0 - target;
  Tooth best = moved_by(hi);
  double g_hi = gap_of(best);
  for (int i = 0; g_hi > target; ++i) {
    if (i > 20) throw Error(ErrorCode::ConstraintsUnsatisfiable, "cannot close gap next to tooth " +
                                                                      std::to_string(mover.id.value()));
    lo = hi;
    hi *= 2.0;
    best = moved_by(hi);
    g_hi = gap_of(best);
  }
  for (int i = 0; i < 60 && target - g_hi > kGapTolerance; ++i) {
    const double mid = 0.5 * (lo + hi);
    Tooth t = moved_by(mid);
    const double g = gap_of(t);
    if (g > target) {
      lo = mid;
    } else {
      hi = mid;
      best = std::move(t);
      g_hi = g;
    }
  }
  mover = std::move(best);
}

}  // namespace

void AugmentConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
  for (double v : {rot_range, trans_mu, trans_sigma, gap_threshold, arch_dist_min, arch_dist_max, constraint_ratio,
                   ordinary_prob}) {
    if (!std::isfinite(v)) bad("augment parameters must be finite");
  }
  if (rot_range < 0.0 || rot_range > 180.0) bad("rot_range must lie in [0, 180] degrees");
  if (trans_sigma < 0.0) bad("trans_sigma must be nonnegative");
  if (!(gap_threshold > 0.0)) bad("gap_threshold must be positive");
  if (arch_dist_min < 0.0 || arch_dist_max < arch_dist_min) bad("arch_dist_range must satisfy 0 <= min <= max");
  if (constraint_ratio < 0.0 || constraint_ratio > 1.0) bad("constraint_ratio must lie in [0, 1]");
  if (ordinary_prob < 0.0 || ordinary_prob > 1.0) bad("ordinary_prob must lie in [0, 1]");
  if (max_collision_iters < 0) bad("max_collision_iters must be nonnegative");
}

RigidTransform perturb_tooth(const Tooth& tooth, std::uint64_t seed, const AugmentConfig& config) {
  Rng rng = make_rng(seed);
  const Vec3 axis = random_unit_vector(rng);
  const double angle = uniform(rng, -config.rot_range, config.rot_range) * kDeg;
  RigidTransform t;
  t.rotation = quat_from_axis_angle(AxisAngle::make(axis, angle));
  for (std::size_t k = 0; k < 3; ++k) t.translation[k] = config.trans_mu + config.trans_sigma * standard_normal(rng);
  t.pivot = tooth.center();
  return t;
}

bool teeth_collide(const Tooth& a, const Tooth& b) {
  const PointBvh bvh_a(a.points);
  const PointBvh bvh_b(b.points);
  if (!boxes_close(bvh_a, bvh_b, a.proxy_radius + b.proxy_radius)) return false;
  return collide_impl(a, b, bvh_b);
}

CollisionReport detect_collisions(const Jaw& jaw) {
  const auto present = jaw.present();
  std::vector<PointBvh> bvhs;
  bvhs.reserve(present.size());
  for (const Tooth* t : present) bvhs.emplace_back(t->points);

  CollisionReport report;
  for (std::size_t i = 0; i < present.size(); ++i) {
    for (std::size_t j = i + 1; j < present.size(); ++j) {
      const Tooth& a = *present[i];
      const Tooth& b = *present[j];
      if (!boxes_close(bvhs[i], bvhs[j], a.proxy_radius + b.proxy_radius)) continue;
      if (!collide_impl(a, b, bvhs[j])) continue;
      const auto pen = penetration_impl(a, bvhs[i], b, bvhs[j]);
      report.pairs.push_back({a.id, b.id, pen.value_or(0.0)});
    }
  }
  return report;
}

double penetration_distance(const Tooth& a, const Tooth& b) {
  const PointBvh bvh_a(a.points);
  const PointBvh bvh_b(b.points);
  const auto pen = penetration_impl(a, bvh_a, b, bvh_b);
  if (!pen) {
    throw Error(ErrorCode::NoCollision, "teeth " + std::to_string(a.id.value()) + " and " +
                                            std::to_string(b.id.value()) + " do not collide");
  }
  return *pen;
}

std::vector<ToothGap> adjacent_gaps(const Jaw& jaw) {
  const auto present = jaw.present();
  std::vector<ToothGap> out;
  for (std::size_t i = 0; i + 1 < present.size(); ++i) {
    out.push_back({present[i]->id, present[i + 1]->id, gap_between(*present[i], *present[i + 1])});
  }
  return out;
}

void shift_tooth_along_arch(Tooth& tooth, const ArchLine& arch, double delta) {
  if (delta == 0.0) return;
  const Vec3 c = tooth.center();
  translate(tooth, move_along_arch(arch, c, delta) - c);
}

Jaw jaw_regularize(const Jaw& jaw, const ArchLine& arch, const AugmentConfig& config) {
  Jaw out = jaw;
  std::vector<Tooth*> left, right;
  outward_lists(out, left, right);

  for (const auto* side : {&left, &right})
    for (Tooth* t : *side) pull_into_range(*t, arch, config);

  if (!left.empty() && !right.empty()) {
    Tooth* l = left.front();
    Tooth* r = right.front();
    const double dl = distance_from_midline(arch, l->center());
    const double dr = distance_from_midline(arch, r->center());
    if (dl > dr) close_gap(*l, *r, arch, config); else close_gap(*r, *l, arch, config);
  }
  for (const auto* side : {&left, &right}) {
    for (std::size_t i = 1; i < side->size(); ++i) close_gap(*(*side)[i], *(*side)[i - 1], arch, config);
  }
  return out;
}

ResolveResult resolve_collisions(const Jaw& jaw, const ArchLine& arch, const AugmentConfig& config) {
  ResolveResult res{jaw, 0};
  for (;;) {
    const CollisionReport report = detect_collisions(res.jaw);
    if (report.empty()) return res;
    if (res.iterations >= config.max_collision_iters) {
      throw Error(ErrorCode::CollisionUnresolved, std::to_string(report.pairs.size()) +
                                                      " colliding pairs left after " +
                                                      std::to_string(res.iterations) + " rounds");
    }
    std::map<ToothId, double> shift;
    for (const CollisionPair& p : report.pairs) {
      const double da = distance_from_midline(arch, res.jaw.find(p.a)->center());
      const double db = distance_from_midline(arch, res.jaw.find(p.b)->center());
      const ToothId mover = da > db ? p.a : p.b;
      shift[mover] = std::max(shift[mover], p.penetration);
    }
    for (const auto& [id, delta] : shift) shift_tooth_along_arch(*res.jaw.find(id), arch, delta);
    ++res.iterations;
  }
}

ConstraintReport check_constraints(const Jaw& jaw, const ArchLine& arch, const AugmentConfig& config) {
  ConstraintReport r;
  r.collisions = detect_collisions(jaw).pairs.size();
  for (const ToothGap& g : adjacent_gaps(jaw)) {
    r.max_gap = std::max(r.max_gap, g.gap);
    if (g.gap > config.gap_threshold) ++r.gap_violations;
  }
  for (const Tooth* t : jaw.present()) {
    const double d = std::abs(signed_arch_distance(arch, t->center()));
    r.max_arch_distance = std::max(r.max_arch_distance, d);
    if (d < config.arch_dist_min || d > config.arch_dist_max) ++r.arch_violations;
  }
  return r;
}

AugmentResult constrained_augment_case(const Case& gt_case, std::uint64_t seed, const AugmentConfig& config) {
  config.validate();
  const Case gt = gt_case.ground_truth_view();
  AugmentResult res;
  res.c = gt;
  const std::uint64_t case_seed = derive_seed(seed, "constrained_augment", gt_case.id);

  for (JawSide side : {JawSide::upper, JawSide::lower}) {
    const Jaw& gt_jaw = gt.jaw(side);
    Jaw jaw = gt_jaw;
    for (Tooth& t : jaw.teeth) {
      if (!t.present) continue;
      const RigidTransform tr = perturb_tooth(t, derive_seed(case_seed, "tooth", static_cast<std::uint64_t>(t.id.value())), config);
      t.points = apply_transform(tr, t.points);
      res.perturbations.emplace(t.id, tr);
      res.max_rotation_deg = std::max(res.max_rotation_deg, axis_angle_from_quat(tr.rotation).angle / kDeg);
    }

    if (gt_jaw.present().size() >= 2) {
      const ArchLine arch = fit_arch_line(gt_jaw);
      int iterations = 0;
      ConstraintReport report;
      for (int round = 0;; ++round) {
        jaw = jaw_regularize(jaw, arch, config);
        ResolveResult rr = resolve_collisions(jaw, arch, config);
        jaw = std::move(rr.jaw);
        iterations += rr.iterations;
        report = check_constraints(jaw, arch, config);
        if (report.ok()) break;
        if (round + 1 >= kMaxJointRounds) {
          throw Error(ErrorCode::ConstraintsUnsatisfiable, "regularization and collision avoidance did not settle");
        }
      }
      res.iterations = std::max(res.iterations, iterations);
      (side == JawSide::upper ? res.upper : res.lower) = report;
    }

    Jaw& out = res.c.jaw(side);
    for (Tooth& t : out.teeth) {
      if (!t.present) continue;
      const Tooth* src = gt_case.find(t.id);
      t.gt_points = src->gt_points ? *src->gt_points : src->points;
      t.points = jaw.find(t.id)->points;
      t.moved = src->moved || t.points != *t.gt_points;
    }
  }
  return res;
}

OrdinaryResult ordinary_augment(const Case& c, std::uint64_t seed, const AugmentConfig& config) {
  config.validate();
  OrdinaryResult res{c, false};
  Rng rng = make_rng(derive_seed(seed, "ordinary_trigger", c.id));
  res.triggered = uniform01(rng) < config.ordinary_prob;
  if (!res.triggered) return res;
  const std::uint64_t case_seed = derive_seed(seed, "ordinary_augment", c.id);
  for (Jaw* jaw : {&res.c.upper, &res.c.lower}) {
    for (Tooth& t : jaw->teeth) {
      if (!t.present || !t.moved) continue;
      const RigidTransform tr = perturb_tooth(t, derive_seed(case_seed, "tooth", static_cast<std::uint64_t>(t.id.value())), config);
      t.points = apply_transform(tr, t.points);
    }
  }
  return res;
}

}  // namespace toothalign
