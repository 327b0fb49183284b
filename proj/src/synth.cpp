#include <cmath>
#include <numbers>

#include "toothalign/case_model.hpp"
#include "toothalign/errors.hpp"
#include "toothalign/point_bvh.hpp"
#include "toothalign/rng.hpp"

namespace toothalign {

namespace {

constexpr double kLowerArchScale = 0.92;
constexpr double kOcclusalClearance = 0.1;  // crown tip to the occlusal plane, mm

// y = depth - alpha x^2, walked by arc length from the apex (x = 0)
struct Parabola {
  double alpha;
  double depth;

  double arclength(double x) const {
    const double k = 2.0 * alpha * x;
    return 0.5 * (x * std::sqrt(1.0 + k * k) + std::asinh(k) / (2.0 * alpha));
  }

  double x_at(double s) const {
    double x = s;
    for (int i = 0; i < 100; ++i) {
      const double k = 2.0 * alpha * x;
      const double dx = (arclength(x) - s) / std::sqrt(1.0 + k * k);
      x -= dx;
      if (std::abs(dx) < 1e-13) break;
    }
    return x;
  }
};

struct Crown {
  int id = 0;
  double a = 0.0, b = 0.0, c = 0.0;  // semi-axes: mesio-distal, labio-lingual, occlusal
  std::vector<Vec3> local;
  double s = 0.0;
  std::vector<Vec3> world;
};

std::vector<Vec3> place(const Parabola& arch, const Crown& cr, double s, double z0) {
  const double x = arch.x_at(s);
  const Vec3 base{x, arch.depth - arch.alpha * x * x, z0};
  const Vec3 t = normalized(Vec3{1.0, -2.0 * arch.alpha * x, 0.0});
  const Vec3 n = normalized(Vec3{2.0 * arch.alpha * x, 1.0, 0.0});
  const Vec3 up{0.0, 0.0, 1.0};
  std::vector<Vec3> out;
  out.reserve(cr.local.size());
  for (const Vec3& l : cr.local) out.push_back(base + l.x * t + l.y * n + l.z * up);
  return out;
}

double crown_z(JawSide side, const Crown& cr) {
  return side == JawSide::upper ? cr.c + kOcclusalClearance : -(cr.c + kOcclusalClearance);
}

// Moves `cr` away from `prev` along the arch (direction dir) until the
// nearest point-pair distance reaches `gap`.
void place_next(const Parabola& arch, JawSide side, const Crown& prev, Crown& cr, double dir, double gap) {
  const PointBvh prev_bvh(prev.world);
  const double z0 = crown_z(side, cr);
  auto gap_at = [&](double lambda) {
    return std::sqrt(closest_pair_distance2(place(arch, cr, prev.s + dir * lambda, z0), prev_bvh));
  };
  double lo = 0.0;
  double hi = prev.a + cr.a + gap + 2.0;
  for (int i = 0; gap_at(hi) < gap; ++i) {
    if (i > 20) throw Error(ErrorCode::InfeasibleParams, "cannot separate crowns along the arch");
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    if (gap_at(mid) < gap) lo = mid; else hi = mid;
  }
  cr.s = prev.s + dir * hi;
  cr.world = place(arch, cr, cr.s, z0);
}

void check_params(const SynthParams& p) {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::InfeasibleParams, m); };
  if (p.teeth_per_jaw < 8 || p.teeth_per_jaw > 16) bad("teeth_per_jaw must be within 8..16");
  if (!(p.arch_width > 0.0) || !(p.arch_depth > 0.0)) bad("arch width and depth must be positive");
  if (!(p.crown_width_min > 0.0) || p.crown_width_max < p.crown_width_min) bad("invalid crown width range");
  if (!(p.gap_min > 2.0 * p.proxy_radius)) bad("gap_min must exceed twice the proxy radius or crowns collide");
  if (p.gap_max < p.gap_min) bad("invalid gap range");
  if (p.gap_max > kDefaultGapThreshold - 1e-6) bad("gap_max must stay below the gap threshold");
  if (p.misalign_rotation_deg < 0.0 || p.misalign_rotation_deg > 180.0) bad("rotation magnitude outside [0, 180]");
  if (p.misalign_translation_std < 0.0) bad("negative translation std");
  if (p.static_fraction < 0.0 || p.static_fraction > 1.0) bad("static_fraction outside [0, 1]");
  if (p.dense_points < kPointsPerTooth) bad("dense_points must be at least the tooth point count");
  if (!(p.proxy_radius > 0.0)) bad("proxy_radius must be positive");
}

// Present ids walking outward from the midline on each side.
void side_ids(JawSide side, int n, std::vector<int>& plus, std::vector<int>& minus) {
  const int n_plus = (n + 1) / 2;
  const int n_minus = n / 2;
  const int plus_central = side == JawSide::upper ? 8 : 25;
  const int minus_central = side == JawSide::upper ? 9 : 24;
  const int plus_step = side == JawSide::upper ? -1 : 1;
  for (int i = 0; i < n_plus; ++i) plus.push_back(plus_central + plus_step * i);
  for (int i = 0; i < n_minus; ++i) minus.push_back(minus_central - plus_step * i);
}

Jaw build_jaw(const SynthParams& p, JawSide side, Rng& rng) {
  const double scale = side == JawSide::upper ? 1.0 : kLowerArchScale;
  const double width = p.arch_width * scale;
  const double depth = p.arch_depth * scale;
  const Parabola arch{4.0 * depth / (width * width), depth};

  std::vector<int> plus, minus;
  side_ids(side, p.teeth_per_jaw, plus, minus);
  std::map<int, Crown> crowns;
  for (int id : plus) crowns[id].id = id;
  for (int id : minus) crowns[id].id = id;

  for (auto& [id, cr] : crowns) {  // ascending id
    cr.a = 0.5 * uniform(rng, p.crown_width_min, p.crown_width_max);
    cr.b = cr.a * uniform(rng, 1.05, 1.3);
    cr.c = uniform(rng, 3.4, 4.4);
    std::vector<Vec3> dense;
    dense.reserve(p.dense_points);
    for (std::size_t i = 0; i < p.dense_points; ++i) {
      const Vec3 u = random_unit_vector(rng);
      dense.push_back({cr.a * u.x, cr.b * u.y, cr.c * u.z});
    }
    for (std::size_t idx : fps_sample(dense, kPointsPerTooth, farthest_from_centroid(dense))) {
      cr.local.push_back(dense[idx]);
    }
  }

  // centrals first, then outward on each side
  Crown& c_plus = crowns[plus.front()];
  const double g0 = uniform(rng, p.gap_min, p.gap_max);
  c_plus.s = c_plus.a + 0.5 * g0;
  c_plus.world = place(arch, c_plus, c_plus.s, crown_z(side, c_plus));
  place_next(arch, side, c_plus, crowns[minus.front()], -1.0, g0);
  for (std::size_t i = 1; i < plus.size(); ++i) {
    place_next(arch, side, crowns[plus[i - 1]], crowns[plus[i]], 1.0, uniform(rng, p.gap_min, p.gap_max));
  }
  for (std::size_t i = 1; i < minus.size(); ++i) {
    place_next(arch, side, crowns[minus[i - 1]], crowns[minus[i]], -1.0, uniform(rng, p.gap_min, p.gap_max));
  }

  Jaw jaw;
  jaw.side = side;
  const int first = side == JawSide::upper ? 1 : 17;
  for (int id = first; id < first + 16; ++id) {
    Tooth t;
    t.id = ToothId(id);
    t.proxy_radius = p.proxy_radius;
    auto it = crowns.find(id);
    if (it == crowns.end()) {
      t.present = false;
      t.moved = false;
    } else {
      t.points = std::move(it->second.world);
    }
    jaw.teeth.push_back(std::move(t));
  }
  return jaw;
}

// Non-colliding, gaps within threshold.
void verify_ground_truth(const Jaw& jaw) {
  const auto present = jaw.present();
  for (std::size_t i = 0; i < present.size(); ++i) {
    const PointBvh bvh(present[i]->points);
    for (std::size_t j = i + 1; j < present.size(); ++j) {
      const double r = present[i]->proxy_radius + present[j]->proxy_radius;
      const double d2 = closest_pair_distance2(present[j]->points, bvh);
      if (d2 < r * r) {
        throw Error(ErrorCode::InfeasibleParams, "crowns " + std::to_string(present[i]->id.value()) + " and " +
                                                     std::to_string(present[j]->id.value()) + " overlap");
      }
      if (j == i + 1 && std::sqrt(d2) > kDefaultGapThreshold) {
        throw Error(ErrorCode::InfeasibleParams, "gap above threshold next to tooth " +
                                                     std::to_string(present[i]->id.value()));
      }
    }
  }
}

}  // namespace

SyntheticCase generate_synthetic_case(const SynthParams& params, std::uint64_t seed) {
  check_params(params);
  Rng rng = make_rng(derive_seed(seed, "synth"));

  SyntheticCase out;
  out.c.id = "synth-" + std::to_string(seed);
  out.c.upper = build_jaw(params, JawSide::upper, rng);
  out.c.lower = build_jaw(params, JawSide::lower, rng);
  verify_ground_truth(out.c.upper);
  verify_ground_truth(out.c.lower);

  const double max_angle = params.misalign_rotation_deg * std::numbers::pi / 180.0;
  for (Jaw* jaw : {&out.c.upper, &out.c.lower}) {
    for (Tooth& t : jaw->teeth) {
      if (!t.present) continue;
      const bool is_static = uniform01(rng) < params.static_fraction;
      const Vec3 axis = random_unit_vector(rng);
      const double angle = uniform(rng, -max_angle, max_angle);
      const Vec3 trans{params.misalign_translation_std * standard_normal(rng),
                       params.misalign_translation_std * standard_normal(rng),
                       params.misalign_translation_std * standard_normal(rng)};
      t.gt_points = t.points;
      t.moved = !is_static;
      if (is_static) {
        RigidTransform id;
        id.pivot = t.center();
        out.pre_to_gt.emplace(t.id, id);
        continue;
      }
      RigidTransform gt_to_pre;
      gt_to_pre.rotation = quat_from_axis_angle(AxisAngle::make(axis, angle));
      gt_to_pre.translation = trans;
      gt_to_pre.pivot = centroid(*t.gt_points);
      t.points = apply_transform(gt_to_pre, *t.gt_points);
      out.pre_to_gt.emplace(t.id, gt_to_pre.inverse());
    }
  }
  validate_case(out.c);
  return out;
}

}  // namespace toothalign
