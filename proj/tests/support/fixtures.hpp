#pragma once

#include <cstdint>
#include <vector>

#include "toothalign/case_model.hpp"
#include "toothalign/geometry.hpp"
#include "toothalign/rng.hpp"

namespace fixture {

using namespace toothalign;

inline std::vector<Vec3> random_cloud(Rng& rng, std::size_t n, double scale = 1.0, Vec3 offset = {}) {
  std::vector<Vec3> out(n);
  for (Vec3& p : out) p = offset + Vec3{uniform(rng, -scale, scale), uniform(rng, -scale, scale), uniform(rng, -scale, scale)};
  return out;
}

inline RigidTransform random_transform(Rng& rng, double max_angle, double max_t, Vec3 pivot = {}) {
  RigidTransform t;
  t.rotation = quat_from_axis_angle(AxisAngle::make(random_unit_vector(rng), uniform(rng, 0.0, max_angle)));
  t.translation = {uniform(rng, -max_t, max_t), uniform(rng, -max_t, max_t), uniform(rng, -max_t, max_t)};
  t.pivot = pivot;
  return t;
}

inline Tooth make_tooth(int id, std::vector<Vec3> pts, double proxy = kDefaultProxyRadius) {
  Tooth t;
  t.id = ToothId(id);
  t.present = true;
  t.moved = true;
  t.points = std::move(pts);
  t.proxy_radius = proxy;
  return t;
}

/// 512-point ball of radius r around c.
inline std::vector<Vec3> ball(Rng& rng, const Vec3& c, double r, std::size_t n = kPointsPerTooth) {
  std::vector<Vec3> out;
  out.reserve(n);
  while (out.size() < n) {
    const Vec3 p{uniform(rng, -r, r), uniform(rng, -r, r), uniform(rng, -r, r)};
    if (squared_norm(p) <= r * r) out.push_back(c + p);
  }
  return out;
}

inline SyntheticCase synth(std::uint64_t seed, int teeth = 14) {
  SynthParams p;
  p.teeth_per_jaw = teeth;
  return generate_synthetic_case(p, seed);
}

}  // namespace fixture
