#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "toothalign/arch.hpp"
#include "toothalign/augment.hpp"
#include "toothalign/errors.hpp"

using namespace toothalign;

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

std::vector<std::pair<int, int>> pairs_of(const CollisionReport& r) {
  std::vector<std::pair<int, int>> out;
  for (const CollisionPair& p : r.pairs) out.emplace_back(p.a.value(), p.b.value());
  return out;
}

}  // namespace

TEST(AugmentConfig, Validation) {
  AugmentConfig c;
  EXPECT_NO_THROW(c.validate());
  c.rot_range = -1;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.arch_dist_max = -0.5;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.ordinary_prob = 1.5;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Perturb, AngleBoundedAndDeterministic) {
  const Tooth t = *fixture::synth(1).c.upper.present()[0];
  AugmentConfig cfg;
  for (std::uint64_t s = 0; s < 500; ++s) {
    const RigidTransform a = perturb_tooth(t, s, cfg);
    EXPECT_LE(axis_angle_from_quat(a.rotation).angle, cfg.rot_range * kDegToRad + 1e-12);
    EXPECT_EQ(a.pivot, t.center());
    const RigidTransform b = perturb_tooth(t, s, cfg);
    EXPECT_EQ(a.rotation, b.rotation);
    EXPECT_EQ(a.translation, b.translation);
  }
}

TEST(Collision, SingleSphereProxies) {
  Tooth a = fixture::make_tooth(3, {{0, 0, 0}});
  Tooth b = fixture::make_tooth(4, {{0.49, 0, 0}});
  EXPECT_TRUE(teeth_collide(a, b));
  b.points[0].x = 0.5;  // exactly r_a + r_b: not a collision
  EXPECT_FALSE(teeth_collide(a, b));
  b.points[0].x = 0.4;
  EXPECT_NEAR(penetration_distance(a, b), 0.1, 1e-12);
  b.points[0].x = 2.0;
  try {
    penetration_distance(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoCollision);
  }
}

TEST(Collision, BvhMatchesBruteForce) {
  Rng rng = make_rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    Jaw jaw;
    for (int id = 1; id <= 8; ++id) {
      const Vec3 c{uniform(rng, 0, 12), uniform(rng, 0, 4), uniform(rng, -1, 1)};
      jaw.teeth.push_back(fixture::make_tooth(id, fixture::ball(rng, c, uniform(rng, 0.8, 2.0), 64)));
    }
    EXPECT_EQ(pairs_of(detect_collisions(jaw)), oracle::collisions(jaw));
  }
}

TEST(Collision, ShiftingByPenetrationSeparatesAlongTheAxis) {
  Rng rng = make_rng(42);
  const auto cloud = fixture::ball(rng, {0, 0, 0}, 1.0, 128);
  Tooth a = fixture::make_tooth(3, cloud);
  Tooth b = fixture::make_tooth(4, apply_transform({{}, {1.5, 0, 0}, {}}, cloud));
  const double pen = penetration_distance(a, b);
  EXPECT_GT(pen, 0.0);
  for (Vec3& p : b.points) p.x += pen + 1e-9;
  EXPECT_FALSE(teeth_collide(a, b));
}

TEST(Regularize, ClosesGapsAndPullsIntoRange) {
  const Case gt = fixture::synth(17).c.ground_truth_view();
  const ArchLine arch = fit_arch_line(gt.upper);
  Jaw jaw = gt.upper;
  AugmentConfig cfg;
  // push a posterior tooth away from its neighbour and off the arch
  Tooth& t = *jaw.find(ToothId(3));
  shift_tooth_along_arch(t, arch, 2.0);
  for (Vec3& p : t.points) p.y -= 3.0;
  const Jaw out = jaw_regularize(jaw, arch, cfg);
  for (const ToothGap& g : adjacent_gaps(out)) EXPECT_LE(g.gap, cfg.gap_threshold + 1e-9);
  for (const Tooth* x : out.present()) EXPECT_LE(std::abs(signed_arch_distance(arch, x->center())), 2.2 + 1e-9);
}

TEST(Resolve, RemovesCollisions) {
  const Case gt = fixture::synth(18).c.ground_truth_view();
  const ArchLine arch = fit_arch_line(gt.lower);
  Jaw jaw = gt.lower;
  shift_tooth_along_arch(*jaw.find(ToothId(20)), arch, -2.5);  // into its mesial neighbour
  ASSERT_FALSE(detect_collisions(jaw).empty());
  const ResolveResult r = resolve_collisions(jaw, arch, AugmentConfig{});
  EXPECT_TRUE(detect_collisions(r.jaw).empty());
  EXPECT_GE(r.iterations, 1);
  AugmentConfig none;
  none.max_collision_iters = 0;
  EXPECT_THROW(resolve_collisions(jaw, arch, none), Error);
}

TEST(ConstrainedAugment, SatisfiesConstraintsAndKeepsTruth) {
  const Case pair = fixture::synth(19).c;
  AugmentConfig cfg;
  const AugmentResult r = constrained_augment_case(pair, 7, cfg);
  EXPECT_TRUE(r.upper.ok());
  EXPECT_TRUE(r.lower.ok());
  EXPECT_LE(r.max_rotation_deg, cfg.rot_range + 1e-9);
  EXPECT_NO_THROW(validate_case(r.c));
  for (const Jaw* j : {&r.c.upper, &r.c.lower}) {
    EXPECT_TRUE(oracle::collisions(*j).empty());
    for (const Tooth* t : j->present()) EXPECT_EQ(*t->gt_points, *pair.find(t->id)->gt_points);
  }
  const AugmentResult again = constrained_augment_case(pair, 7, cfg);
  EXPECT_EQ(case_to_json_text(again.c), case_to_json_text(r.c));
}

TEST(OrdinaryAugment, TriggerAndScope) {
  const Case pair = fixture::synth(20).c;
  AugmentConfig always;
  always.ordinary_prob = 1.0;
  const OrdinaryResult r = ordinary_augment(pair, 3, always);
  EXPECT_TRUE(r.triggered);
  for (const Jaw* j : {&r.c.upper, &r.c.lower})
    for (const Tooth* t : j->present()) {
      const Tooth* src = pair.find(t->id);
      EXPECT_EQ(*t->gt_points, *src->gt_points);
      if (t->moved) {
        EXPECT_NE(t->points, src->points);
      } else {
        EXPECT_EQ(t->points, src->points);
      }
    }
  AugmentConfig never;
  never.ordinary_prob = 0.0;
  const OrdinaryResult n = ordinary_augment(pair, 3, never);
  EXPECT_FALSE(n.triggered);
  EXPECT_EQ(case_to_json_text(n.c), case_to_json_text(pair));
}
