#include <gtest/gtest.h>

#include <numbers>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "toothalign/errors.hpp"
#include "toothalign/geometry.hpp"

using namespace toothalign;

namespace {

constexpr double kPi = std::numbers::pi;

void expect_vec_near(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

}  // namespace

TEST(Quaternion, ZeroAngleIsIdentity) {
  const UnitQuaternion q = quat_from_axis_angle(AxisAngle::make({0.3, -0.2, 0.9}, 0.0));
  EXPECT_EQ(q.components(), (std::array<double, 4>{1.0, 0.0, 0.0, 0.0}));
}

TEST(Quaternion, HalfTurnAboutZ) {
  const UnitQuaternion q = quat_from_axis_angle(AxisAngle::make({0, 0, 1}, kPi));
  EXPECT_NEAR(q.w(), 0.0, 1e-15);
  EXPECT_NEAR(q.x(), 0.0, 1e-15);
  EXPECT_NEAR(q.y(), 0.0, 1e-15);
  EXPECT_NEAR(q.z(), 1.0, 1e-15);
}

TEST(Quaternion, CanonicalSign) {
  const UnitQuaternion q = UnitQuaternion::from_components(-0.5, 0.5, -0.5, 0.5);
  EXPECT_GE(q.w(), 0.0);
  const UnitQuaternion r = UnitQuaternion::from_components(0.0, -1.0, 0.0, 0.0);
  EXPECT_EQ(r.x(), 1.0);
}

TEST(Quaternion, AxisAngleRoundTrip) {
  Rng rng = make_rng(11);
  for (int i = 0; i < 1000; ++i) {
    const AxisAngle a = AxisAngle::make(random_unit_vector(rng), uniform(rng, 1e-3, kPi - 1e-3));
    const AxisAngle b = axis_angle_from_quat(quat_from_axis_angle(a));
    EXPECT_NEAR(a.angle, b.angle, 1e-9);
    expect_vec_near(a.axis, b.axis, 1e-9);
  }
}

TEST(Quaternion, NegativeAngleFlipsAxis) {
  const AxisAngle a = AxisAngle::make({0, 0, 1}, -0.5);
  EXPECT_NEAR(a.angle, 0.5, 1e-15);
  EXPECT_NEAR(a.axis.z, -1.0, 1e-15);
}

TEST(Quaternion, RawMatrixMatchesNormalized) {
  Rng rng = make_rng(5);
  for (int i = 0; i < 100; ++i) {
    const std::array<double, 4> raw{uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2)};
    const Mat3 m = rotation_matrix_from_raw(raw);
    const Mat3 n = UnitQuaternion::from_components(raw[0], raw[1], raw[2], raw[3]).to_matrix();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(m[r][c], n[r][c], 1e-12);
  }
}

TEST(RotationAngle, Cases) {
  const UnitQuaternion id;
  const UnitQuaternion z90 = quat_from_axis_angle(AxisAngle::make({0, 0, 1}, kPi / 2));
  EXPECT_EQ(rotation_angle_between(z90, z90), 0.0);
  EXPECT_NEAR(rotation_angle_between(id, z90), kPi / 2, 1e-12);
  // -q: build the unnormalized opposite sign; canonicalization maps it back
  const UnitQuaternion neg = UnitQuaternion::from_components(-z90.w(), -z90.x(), -z90.y(), -z90.z());
  EXPECT_NEAR(rotation_angle_between(z90, neg), 0.0, 1e-12);
}

TEST(Transform, IdentityLeavesPointsUnchanged) {
  Rng rng = make_rng(2);
  const auto pts = fixture::random_cloud(rng, 50, 10.0);
  EXPECT_EQ(apply_transform(RigidTransform::identity(), pts), pts);
}

TEST(Transform, QuarterTurnAboutPivot) {
  RigidTransform t;
  t.rotation = quat_from_axis_angle(AxisAngle::make({0, 0, 1}, kPi / 2));
  t.pivot = {3, 4, 5};
  t.translation = {0.5, -1, 2};
  expect_vec_near(t.apply(t.pivot + Vec3{1, 0, 0}), t.pivot + Vec3{0, 1, 0} + t.translation, 1e-12);
}

TEST(Transform, RigidityAndInverse) {
  Rng rng = make_rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto pts = fixture::random_cloud(rng, 12, 20.0);
    const RigidTransform t = fixture::random_transform(rng, kPi, 10.0, pts[0]);
    const auto moved = apply_transform(t, pts);
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        ASSERT_NEAR(distance(moved[i], moved[j]), distance(pts[i], pts[j]), 1e-9);
    const auto back = apply_transform(t.inverse(), moved);
    for (std::size_t i = 0; i < pts.size(); ++i) ASSERT_LE(distance(back[i], pts[i]), 1e-9);
  }
}

TEST(Centroid, Cases) {
  EXPECT_EQ(centroid(std::vector<Vec3>{{1, 2, 3}}), Vec3(1, 2, 3));
  std::vector<Vec3> cube;
  for (int i = 0; i < 8; ++i) cube.push_back({(i & 1) ? 0.5 : -0.5, (i & 2) ? 0.5 : -0.5, (i & 4) ? 0.5 : -0.5});
  EXPECT_EQ(centroid(cube), Vec3(0, 0, 0));
  EXPECT_EQ(centroid(std::vector<Vec3>{{1, 0, 0}, {3, 0, 0}}), Vec3(2, 0, 0));
  try {
    centroid(std::vector<Vec3>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCloud);
  }
}

TEST(Fps, OneDimensionalExample) {
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {10, 0, 0}};
  EXPECT_EQ(fps_sample(pts, 2, 0), (std::vector<std::size_t>{0, 2}));
}

TEST(Fps, AllPointsIsAPermutation) {
  Rng rng = make_rng(4);
  const auto pts = fixture::random_cloud(rng, 40);
  auto idx = fps_sample(pts, pts.size(), 7);
  EXPECT_EQ(idx.front(), 7u);
  std::sort(idx.begin(), idx.end());
  for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(idx[i], i);
}

TEST(Fps, TooManySamples) {
  const std::vector<Vec3> pts{{0, 0, 0}};
  try {
    fps_sample(pts, 2, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientPoints);
  }
}

TEST(Fps, MatchesOracleWithTies) {
  Rng rng = make_rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    std::vector<Vec3> pts(n);
    for (Vec3& p : pts) p = {double(rng() % 3), double(rng() % 3), double(rng() % 2)};  // many ties and duplicates
    const std::size_t k = 1 + rng() % n;
    const std::size_t start = rng() % n;
    ASSERT_EQ(fps_sample(pts, k, start), oracle::fps(pts, k, start));
  }
}

TEST(Fps, StartFarthestFromCentroid) {
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {-5, 0, 0}, {1, 1, 0}};
  EXPECT_EQ(farthest_from_centroid(pts), 2u);
}

TEST(Kabsch, IdentityAndTranslation) {
  Rng rng = make_rng(8);
  const auto pts = fixture::random_cloud(rng, 30, 5.0);
  const RigidTransform same = kabsch_recover(pts, pts);
  EXPECT_NEAR(axis_angle_from_quat(same.rotation).angle, 0.0, 1e-7);
  EXPECT_NEAR(norm(same.translation), 0.0, 1e-12);

  std::vector<Vec3> shifted;
  for (const Vec3& p : pts) shifted.push_back(p + Vec3{1, 0, 0});
  const RigidTransform t = kabsch_recover(pts, shifted);
  EXPECT_NEAR(axis_angle_from_quat(t.rotation).angle, 0.0, 1e-7);
  expect_vec_near(t.translation, {1, 0, 0}, 1e-12);
}

TEST(Kabsch, RecoversRandomTransforms) {
  Rng rng = make_rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pts = fixture::random_cloud(rng, 64, 5.0, {10, 20, 0});
    const RigidTransform t = fixture::random_transform(rng, kPi * 0.95, 5.0, centroid(pts));
    const RigidTransform r = kabsch_recover(pts, apply_transform(t, pts));
    EXPECT_LE(rotation_angle_between(r.rotation, t.rotation), 1e-6);
    EXPECT_LE(distance(r.translation, t.translation), 1e-6);
  }
}

TEST(Kabsch, DegenerateInputs) {
  const std::vector<Vec3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  try {
    kabsch_recover(line, line);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateCloud);
  }
  const std::vector<Vec3> two{{0, 0, 0}, {1, 0, 0}};
  EXPECT_THROW(kabsch_recover(two, two), Error);
}

TEST(Rng, DeriveSeedSeparatesStreams) {
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
  EXPECT_NE(derive_seed(1, "a", "x"), derive_seed(1, "a", "y"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
  EXPECT_EQ(derive_seed(3, "s", std::uint64_t{4}), derive_seed(3, "s", std::uint64_t{4}));
}

TEST(Rng, UniformBounds) {
  Rng rng = make_rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform01(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_NEAR(norm(random_unit_vector(rng)), 1.0, 1e-12);
  }
}
