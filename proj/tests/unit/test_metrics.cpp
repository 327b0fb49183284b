#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "toothalign/errors.hpp"
#include "toothalign/metrics.hpp"

using namespace toothalign;

TEST(Auc, ClosedForms) {
  EXPECT_EQ(auc(std::vector<double>{0, 0, 0}), 1.0);
  EXPECT_EQ(auc(std::vector<double>{5, 7, 100}), 0.0);
  EXPECT_EQ(auc(std::vector<double>{2.5}, 5.0), 0.5);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{1.0, 4.0}, 5.0), (0.8 + 0.2) / 2);
  EXPECT_THROW(auc(std::vector<double>{}), Error);
  EXPECT_THROW(auc(std::vector<double>{1.0}, 0.0), Error);
}

TEST(Auc, MatchesNumericIntegration) {
  Rng rng = make_rng(71);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> d(1 + rng() % 50);
    for (double& v : d) v = uniform(rng, 0, 7);
    EXPECT_NEAR(auc(d), oracle::auc_numeric(d, 5.0, 200000), 1e-4);
  }
}

TEST(Auc, MonotoneUnderPerturbation) {
  Rng rng = make_rng(72);
  std::vector<double> d(100);
  for (double& v : d) v = uniform(rng, 0, 6);
  double prev = auc(d);
  for (int step = 0; step < 50; ++step) {
    d[rng() % d.size()] += uniform(rng, 0, 0.5);
    const double now = auc(d);
    EXPECT_LE(now, prev);
    prev = now;
  }
}

TEST(AddCurve, FractionsAscending) {
  const std::vector<double> d{0.0, 1.0, 2.0, 5.0, 9.0};
  const AddCurve c = add_curve(d);
  ASSERT_EQ(c.thresholds.size(), 51u);
  EXPECT_EQ(c.thresholds.front(), 0.0);
  EXPECT_EQ(c.thresholds.back(), 5.0);
  EXPECT_DOUBLE_EQ(c.fractions.front(), 0.2);
  EXPECT_DOUBLE_EQ(c.fractions.back(), 0.8);
  for (std::size_t i = 1; i < c.fractions.size(); ++i) EXPECT_GE(c.fractions[i], c.fractions[i - 1]);
}

TEST(Add, IdenticalCasesGiveZero) {
  const Case gt = fixture::synth(73).c.ground_truth_view();
  const AddResult r = add_error(gt, gt);
  EXPECT_EQ(r.mean, 0.0);
  const CaseMetrics m = evaluate_case(gt, gt);
  EXPECT_EQ(m.add, 0.0);
  EXPECT_EQ(m.auc, 1.0);
  EXPECT_NEAR(m.me_rotate, 0.0, 1e-6);
  EXPECT_NEAR(m.me_translate, 0.0, 1e-9);
}

TEST(Add, UniformShift) {
  const Case gt = fixture::synth(74, 10).c.ground_truth_view();
  Case pred = gt;
  for (Jaw* j : {&pred.upper, &pred.lower})
    for (Tooth& t : j->teeth)
      for (Vec3& p : t.points) p += Vec3{0, 0.6, 0.8};
  const CaseMetrics m = evaluate_case(pred, gt);
  EXPECT_NEAR(m.add, 1.0, 1e-12);
  EXPECT_NEAR(m.auc, 0.8, 1e-12);
  EXPECT_NEAR(m.me_translate, 1.0, 1e-6);
}

TEST(Add, Mismatch) {
  const Case gt = fixture::synth(75).c.ground_truth_view();
  Case pred = gt;
  for (Tooth& t : pred.upper.teeth)
    if (t.present) {
      t.present = false;
      t.points.clear();
      break;
    }
  try {
    add_error(pred, gt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CorrespondenceMismatch);
  }
}

TEST(MeRotate, SignInvariantDegrees) {
  TransformMap a, b;
  RigidTransform t;
  t.rotation = quat_from_axis_angle(AxisAngle::make({0, 0, 1}, 3.14159265358979323846 / 18));  // 10 degrees
  a[ToothId(3)] = t;
  b[ToothId(3)] = RigidTransform::identity();
  EXPECT_NEAR(me_rotate(a, b), 10.0, 1e-9);
  EXPECT_EQ(me_rotate(a, a), 0.0);
  TransformMap empty;
  EXPECT_THROW(me_rotate(empty, b), Error);
}

TEST(Summary, Means) {
  std::vector<CaseMetrics> per(2);
  per[0].add = 1.0;
  per[1].add = 3.0;
  per[0].auc = 0.5;
  per[1].auc = 1.0;
  const MetricSummary s = summarize(per);
  EXPECT_EQ(s.add, 2.0);
  EXPECT_EQ(s.auc, 0.75);
  EXPECT_EQ(s.cases, 2u);
}

TEST(Iterate, FeedsBack) {
  Case c;
  c.id = "0";
  const CaseModel step = [](const Case& in) {
    Case out = in;
    out.id = std::to_string(std::stoi(in.id) + 1);
    return out;
  };
  const auto seq = iterate_predict(step, c, 3);
  ASSERT_EQ(seq.size(), 3u);
  EXPECT_EQ(seq[2].id, "3");
  EXPECT_THROW(iterate_predict(step, c, 0), Error);
}
