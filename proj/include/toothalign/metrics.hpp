#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "toothalign/case_model.hpp"

namespace toothalign {

inline constexpr double kDefaultAucK = 5.0;  // mm

struct AddResult {
  std::vector<double> distances;  // pooled over all present teeth, id order
  double mean = 0.0;
};

/// Index-wise point distances between the `points` of two cases. Throws
/// CorrespondenceMismatch when present sets or point counts differ.
AddResult add_error(const Case& pred, const Case& gt);

/// Exact area under the empirical ADD curve over [0, k], divided by k:
/// mean of max(0, k - d) / k. Throws InvalidArgument for k <= 0 or no distances.
double auc(std::span<const double> distances, double k = kDefaultAucK);

struct AddCurve {
  std::vector<double> thresholds;  // ascending, 0..k
  std::vector<double> fractions;   // share of distances <= threshold
  double k = kDefaultAucK;
};

AddCurve add_curve(std::span<const double> distances, double k = kDefaultAucK, std::size_t samples = 51);

/// Mean geodesic angle in degrees over the teeth of `gt`. Throws MissingTransform.
double me_rotate(const TransformMap& pred, const TransformMap& gt);
/// Mean L2 difference of translation vectors, mm.
double me_translate(const TransformMap& pred, const TransformMap& gt);

struct CaseMetrics {
  double add = 0.0;
  double auc = 0.0;
  double me_rotate = 0.0;     // degrees
  double me_translate = 0.0;  // mm
  std::vector<double> distances;
};

/// Compares the `points` of `pred` and `gt`. Pose errors use transforms
/// recovered from `pre` (the gt geometry itself when null) onto each side,
/// over the present moved teeth of `gt`.
CaseMetrics evaluate_case(const Case& pred, const Case& gt, const Case* pre = nullptr, double k = kDefaultAucK);

struct MetricSummary {
  double add = 0.0;  // mean of per-case ADD
  double auc = 0.0;
  double me_rotate = 0.0;
  double me_translate = 0.0;
  std::size_t cases = 0;
};

/// Means in the given case order.
MetricSummary summarize(std::span<const CaseMetrics> per_case);

using CaseModel = std::function<Case(const Case&)>;

/// Feeds each prediction back as the next input. Throws InvalidArgument for n < 1.
std::vector<Case> iterate_predict(const CaseModel& model, const Case& c, int n);

}  // namespace toothalign
