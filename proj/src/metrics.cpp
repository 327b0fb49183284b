#include "toothalign/metrics.hpp"

#include <algorithm>
#include <numbers>

#include "toothalign/errors.hpp"

namespace toothalign {

AddResult add_error(const Case& pred, const Case& gt) {
  AddResult r;
  for (JawSide side : {JawSide::upper, JawSide::lower}) {
    const auto gt_teeth = gt.jaw(side).present();
    const auto pred_teeth = pred.jaw(side).present();
    if (gt_teeth.size() != pred_teeth.size()) {
      throw Error(ErrorCode::CorrespondenceMismatch, "present tooth sets differ");
    }
    for (std::size_t i = 0; i < gt_teeth.size(); ++i) {
      const Tooth& a = *pred_teeth[i];
      const Tooth& b = *gt_teeth[i];
      if (a.id != b.id || a.points.size() != b.points.size()) {
        throw Error(ErrorCode::CorrespondenceMismatch,
                    "tooth " + std::to_string(b.id.value()) + " has no index-aligned prediction");
      }
      for (std::size_t k = 0; k < a.points.size(); ++k) r.distances.push_back(distance(a.points[k], b.points[k]));
    }
  }
  double sum = 0.0;
  for (double d : r.distances) sum += d;
  r.mean = r.distances.empty() ? 0.0 : sum / static_cast<double>(r.distances.size());
  return r;
}

double auc(std::span<const double> distances, double k) {
  if (!(k > 0.0)) throw Error(ErrorCode::InvalidArgument, "auc threshold k must be positive");
  if (distances.empty()) throw Error(ErrorCode::InvalidArgument, "auc of an empty distance set");
  double sum = 0.0;
  for (double d : distances) sum += std::max(0.0, k - d) / k;
  return sum / static_cast<double>(distances.size());
}

AddCurve add_curve(std::span<const double> distances, double k, std::size_t samples) {
  if (!(k > 0.0) || samples < 2) throw Error(ErrorCode::InvalidArgument, "add curve needs k > 0 and two samples");
  std::vector<double> sorted(distances.begin(), distances.end());
  std::sort(sorted.begin(), sorted.end());
  AddCurve c;
  c.k = k;
  for (std::size_t i = 0; i < samples; ++i) {
    const double th = k * static_cast<double>(i) / static_cast<double>(samples - 1);
    const auto n = std::upper_bound(sorted.begin(), sorted.end(), th) - sorted.begin();
    c.thresholds.push_back(th);
    c.fractions.push_back(sorted.empty() ? 1.0 : static_cast<double>(n) / static_cast<double>(sorted.size()));
  }
  return c;
}

namespace {

const RigidTransform& lookup(const TransformMap& m, ToothId id) {
  auto it = m.find(id);
  if (it == m.end()) throw Error(ErrorCode::MissingTransform, "no predicted transform for tooth " + std::to_string(id.value()));
  return it->second;
}

}  // namespace

double me_rotate(const TransformMap& pred, const TransformMap& gt) {
  if (gt.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [id, g] : gt) sum += rotation_angle_between(lookup(pred, id).rotation, g.rotation);
  return sum / static_cast<double>(gt.size()) * 180.0 / std::numbers::pi;
}

double me_translate(const TransformMap& pred, const TransformMap& gt) {
  if (gt.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [id, g] : gt) sum += distance(lookup(pred, id).translation, g.translation);
  return sum / static_cast<double>(gt.size());
}

CaseMetrics evaluate_case(const Case& pred, const Case& gt, const Case* pre, double k) {
  CaseMetrics m;
  AddResult add = add_error(pred, gt);
  m.add = add.mean;
  m.auc = auc(add.distances, k);
  m.distances = std::move(add.distances);
  const Case& ref = pre != nullptr ? *pre : gt;
  TransformMap to_pred, to_gt;
  for (const Jaw* jaw : {&gt.upper, &gt.lower}) {
    for (const Tooth* t : jaw->present()) {
      if (!t->moved) continue;
      const Tooth* r = ref.find(t->id);
      if (r == nullptr || !r->present || r->points.size() != t->points.size()) {
        throw Error(ErrorCode::CorrespondenceMismatch,
                    "reference lacks an index-aligned tooth " + std::to_string(t->id.value()));
      }
      to_gt.emplace(t->id, kabsch_recover(r->points, t->points));
      to_pred.emplace(t->id, kabsch_recover(r->points, pred.find(t->id)->points));
    }
  }
  m.me_rotate = me_rotate(to_pred, to_gt);
  m.me_translate = me_translate(to_pred, to_gt);
  return m;
}

MetricSummary summarize(std::span<const CaseMetrics> per_case) {
  MetricSummary s;
  s.cases = per_case.size();
  if (per_case.empty()) return s;
  for (const CaseMetrics& m : per_case) {
    s.add += m.add;
    s.auc += m.auc;
    s.me_rotate += m.me_rotate;
    s.me_translate += m.me_translate;
  }
  const double n = static_cast<double>(per_case.size());
  s.add /= n;
  s.auc /= n;
  s.me_rotate /= n;
  s.me_translate /= n;
  return s;
}

std::vector<Case> iterate_predict(const CaseModel& model, const Case& c, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "iteration count must be at least 1");
  std::vector<Case> out;
  out.reserve(static_cast<std::size_t>(n));
  Case current = c;
  for (int i = 0; i < n; ++i) {
    current = model(current);
    out.push_back(current);
  }
  return out;
}

}  // namespace toothalign
