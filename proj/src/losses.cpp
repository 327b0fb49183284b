#include "toothalign/losses.hpp"

#include <algorithm>
#include <cmath>

#include "toothalign/errors.hpp"
#include "toothalign/point_bvh.hpp"

namespace toothalign {

namespace {

// XY nearest-neighbour queries through the 3D hierarchy on flattened points.
// The z term is exactly zero, so distances match the 2D kernel bit for bit.
class XyIndex {
 public:
  explicit XyIndex(std::span<const Vec3> pts) : bvh_(flatten(pts)) {}

  /// sqrt(min XY distance^2) < tau; only candidates near tau are resolved.
  bool within(double x, double y, double tau) const {
    const double bound = tau * (1.0 + 1e-9);
    return std::sqrt(bvh_.nearest_distance2({x, y, 0.0}, bound * bound)) < tau;
  }

 private:
  static std::vector<Vec3> flatten(std::span<const Vec3> pts) {
    std::vector<Vec3> out;
    out.reserve(pts.size());
    for (const Vec3& p : pts) out.push_back({p.x, p.y, 0.0});
    return out;
  }

  PointBvh bvh_;
};

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

const Jaw& opposing_jaw(const Case& c, const Tooth& t) {
  return c.jaw(t.id.side() == JawSide::upper ? JawSide::lower : JawSide::upper);
}

// The counterpart of a scored tooth; both must be present with equal counts.
const Tooth& counterpart(const Case& c, const Tooth& ref, const char* what) {
  const Tooth* t = c.find(ref.id);
  if (t == nullptr || !t->present || t->points.size() != ref.points.size()) {
    throw Error(ErrorCode::CorrespondenceMismatch,
                std::string(what) + " has no matching tooth " + std::to_string(ref.id.value()));
  }
  return *t;
}

// Present, moved teeth of the reference case in id order.
std::vector<const Tooth*> scored_teeth(const Case& ref) {
  std::vector<const Tooth*> out;
  for (const Jaw* j : {&ref.upper, &ref.lower})
    for (const Tooth* t : j->present())
      if (t->moved) out.push_back(t);
  return out;
}

std::vector<Vec3> region_points(const Case& c, const std::vector<ToothId>& region) {
  std::vector<Vec3> pts;
  for (ToothId id : region) {
    const Tooth* t = c.find(id);
    pts.insert(pts.end(), t->points.begin(), t->points.end());
  }
  return pts;
}

std::array<Mat3, 4> raw_rotation_partials(const std::array<double, 4>& q) {
  const auto [w, x, y, z] = q;
  const double s = w * w + x * x + y * y + z * z;
  const Mat3 m = rotation_matrix_from_raw(q);  // M / s
  const std::array<Mat3, 4> dm{{
      {{{2 * w, -2 * z, 2 * y}, {2 * z, 2 * w, -2 * x}, {-2 * y, 2 * x, 2 * w}}},
      {{{2 * x, 2 * y, 2 * z}, {2 * y, -2 * x, -2 * w}, {2 * z, 2 * w, -2 * x}}},
      {{{-2 * y, 2 * x, 2 * w}, {2 * x, 2 * y, 2 * z}, {-2 * w, 2 * z, -2 * y}}},
      {{{-2 * z, -2 * w, 2 * x}, {2 * w, -2 * z, 2 * y}, {2 * x, 2 * y, 2 * z}}},
  }};
  std::array<Mat3, 4> out{};
  for (int k = 0; k < 4; ++k)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) out[k][a][b] = dm[k][a][b] / s - m[a][b] * 2.0 * q[k] / s;
  return out;
}

std::vector<Vec3> pose_points(std::span<const Vec3> pts, const Pose& pose, const Vec3& pivot) {
  const Mat3 r = rotation_matrix_from_raw(pose.q);
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const Vec3& p : pts) out.push_back(r * (p - pivot) + pivot + pose.t);
  return out;
}

const Pose& pose_for(const PoseMap& m, ToothId id) {
  auto it = m.find(id);
  if (it == m.end()) {
    throw Error(ErrorCode::CorrespondenceMismatch, "no predicted pose for tooth " + std::to_string(id.value()));
  }
  return it->second;
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {delta0, delta1, delta2, delta3, omega, w_pior, omega_ant, tau, max_t}) {
    if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::ConfigError, "loss weights must be finite and nonnegative");
  }
  if (!(tau > 0.0)) throw Error(ErrorCode::ConfigError, "tau must be positive");
  if (!(max_t > 0.0)) throw Error(ErrorCode::ConfigError, "max_t must be positive");
}

Pose pose_of(const RigidTransform& t) { return {t.rotation.components(), t.translation}; }

// ---------------------------------------------------------------------------
// Reconstruction

double recon_tooth_loss(std::span<const Vec3> pred, std::span<const Vec3> gt) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw Error(ErrorCode::CorrespondenceMismatch, "reconstruction needs index-aligned, nonempty clouds");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += squared_norm(pred[i] - gt[i]);
  return sum + squared_norm(centroid(pred) - centroid(gt));
}

double recon_loss(const Case& pred, const Case& gt) {
  double sum = 0.0;
  for (const Tooth* t : scored_teeth(gt)) sum += recon_tooth_loss(counterpart(pred, *t, "prediction").points, t->points);
  return sum;
}

ValueGrad recon_loss(const Case& pair, const PoseMap& pred) {
  ValueGrad out;
  for (const Tooth* t : scored_teeth(pair)) {
    if (!t->gt_points) {
      throw Error(ErrorCode::CorrespondenceMismatch, "tooth " + std::to_string(t->id.value()) + " has no ground truth");
    }
    const Pose& pose = pose_for(pred, t->id);
    const Vec3 pivot = t->center();
    const std::vector<Vec3> posed = pose_points(t->points, pose, pivot);
    const std::vector<Vec3>& gt = *t->gt_points;

    Mat3 g{};  // dL/dR
    Vec3 gt_sum;
    double value = 0.0;
    for (std::size_t i = 0; i < posed.size(); ++i) {
      const Vec3 e = posed[i] - gt[i];
      value += squared_norm(e);
      const Vec3 local = t->points[i] - pivot;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) g[a][b] += 2.0 * e[a] * local[b];
      gt_sum += 2.0 * e;
    }
    const Vec3 ec = centroid(posed) - centroid(gt);
    value += squared_norm(ec);
    const Vec3 mean_local = centroid(t->points) - pivot;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) g[a][b] += 2.0 * ec[a] * mean_local[b];
    gt_sum += 2.0 * ec;

    std::array<double, 7> grad{};
    const auto partials = raw_rotation_partials(pose.q);
    for (int k = 0; k < 4; ++k)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) grad[k] += g[a][b] * partials[k][a][b];
    for (int k = 0; k < 3; ++k) grad[4 + k] = gt_sum[k];
    out.value += value;
    out.grad[t->id] = grad;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rotation / translation

Enhancement enhancement_weight(const RigidTransform& gt, double max_t) {
  const double angle = axis_angle_from_quat(gt.rotation).angle;
  return {std::min(angle / (0.5 * std::numbers::pi), 1.0), std::min(norm(gt.translation) / max_t, 1.0)};
}

EnhancementMap enhancement_weights(const std::optional<TransformMap>& gt, const std::vector<ToothId>& teeth,
                                   double max_t) {
  EnhancementMap out;
  for (ToothId id : teeth) {
    if (!gt) {
      out[id] = {};
      continue;
    }
    auto it = gt->find(id);
    if (it == gt->end()) {
      throw Error(ErrorCode::CorrespondenceMismatch, "no ground-truth transform for tooth " + std::to_string(id.value()));
    }
    out[id] = enhancement_weight(it->second, max_t);
  }
  return out;
}

RotTransLoss rot_trans_loss(const PoseMap& pred, const TransformMap& gt, const LossWeights& w,
                            const EnhancementMap& zeta) {
  RotTransLoss out;
  for (const auto& [id, g] : gt) {
    const Pose& p = pose_for(pred, id);
    auto z = zeta.find(id);
    const Enhancement e = z == zeta.end() ? Enhancement{} : z->second;
    std::array<double, 7> grad{};
    const auto& qg = g.rotation.components();
    for (int i = 0; i < 4; ++i) {
      const double d = p.q[i] - qg[i];
      out.l_rotate += std::abs(d) * (1.0 + e.rotate);
      grad[i] = w.omega * sign0(d) * (1.0 + e.rotate);
    }
    for (int i = 0; i < 3; ++i) {
      const double d = p.t[i] - g.translation[i];
      out.l_trans += std::abs(d) * (1.0 + e.trans);
      grad[4 + i] = sign0(d) * (1.0 + e.trans);
    }
    out.grad[id] = grad;
  }
  out.l_val = w.omega * out.l_rotate + out.l_trans;
  return out;
}

// ---------------------------------------------------------------------------
// Occlusal projecting overlap

std::vector<ToothId> opposing_region(const Tooth& tooth, const Jaw& opposing, double tau) {
  std::vector<ToothId> out;
  if (!tooth.present || tooth.points.empty()) return out;
  double lx = tooth.points[0].x, hx = lx, ly = tooth.points[0].y, hy = ly;
  for (const Vec3& p : tooth.points) {
    lx = std::min(lx, p.x);
    hx = std::max(hx, p.x);
    ly = std::min(ly, p.y);
    hy = std::max(hy, p.y);
  }
  const double pad = tau * (1.0 + 1e-12) + 1e-12;  // never lose a pair to rounding
  for (const Tooth* o : opposing.present()) {
    double olx = o->points[0].x, ohx = olx, oly = o->points[0].y, ohy = oly;
    for (const Vec3& p : o->points) {
      olx = std::min(olx, p.x);
      ohx = std::max(ohx, p.x);
      oly = std::min(oly, p.y);
      ohy = std::max(ohy, p.y);
    }
    if (olx - pad <= hx && lx <= ohx + pad && oly - pad <= hy && ly <= ohy + pad) out.push_back(o->id);
  }
  return out;
}

OverlapMask occlusal_overlap_mask(std::span<const Vec3> tooth, std::span<const Vec3> opposing, double tau) {
  OverlapMask mask(tooth.size(), 0);
  if (opposing.empty()) return mask;
  const XyIndex index(opposing);
  for (std::size_t i = 0; i < tooth.size(); ++i) mask[i] = index.within(tooth[i].x, tooth[i].y, tau) ? 1 : 0;
  return mask;
}

OverlapMask tooth_overlap_mask(const Case& c, const Tooth& tooth, double tau) {
  const auto region = opposing_region(tooth, opposing_jaw(c, tooth), tau);
  return occlusal_overlap_mask(tooth.points, region_points(c, region), tau);
}

std::size_t mask_hamming(const OverlapMask& a, const OverlapMask& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::CorrespondenceMismatch, "masks differ in length");
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
  return n;
}

double overlap_consistency_loss(const Case& pred, const Case& gt, double tau) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const Tooth* t : scored_teeth(gt)) {
    const Tooth& p = counterpart(pred, *t, "prediction");
    const auto region_p = opposing_region(p, opposing_jaw(pred, p), tau);
    const auto region_g = opposing_region(*t, opposing_jaw(gt, *t), tau);
    if (region_p.empty() && region_g.empty()) continue;
    const OverlapMask mp = occlusal_overlap_mask(p.points, region_points(pred, region_p), tau);
    const OverlapMask mg = occlusal_overlap_mask(t->points, region_points(gt, region_g), tau);
    sum += static_cast<double>(mask_hamming(mp, mg));
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// Occlusal distance uniformity

double population_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*lo == *hi) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size());
}

std::vector<double> occlusal_distances(std::span<const Vec3> tooth, std::span<const Vec3> opposing, double tau) {
  std::vector<double> out;
  if (opposing.empty() || tooth.empty()) return out;
  const XyIndex opp(opposing);
  const XyIndex own(tooth);
  std::vector<Vec3> partners;  // opposing points inside the tooth's projection range
  for (const Vec3& q : opposing)
    if (own.within(q.x, q.y, tau)) partners.push_back(q);
  if (partners.empty()) return out;
  const PointsSoA part(partners);
  for (const Vec3& p : tooth) {
    if (opp.within(p.x, p.y, tau)) out.push_back(std::sqrt(min_distance2(p, part)));
  }
  return out;
}

double posterior_uniformity_loss(const Case& pred, double tau) {
  double sum = 0.0;
  for (const Tooth* t : scored_teeth(pred)) {
    if (!t->id.posterior()) continue;
    const auto region = opposing_region(*t, opposing_jaw(pred, *t), tau);
    const std::vector<double> d = occlusal_distances(t->points, region_points(pred, region), tau);
    sum += population_variance(d);
  }
  return sum;
}

Vec3 incisal_peak(const Tooth& tooth) {
  if (tooth.points.empty()) throw Error(ErrorCode::EmptyCloud, "peak of an empty tooth");
  const bool upper = tooth.id.side() == JawSide::upper;
  std::size_t best = 0;
  for (std::size_t i = 1; i < tooth.points.size(); ++i) {
    const double z = tooth.points[i].z;
    if (upper ? z < tooth.points[best].z : z > tooth.points[best].z) best = i;
  }
  return tooth.points[best];
}

AnteriorLoss anterior_uniformity_loss(const Case& pred, const Case& gt, double omega_ant) {
  AnteriorLoss out;
  for (const Tooth* t : scored_teeth(gt)) {
    if (!t->id.anterior()) continue;
    const Tooth& p = counterpart(pred, *t, "prediction");
    const Vec3 cp = p.center();
    const Vec3 cg = t->center();
    const Vec3 kp = incisal_peak(p);
    const Vec3 kg = incisal_peak(*t);
    out.l_ant1 += distance(cp, cg) + distance(kp, kg);
    const Vec3 va = kp - cp;
    const Vec3 vb = kg - cg;
    if (squared_norm(va) == 0.0 || squared_norm(vb) == 0.0) {
      throw Error(ErrorCode::DegenerateAxis, "tooth " + std::to_string(t->id.value()) + " peak coincides with centroid");
    }
    out.l_ant2 += std::atan2(norm(cross(va, vb)), dot(va, vb));
  }
  out.l_ant = out.l_ant1 + omega_ant * out.l_ant2;
  return out;
}

double uniformity_loss(double l_ant, double l_pior, const LossWeights& w) { return l_ant + w.w_pior * l_pior; }

// ---------------------------------------------------------------------------
// Totals

namespace {

void fill_occlusal(LossBreakdown& b, const Case& pred, const Case& gt, const LossWeights& w) {
  b.l_fit = overlap_consistency_loss(pred, gt, w.tau);
  const AnteriorLoss ant = anterior_uniformity_loss(pred, gt, w.omega_ant);
  b.l_uni_ant = ant.l_ant;
  b.l_uni_pior = posterior_uniformity_loss(pred, w.tau);
  b.l_uni = uniformity_loss(b.l_uni_ant, b.l_uni_pior, w);
}

void finish(LossBreakdown& b, const LossWeights& w) {
  b.total = w.delta0 * b.l_recon + w.delta1 * b.l_fit + w.delta2 * b.l_uni + w.delta3 * b.l_val;
}

}  // namespace

LossBreakdown total_loss(const Case& pred, const Case& gt, const Case& pre, const LossWeights& w, bool train_mode) {
  w.validate();
  LossBreakdown b;
  b.l_recon = recon_loss(pred, gt);

  PoseMap pred_poses;
  TransformMap gt_transforms;
  std::vector<ToothId> ids;
  for (const Tooth* t : scored_teeth(gt)) {
    const Tooth& p = counterpart(pred, *t, "prediction");
    const Tooth& r = counterpart(pre, *t, "pre-treatment reference");
    gt_transforms.emplace(t->id, kabsch_recover(r.points, t->points));
    pred_poses.emplace(t->id, pose_of(kabsch_recover(r.points, p.points)));
    ids.push_back(t->id);
  }
  const auto zeta =
      enhancement_weights(train_mode ? std::optional<TransformMap>(gt_transforms) : std::nullopt, ids, w.max_t);
  const RotTransLoss rt = rot_trans_loss(pred_poses, gt_transforms, w, zeta);
  b.l_rotate = rt.l_rotate;
  b.l_trans = rt.l_trans;
  b.l_val = rt.l_val;

  fill_occlusal(b, pred, gt, w);
  finish(b, w);
  return b;
}

Case apply_poses(const Case& pair, const PoseMap& pred) {
  Case out = pair.pre_view();
  for (Jaw* j : {&out.upper, &out.lower}) {
    for (Tooth& t : j->teeth) {
      if (!t.present || !t.moved) continue;
      t.points = pose_points(t.points, pose_for(pred, t.id), t.center());
    }
  }
  return out;
}

LossBreakdown total_loss(const Case& pair, const PoseMap& pred, const LossWeights& w, bool train_mode) {
  w.validate();
  LossBreakdown b;
  const ValueGrad recon = recon_loss(pair, pred);
  b.l_recon = recon.value;

  TransformMap gt_transforms;
  std::vector<ToothId> ids;
  const TransformMap all = recover_transforms(pair);
  for (const Tooth* t : scored_teeth(pair)) {
    gt_transforms.emplace(t->id, all.at(t->id));
    ids.push_back(t->id);
  }
  const auto zeta =
      enhancement_weights(train_mode ? std::optional<TransformMap>(gt_transforms) : std::nullopt, ids, w.max_t);
  const RotTransLoss rt = rot_trans_loss(pred, gt_transforms, w, zeta);
  b.l_rotate = rt.l_rotate;
  b.l_trans = rt.l_trans;
  b.l_val = rt.l_val;

  fill_occlusal(b, apply_poses(pair, pred), pair.ground_truth_view(), w);
  finish(b, w);

  PoseGradient g;
  for (const auto& [id, gr] : recon.grad)
    for (int k = 0; k < 7; ++k) g[id][k] += w.delta0 * gr[k];
  for (const auto& [id, gr] : rt.grad)
    for (int k = 0; k < 7; ++k) g[id][k] += w.delta3 * gr[k];
  b.gradients = std::move(g);
  return b;
}

// ---------------------------------------------------------------------------
// Gradient verification

PoseGradient finite_difference_gradient(const PoseLossFn& fn, const PoseMap& at, double h) {
  PoseGradient out;
  for (const auto& [id, pose] : at) {
    std::array<double, 7> g{};
    for (int k = 0; k < 7; ++k) {
      PoseMap plus = at;
      PoseMap minus = at;
      if (k < 4) {
        plus[id].q[k] += h;
        minus[id].q[k] -= h;
      } else {
        plus[id].t[k - 4] += h;
        minus[id].t[k - 4] -= h;
      }
      g[k] = (fn(plus).value - fn(minus).value) / (2.0 * h);
    }
    out[id] = g;
  }
  return out;
}

double grad_check(const PoseLossFn& fn, const PoseMap& at, double h) {
  const ValueGrad analytic = fn(at);
  const PoseGradient numeric = finite_difference_gradient(fn, at, h);
  double worst = 0.0;
  for (const auto& [id, ng] : numeric) {
    auto it = analytic.grad.find(id);
    for (int k = 0; k < 7; ++k) {
      const double a = it == analytic.grad.end() ? 0.0 : it->second[k];
      const double n = ng[k];
      worst = std::max(worst, std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)}));
    }
  }
  return worst;
}

}  // namespace toothalign
