#include "toothalign/case_model.hpp"

#include <algorithm>
#include <set>

#include "toothalign/errors.hpp"

namespace toothalign {

ToothId::ToothId(int index) : index_(index) {
  if (index < 1 || index > 32) {
    throw Error(ErrorCode::InvalidArgument, "tooth id " + std::to_string(index) + " outside 1..32");
  }
}

const Tooth* Jaw::find(ToothId id) const {
  for (const Tooth& t : teeth)
    if (t.id == id) return &t;
  return nullptr;
}

Tooth* Jaw::find(ToothId id) {
  for (Tooth& t : teeth)
    if (t.id == id) return &t;
  return nullptr;
}

std::vector<const Tooth*> Jaw::present() const {
  std::vector<const Tooth*> out;
  for (const Tooth& t : teeth)
    if (t.present) out.push_back(&t);
  std::sort(out.begin(), out.end(), [](const Tooth* a, const Tooth* b) { return a->id < b->id; });
  return out;
}

bool Case::is_training_pair() const {
  for (const Jaw* j : {&upper, &lower})
    for (const Tooth& t : j->teeth)
      if (t.gt_points) return true;
  return false;
}

Case Case::ground_truth_view() const {
  Case out = *this;
  for (Jaw* j : {&out.upper, &out.lower}) {
    for (Tooth& t : j->teeth) {
      if (t.gt_points) t.points = std::move(*t.gt_points);
      t.gt_points.reset();
    }
  }
  return out;
}

Case Case::pre_view() const {
  Case out = *this;
  for (Jaw* j : {&out.upper, &out.lower})
    for (Tooth& t : j->teeth) t.gt_points.reset();
  return out;
}

namespace {

bool all_finite(const std::vector<Vec3>& pts) {
  return std::all_of(pts.begin(), pts.end(), [](const Vec3& p) { return p.finite(); });
}

void validate_jaw(const Jaw& jaw, const std::string& name, bool& any_gt, bool& any_present_without_gt) {
  std::set<int> seen;
  bool has_present = false;
  for (std::size_t i = 0; i < jaw.teeth.size(); ++i) {
    const Tooth& t = jaw.teeth[i];
    const std::string path = "$." + name + "[" + std::to_string(i) + "]";
    if (t.id.side() != jaw.side) {
      throw Error(ErrorCode::SchemaViolation, path + ".id: tooth " + std::to_string(t.id.value()) +
                                                  " does not belong to the " + name + " jaw");
    }
    if (!seen.insert(t.id.value()).second) {
      throw Error(ErrorCode::DuplicateTooth, path + ".id: tooth " + std::to_string(t.id.value()) + " repeated");
    }
    if (!(t.proxy_radius > 0.0) || !std::isfinite(t.proxy_radius)) {
      throw Error(ErrorCode::SchemaViolation, path + ".proxy_radius: must be a positive number");
    }
    if (!t.present) {
      if (!t.points.empty() || (t.gt_points && !t.gt_points->empty())) {
        throw Error(ErrorCode::SchemaViolation, path + ".points: absent tooth must not carry points");
      }
      continue;
    }
    has_present = true;
    if (t.points.size() != kPointsPerTooth) {
      throw Error(ErrorCode::WrongPointCount, path + ".points: expected " + std::to_string(kPointsPerTooth) +
                                                  " points, got " + std::to_string(t.points.size()));
    }
    if (!all_finite(t.points)) throw Error(ErrorCode::SchemaViolation, path + ".points: non-finite coordinate");
    if (t.gt_points) {
      any_gt = true;
      if (t.gt_points->size() != kPointsPerTooth) {
        throw Error(ErrorCode::WrongPointCount, path + ".gt_points: expected " + std::to_string(kPointsPerTooth) +
                                                    " points, got " + std::to_string(t.gt_points->size()));
      }
      if (!all_finite(*t.gt_points)) {
        throw Error(ErrorCode::SchemaViolation, path + ".gt_points: non-finite coordinate");
      }
    } else {
      any_present_without_gt = true;
    }
  }
  if (!has_present) throw Error(ErrorCode::SchemaViolation, "$." + name + ": no present tooth");
}

}  // namespace

void validate_case(const Case& c) {
  if (c.upper.side != JawSide::upper || c.lower.side != JawSide::lower) {
    throw Error(ErrorCode::SchemaViolation, "$: jaw sides mislabeled");
  }
  bool any_gt = false;
  bool missing_gt = false;
  validate_jaw(c.upper, "upper", any_gt, missing_gt);
  validate_jaw(c.lower, "lower", any_gt, missing_gt);
  if (any_gt && missing_gt) {
    throw Error(ErrorCode::SchemaViolation, "$: gt_points must be set on every present tooth of a training pair");
  }
}

Case tooth_assembler(const Case& c, const TransformMap& transforms) {
  for (const auto& [id, t] : transforms) {
    const Tooth* tooth = c.find(id);
    if (tooth == nullptr || !tooth->present) {
      throw Error(ErrorCode::TransformForAbsentTooth, "transform given for absent tooth " + std::to_string(id.value()));
    }
  }
  Case out = c;
  for (Jaw* j : {&out.upper, &out.lower}) {
    for (Tooth& t : j->teeth) {
      if (!t.present || !t.moved) continue;
      auto it = transforms.find(t.id);
      if (it == transforms.end()) {
        throw Error(ErrorCode::MissingTransform, "no transform for moved tooth " + std::to_string(t.id.value()));
      }
      t.points = apply_transform(it->second, t.points);
    }
  }
  return out;
}

TransformMap recover_transforms(const Case& from, const Case& to) {
  TransformMap out;
  for (const Jaw* j : {&from.upper, &from.lower}) {
    for (const Tooth* t : j->present()) {
      const Tooth* other = to.find(t->id);
      if (other == nullptr || !other->present || other->points.size() != t->points.size()) {
        throw Error(ErrorCode::CorrespondenceMismatch,
                    "tooth " + std::to_string(t->id.value()) + " has no counterpart");
      }
      out.emplace(t->id, kabsch_recover(t->points, other->points));
    }
  }
  return out;
}

TransformMap recover_transforms(const Case& pair) {
  TransformMap out;
  for (const Jaw* j : {&pair.upper, &pair.lower}) {
    for (const Tooth* t : j->present()) {
      if (!t->gt_points) {
        throw Error(ErrorCode::CorrespondenceMismatch,
                    "tooth " + std::to_string(t->id.value()) + " has no ground truth");
      }
      if (!t->moved) {
        RigidTransform id;
        id.pivot = t->center();
        out.emplace(t->id, id);
      } else {
        out.emplace(t->id, kabsch_recover(t->points, *t->gt_points));
      }
    }
  }
  return out;
}

std::string_view ordering_name(OrderingMode m) {
  switch (m) {
    case OrderingMode::arch_line: return "arch_line";
    case OrderingMode::local_z: return "local_z";
    case OrderingMode::center_distance: return "center_distance";
    case OrderingMode::random: return "random";
  }
  return "unknown";
}

OrderingMode parse_ordering(std::string_view name) {
  for (auto m : {OrderingMode::arch_line, OrderingMode::local_z, OrderingMode::center_distance, OrderingMode::random}) {
    if (ordering_name(m) == name) return m;
  }
  throw Error(ErrorCode::ConfigError, "unknown ordering '" + std::string(name) + "'");
}

Vec3 mouth_center(const Case& c) {
  std::vector<Vec3> centers;
  for (const Jaw* j : {&c.upper, &c.lower})
    for (const Tooth* t : j->present()) centers.push_back(t->center());
  return centroid(centers);
}

ToothPointImage normalize_image(const ToothPointImage& img, const Vec3& center) {
  ToothPointImage out = img;
  for (std::size_t r = 0; r < ToothPointImage::rows; ++r) {
    if (!img.presence_mask[r]) continue;
    for (std::size_t c = 0; c < ToothPointImage::cols; ++c)
      for (std::size_t ch = 0; ch < 3; ++ch) out.at(r, c, ch) = (img.at(r, c, ch) - center[ch]) / kImageScaleMm;
  }
  return out;
}

}  // namespace toothalign
