#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "toothalign/geometry.hpp"

namespace toothalign {

inline constexpr std::size_t kPointsPerTooth = 512;
inline constexpr std::size_t kToothSlots = 32;
inline constexpr double kDefaultProxyRadius = 0.25;
/// Largest admissible gap between neighbouring crowns, mm.
inline constexpr double kDefaultGapThreshold = 2.35;

enum class JawSide { upper, lower };

/// Universal tooth number: 1-16 upper, 17-32 lower.
class ToothId {
 public:
  /// Throws InvalidArgument outside 1..32.
  explicit ToothId(int index);

  int value() const { return index_; }
  /// Row of the tooth point image (0..31).
  std::size_t row() const { return static_cast<std::size_t>(index_ - 1); }
  JawSide side() const { return index_ <= 16 ? JawSide::upper : JawSide::lower; }
  /// Canine-to-canine: 6-11 and 22-27.
  bool anterior() const { return (index_ >= 6 && index_ <= 11) || (index_ >= 22 && index_ <= 27); }
  bool posterior() const { return !anterior(); }

  friend auto operator<=>(const ToothId&, const ToothId&) = default;

 private:
  int index_;
};

struct Tooth {
  ToothId id{1};
  bool present = true;
  bool moved = true;
  std::vector<Vec3> points;                    // pre-orthodontic (or the only) geometry
  std::optional<std::vector<Vec3>> gt_points;  // ground truth, index-aligned with points
  double proxy_radius = kDefaultProxyRadius;

  Vec3 center() const { return centroid(points); }
};

struct Jaw {
  JawSide side = JawSide::upper;
  std::vector<Tooth> teeth;  // kept sorted by id

  const Tooth* find(ToothId id) const;
  Tooth* find(ToothId id);
  /// Present teeth in anatomical order (ascending id).
  std::vector<const Tooth*> present() const;
};

struct Case {
  std::string id;
  Jaw upper{JawSide::upper, {}};
  Jaw lower{JawSide::lower, {}};

  const Jaw& jaw(JawSide s) const { return s == JawSide::upper ? upper : lower; }
  Jaw& jaw(JawSide s) { return s == JawSide::upper ? upper : lower; }
  const Tooth* find(ToothId id) const { return jaw(id.side()).find(id); }
  Tooth* find(ToothId id) { return jaw(id.side()).find(id); }

  bool is_training_pair() const;
  /// Copy whose `points` are the ground truth (gt_points dropped). Teeth
  /// without ground truth keep their points.
  Case ground_truth_view() const;
  /// Copy without ground truth.
  Case pre_view() const;
};

/// Checks every type invariant; throws SchemaViolation / WrongPointCount /
/// DuplicateTooth with a JSON-style field path.
void validate_case(const Case& c);

using TransformMap = std::map<ToothId, RigidTransform>;

/// Moved teeth are replaced by their transformed points; static teeth are
/// left as they are even if a transform is supplied.
Case tooth_assembler(const Case& c, const TransformMap& transforms);

/// Per-tooth transforms mapping `points` onto `gt_points` for every present
/// tooth of a training pair (identity for static teeth).
TransformMap recover_transforms(const Case& pair);

/// Per-tooth transforms mapping each present tooth of `from` onto the same
/// tooth of `to`.
TransformMap recover_transforms(const Case& from, const Case& to);

// ---------------------------------------------------------------------------
// Tooth point image

enum class OrderingMode { arch_line, local_z, center_distance, random };

std::string_view ordering_name(OrderingMode m);
/// Throws ConfigError for unknown names.
OrderingMode parse_ordering(std::string_view name);

class ArchLine;

struct JawArches {
  const ArchLine* upper = nullptr;
  const ArchLine* lower = nullptr;
};

struct ToothPointImage {
  static constexpr std::size_t rows = kToothSlots;
  static constexpr std::size_t cols = kPointsPerTooth;
  static constexpr std::size_t channels = 3;

  std::vector<double> data = std::vector<double>(rows * cols * channels, 0.0);
  std::array<bool, rows> presence_mask{};

  double& at(std::size_t r, std::size_t c, std::size_t ch) { return data[(r * cols + c) * channels + ch]; }
  double at(std::size_t r, std::size_t c, std::size_t ch) const { return data[(r * cols + c) * channels + ch]; }
};

struct ImageOptions {
  std::uint64_t seed = 0;  // random ordering only
  bool labial_positive = true;
};

ToothPointImage build_tooth_point_image(const Case& c, OrderingMode ordering,
                                        const std::optional<JawArches>& arches,
                                        const ImageOptions& opts = {});

/// Whole-mouth centroid of present tooth centroids.
Vec3 mouth_center(const Case& c);

inline constexpr double kImageScaleMm = 40.0;

/// Translate by `center`, divide by kImageScaleMm. Masked rows stay zero.
ToothPointImage normalize_image(const ToothPointImage& img, const Vec3& center);

// ---------------------------------------------------------------------------
// I/O

/// Strict JSON reader; every invariant validated.
Case case_from_json_text(const std::string& text);
std::string case_to_json_text(const Case& c);
Case load_case(const std::filesystem::path& path);
void save_case(const Case& c, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic jaws

struct SynthParams {
  int teeth_per_jaw = 14;           // 8..16, centred on the midline
  double arch_width = 56.0;         // parabola y = depth * (1 - (2x / width)^2), mm
  double arch_depth = 46.0;
  double crown_width_min = 4.6;     // mesio-distal crown size range, mm
  double crown_width_max = 6.4;
  double gap_min = 0.8;             // spacing between neighbouring crowns, mm
  double gap_max = 1.4;
  double misalign_rotation_deg = 8.0;
  double misalign_translation_std = 0.5;
  double static_fraction = 0.15;    // share of teeth left unmoved
  std::size_t dense_points = 1536;  // surface samples before FPS
  double proxy_radius = kDefaultProxyRadius;
};

struct SyntheticCase {
  Case c;
  TransformMap pre_to_gt;  // oracle transforms, pivot = pre centroid
};

/// Throws InfeasibleParams when the crowns do not fit on the arch or the
/// ground-truth jaws violate the spacing constraints.
SyntheticCase generate_synthetic_case(const SynthParams& params, std::uint64_t seed);

}  // namespace toothalign
