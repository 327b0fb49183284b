#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "toothalign/case_model.hpp"
#include "toothalign/geometry.hpp"

namespace toothalign {

struct ArchProjection {
  double s = 0.0;      // arc length of the foot point, mm (negative / beyond length on the extensions)
  Vec3 point;          // foot point on the curve
  Vec3 tangent;        // unit tangent at the foot point
  double distance = 0.0;
};

/// Piecewise cubic Hermite curve through tooth centres with Catmull-Rom
/// tangents, parameterized by arc length. Both ends continue as straight
/// tangent extensions of `extension` mm so teeth at the ends of the row can
/// still be projected and moved outward.
class ArchLine {
 public:
  static constexpr std::size_t kSubIntervals = 32;  // per segment, arc-length table
  static constexpr std::size_t kProjectionSamples = 64;
  static constexpr double kDefaultExtension = 15.0;

  /// `midline_s`: arc length of the jaw midline; defaults to the middle of the
  /// curve. Throws TooFewTeeth for fewer than two knots.
  static ArchLine from_knots(std::vector<Vec3> knots, std::optional<double> midline_s = std::nullopt,
                             double extension = kDefaultExtension);

  const std::vector<Vec3>& knots() const { return knots_; }
  const std::vector<Vec3>& tangents() const { return tangents_; }
  std::size_t segments() const { return knots_.size() - 1; }

  /// Curve at global parameter u in [0, segments()]; knot k sits at u = k.
  Vec3 evaluate(double u) const;
  Vec3 derivative(double u) const;

  double length() const { return cumulative_.back(); }
  double extension() const { return extension_; }
  double midline() const { return midline_; }

  /// Arc length from the first knot to parameter u.
  double arclength_at(double u) const;
  /// Inverse of arclength_at for s in [0, length()].
  double param_at_arclength(double s) const;
  double knot_arclength(std::size_t k) const { return cumulative_[k]; }
  /// Cumulative arc length at every sub-interval boundary (strictly increasing).
  const std::vector<double>& arclength_table() const { return table_; }

  /// Defined on [-extension, length + extension]; throws ArchOverrun outside.
  Vec3 point_at_arclength(double s) const;
  Vec3 tangent_at_arclength(double s) const;
  /// Unit in-plane normal pointing to the labial (outer) side.
  Vec3 outward_normal(double s) const;

  /// Nearest point over the curve and its extensions.
  ArchProjection project(const Vec3& p) const;

 private:
  void hermite(std::size_t seg, double t, Vec3* pos, Vec3* d1, Vec3* d2) const;
  double speed(std::size_t seg, double t) const;
  double segment_arclength(std::size_t seg, double t) const;
  std::size_t segment_of(double u, double* t) const;
  void refine(std::size_t seg, const Vec3& p, double& t, double& d2) const;

  std::vector<Vec3> knots_;
  std::vector<Vec3> tangents_;
  std::vector<double> cumulative_;  // arc length at each knot
  std::vector<double> table_;       // arc length at every sub-interval boundary
  double extension_ = kDefaultExtension;
  double midline_ = 0.0;
  double orientation_ = 1.0;  // +1 when z x tangent already points labially
};

/// Fits the arch through the centroids of the present teeth in id order.
/// The midline sits halfway (in arc length) between the last tooth left of
/// the jaw centre and the first tooth right of it.
ArchLine fit_arch_line(const Jaw& jaw);

/// Distance to the curve, positive on the labial side unless `labial_positive`
/// is false.
double signed_arch_distance(const ArchLine& arch, const Vec3& p, bool labial_positive = true);

/// Arc length from the midline to the foot point of p (always >= 0).
double distance_from_midline(const ArchLine& arch, const Vec3& p);

/// Projects p, advances the foot point by |delta| along the curve (+ away from
/// the midline, - toward it) and re-applies p's offset in the local frame.
/// Throws ArchOverrun when the new foot point leaves the curve domain.
Vec3 move_along_arch(const ArchLine& arch, const Vec3& p, double delta);

/// `n` points at uniform arc length over [0, length()].
std::vector<Vec3> arch_polyline(const ArchLine& arch, std::size_t n = 256);

// ---------------------------------------------------------------------------
// Point orderings. Each returns a permutation of 0..n-1; ties go to the lower
// index.

std::vector<std::size_t> serialize_points(std::span<const Vec3> pts, const ArchLine& arch,
                                          bool labial_positive = true);
std::vector<std::size_t> order_local_z(std::span<const Vec3> pts);
std::vector<std::size_t> order_center_distance(std::span<const Vec3> pts, const Vec3& mouth_center);
std::vector<std::size_t> order_random(std::size_t n, std::uint64_t seed);

}  // namespace toothalign
