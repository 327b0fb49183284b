#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "toothalign/case_model.hpp"

namespace toothalign {

struct LossWeights {
  double delta0 = 1.0;  // L_recon
  double delta1 = 1.0;  // L_fit
  double delta2 = 1.0;  // L_uni
  double delta3 = 1.0;  // L_val
  double omega = 10.0;  // rotation amplifier inside L_val
  double w_pior = 2.0;
  double omega_ant = 1.0 / std::numbers::pi;
  double tau = 0.07;   // mm
  double max_t = 4.5;  // mm

  /// Throws ConfigError.
  void validate() const;
};

/// Per-tooth pose parameters: raw quaternion (w, x, y, z), any nonzero norm,
/// and translation in mm. The rotation pivot is fixed per tooth.
struct Pose {
  std::array<double, 4> q{1.0, 0.0, 0.0, 0.0};
  Vec3 t;
};
using PoseMap = std::map<ToothId, Pose>;
using PoseGradient = std::map<ToothId, std::array<double, 7>>;  // d/dq (4), d/dt (3)

struct ValueGrad {
  double value = 0.0;
  PoseGradient grad;
};

Pose pose_of(const RigidTransform& t);

struct LossBreakdown {
  double l_recon = 0.0;
  double l_rotate = 0.0;
  double l_trans = 0.0;
  double l_val = 0.0;
  double l_fit = 0.0;
  double l_uni_ant = 0.0;
  double l_uni_pior = 0.0;
  double l_uni = 0.0;
  double total = 0.0;
  /// delta0 * grad L_recon + delta3 * grad L_val (pose route only)
  std::optional<PoseGradient> gradients;
};

// ---------------------------------------------------------------------------
// Reconstruction

/// sum_i |p_i - q_i|^2 + |centroid(p) - centroid(q)|^2
double recon_tooth_loss(std::span<const Vec3> pred, std::span<const Vec3> gt);

/// Sum over present, moved teeth of `gt` (points fields of both cases).
double recon_loss(const Case& pred, const Case& gt);

/// Reconstruction of a training pair posed by `pred`; each tooth rotates about
/// its pre-treatment centroid. Gradient w.r.t. the raw pose parameters.
ValueGrad recon_loss(const Case& pair, const PoseMap& pred);

// ---------------------------------------------------------------------------
// Rotation / translation

struct Enhancement {
  double rotate = 1.0;
  double trans = 1.0;
};
using EnhancementMap = std::map<ToothId, Enhancement>;

Enhancement enhancement_weight(const RigidTransform& gt, double max_t);
/// nullopt (test mode): every weight is 1.
EnhancementMap enhancement_weights(const std::optional<TransformMap>& gt, const std::vector<ToothId>& teeth,
                                   double max_t);

struct RotTransLoss {
  double l_rotate = 0.0;
  double l_trans = 0.0;
  double l_val = 0.0;
  PoseGradient grad;  // of l_val w.r.t. the raw pred parameters
};

/// L1 over the quaternion and translation components, each scaled by
/// (1 + zeta); L_val = omega * L_rotate + L_trans. sign(0) = 0.
RotTransLoss rot_trans_loss(const PoseMap& pred, const TransformMap& gt, const LossWeights& w,
                            const EnhancementMap& zeta);

// ---------------------------------------------------------------------------
// Occlusal projecting overlap

using OverlapMask = std::vector<std::uint8_t>;

/// Opposing present teeth whose XY boxes, dilated by tau, meet the tooth's XY box.
std::vector<ToothId> opposing_region(const Tooth& tooth, const Jaw& opposing, double tau);

/// Flag i set iff the XY distance from point i to the nearest opposing point
/// is strictly below tau. Empty opposing set gives an all-zero mask.
OverlapMask occlusal_overlap_mask(std::span<const Vec3> tooth, std::span<const Vec3> opposing, double tau);

/// Mask of a tooth within its case.
OverlapMask tooth_overlap_mask(const Case& c, const Tooth& tooth, double tau);

std::size_t mask_hamming(const OverlapMask& a, const OverlapMask& b);

/// Mean Hamming distance between predicted and true masks over present moved
/// teeth whose opposing region is nonempty in either case.
double overlap_consistency_loss(const Case& pred, const Case& gt, double tau);

// ---------------------------------------------------------------------------
// Occlusal distance uniformity

/// Population variance (0 for fewer than two values).
double population_variance(std::span<const double> v);

/// For every in-mask point of the tooth, the 3D distance to the nearest
/// opposing point that lies within tau of the tooth in XY.
std::vector<double> occlusal_distances(std::span<const Vec3> tooth, std::span<const Vec3> opposing, double tau);

double posterior_uniformity_loss(const Case& pred, double tau);

struct AnteriorLoss {
  double l_ant1 = 0.0;
  double l_ant2 = 0.0;
  double l_ant = 0.0;
};

/// Extreme crown point along the occlusal axis: max z (lower), min z (upper).
Vec3 incisal_peak(const Tooth& tooth);

AnteriorLoss anterior_uniformity_loss(const Case& pred, const Case& gt, double omega_ant);

double uniformity_loss(double l_ant, double l_pior, const LossWeights& w);

// ---------------------------------------------------------------------------
// Totals

/// All terms from geometry. Rotation/translation parameters of both pred and
/// gt are recovered against the common pre-treatment reference `pre`.
/// `train_mode` selects enhancement weights from the gt transforms.
LossBreakdown total_loss(const Case& pred, const Case& gt, const Case& pre, const LossWeights& w,
                         bool train_mode = true);

/// Smooth terms of a posed training pair with gradients: delta0 * L_recon +
/// delta3 * L_val. Mask terms are evaluated on the posed geometry.
LossBreakdown total_loss(const Case& pair, const PoseMap& pred, const LossWeights& w, bool train_mode = true);

/// Case whose moved teeth are posed by `pred` (pivot = pre centroid).
Case apply_poses(const Case& pair, const PoseMap& pred);

// ---------------------------------------------------------------------------
// Gradient verification

using PoseLossFn = std::function<ValueGrad(const PoseMap&)>;

PoseGradient finite_difference_gradient(const PoseLossFn& fn, const PoseMap& at, double h);

/// Max over all parameters of |analytic - numeric| / max(1, |analytic|, |numeric|).
double grad_check(const PoseLossFn& fn, const PoseMap& at, double h = 1e-5);

}  // namespace toothalign
