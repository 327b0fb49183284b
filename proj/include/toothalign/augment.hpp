#pragma once

#include <cstdint>
#include <vector>

#include "toothalign/arch.hpp"
#include "toothalign/case_model.hpp"

namespace toothalign {

struct AugmentConfig {
  double rot_range = 10.0;  // degrees
  double trans_mu = 0.0;    // mm
  double trans_sigma = 0.3;  // mm
  double gap_threshold = kDefaultGapThreshold;
  double arch_dist_min = 0.0;  // |signed arch distance| of tooth centroids, mm
  double arch_dist_max = 2.2;
  double constraint_ratio = 0.54;
  double ordinary_prob = 0.62;
  int max_collision_iters = 10;

  /// Throws ConfigError.
  void validate() const;
};

struct CollisionPair {
  ToothId a{1};
  ToothId b{1};  // a < b
  double penetration = 0.0;
};

struct CollisionReport {
  std::vector<CollisionPair> pairs;
  bool empty() const { return pairs.empty(); }
};

/// Rotation about the tooth centroid by an angle uniform in
/// [-rot_range, rot_range] around a uniform axis; translation components
/// i.i.d. normal(trans_mu, trans_sigma).
RigidTransform perturb_tooth(const Tooth& tooth, std::uint64_t seed, const AugmentConfig& config);

/// True iff some a in A and b in B satisfy |a - b| < r_A + r_B.
bool teeth_collide(const Tooth& a, const Tooth& b);

/// Every colliding pair of present teeth, ordered by (a, b).
CollisionReport detect_collisions(const Jaw& jaw);

/// Overlap extent of the interlocking points of A and B measured along the
/// line joining the tooth centroids, including both proxy radii. Throws
/// NoCollision when no point of either tooth is inside the other's proxy.
double penetration_distance(const Tooth& a, const Tooth& b);

struct ToothGap {
  ToothId a{1};
  ToothId b{1};
  double gap = 0.0;  // nearest point-pair distance, mm
};

/// Gaps between consecutive present teeth in id order.
std::vector<ToothGap> adjacent_gaps(const Jaw& jaw);

/// Rigidly translates every point of the tooth so its centroid moves along
/// the arch by delta (+ away from the midline).
void shift_tooth_along_arch(Tooth& tooth, const ArchLine& arch, double delta);

/// Pulls centroids back within arch_dist_max of the arch, then walks outward
/// from the central incisors closing gaps above gap_threshold by moving the
/// distal tooth toward the midline. Teeth are translated only.
Jaw jaw_regularize(const Jaw& jaw, const ArchLine& arch, const AugmentConfig& config);

struct ResolveResult {
  Jaw jaw;
  int iterations = 0;
};

/// Each round moves, for every colliding pair, the tooth farther from the
/// midline outward along the arch by the pair's penetration. Throws
/// CollisionUnresolved when collisions remain after max_collision_iters rounds.
ResolveResult resolve_collisions(const Jaw& jaw, const ArchLine& arch, const AugmentConfig& config);

struct ConstraintReport {
  std::size_t collisions = 0;
  std::size_t gap_violations = 0;
  std::size_t arch_violations = 0;
  double max_gap = 0.0;
  double max_arch_distance = 0.0;

  bool ok() const { return collisions == 0 && gap_violations == 0 && arch_violations == 0; }
};

ConstraintReport check_constraints(const Jaw& jaw, const ArchLine& arch, const AugmentConfig& config);

struct AugmentResult {
  Case c;
  TransformMap perturbations;  // sampled per-tooth perturbation of the ground truth
  int iterations = 0;          // collision rounds, max over the two jaws
  double max_rotation_deg = 0.0;
  ConstraintReport upper;
  ConstraintReport lower;
};

/// Simulates a pre-treatment state from ground truth: perturb, regularize,
/// resolve collisions, repeated until every constraint holds. The ground
/// truth of the output is the input ground truth, bit for bit. Throws
/// ConstraintsUnsatisfiable if the passes keep undoing each other.
AugmentResult constrained_augment_case(const Case& gt_case, std::uint64_t seed, const AugmentConfig& config);

struct OrdinaryResult {
  Case c;
  bool triggered = false;
};

/// With probability ordinary_prob perturbs the pre-treatment points of every
/// moved tooth; labels are untouched.
OrdinaryResult ordinary_augment(const Case& c, std::uint64_t seed, const AugmentConfig& config);

}  // namespace toothalign
