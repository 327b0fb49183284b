#include "toothalign/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <numbers>

#include "toothalign/errors.hpp"
#include "toothalign/kernels.hpp"

namespace toothalign {

Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  if (n == 0.0) throw Error(ErrorCode::InvalidArgument, "cannot normalize a zero vector");
  return a / n;
}

Vec3 operator*(const Mat3& m, const Vec3& v) {
  return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z, m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
          m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

Mat3 transpose(const Mat3& m) {
  Mat3 t{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t[i][j] = m[j][i];
  return t;
}

// ---------------------------------------------------------------------------
// UnitQuaternion

UnitQuaternion UnitQuaternion::from_components(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::InvalidArgument, "quaternion components must be finite and nonzero");
  }
  UnitQuaternion q;
  q.c_ = {w / n, x / n, y / n, z / n};
  bool flip = q.c_[0] < 0.0;
  if (q.c_[0] == 0.0) {
    for (int i = 1; i < 4; ++i) {
      if (q.c_[i] != 0.0) {
        flip = q.c_[i] < 0.0;
        break;
      }
    }
  }
  if (flip) {
    for (double& c : q.c_) c = -c;
  }
  q.c_[0] = q.c_[0] == 0.0 ? 0.0 : q.c_[0];  // no -0
  return q;
}

Mat3 UnitQuaternion::to_matrix() const { return rotation_matrix_from_raw(c_); }

Vec3 UnitQuaternion::rotate(const Vec3& v) const { return to_matrix() * v; }

UnitQuaternion UnitQuaternion::conjugate() const { return from_components(w(), -x(), -y(), -z()); }

UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b) {
  return UnitQuaternion::from_components(a.w() * b.w() - a.x() * b.x() - a.y() * b.y() - a.z() * b.z(),
                                         a.w() * b.x() + a.x() * b.w() + a.y() * b.z() - a.z() * b.y(),
                                         a.w() * b.y() - a.x() * b.z() + a.y() * b.w() + a.z() * b.x(),
                                         a.w() * b.z() + a.x() * b.y() - a.y() * b.x() + a.z() * b.w());
}

Mat3 rotation_matrix_from_raw(const std::array<double, 4>& q) {
  const auto [w, x, y, z] = q;
  const double s = w * w + x * x + y * y + z * z;
  Mat3 m{};
  m[0] = {(w * w + x * x - y * y - z * z) / s, 2.0 * (x * y - w * z) / s, 2.0 * (x * z + w * y) / s};
  m[1] = {2.0 * (x * y + w * z) / s, (w * w - x * x + y * y - z * z) / s, 2.0 * (y * z - w * x) / s};
  m[2] = {2.0 * (x * z - w * y) / s, 2.0 * (y * z + w * x) / s, (w * w - x * x - y * y + z * z) / s};
  return m;
}

// ---------------------------------------------------------------------------
// Axis-angle

AxisAngle AxisAngle::make(const Vec3& axis, double angle) {
  AxisAngle a;
  a.axis = normalized(axis);
  double t = std::remainder(angle, 2.0 * std::numbers::pi);  // (-pi, pi]
  if (t < 0.0) {
    t = -t;
    a.axis = -a.axis;
  }
  a.angle = t;
  return a;
}

UnitQuaternion quat_from_axis_angle(const AxisAngle& a) {
  const double h = 0.5 * a.angle;
  const double s = std::sin(h);
  return UnitQuaternion::from_components(std::cos(h), s * a.axis.x, s * a.axis.y, s * a.axis.z);
}

AxisAngle axis_angle_from_quat(const UnitQuaternion& q) {
  const Vec3 v{q.x(), q.y(), q.z()};
  const double vn = norm(v);
  AxisAngle a;
  if (vn == 0.0) return a;  // identity: axis is arbitrary
  a.axis = v / vn;
  a.angle = 2.0 * std::atan2(vn, q.w());
  return a;
}

double rotation_angle_between(const UnitQuaternion& q1, const UnitQuaternion& q2) {
  const auto& a = q1.components();
  const auto& b = q2.components();
  // relative rotation conj(q1) * q2
  const double w = a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
  const double x = a[0] * b[1] - a[1] * b[0] - a[2] * b[3] + a[3] * b[2];
  const double y = a[0] * b[2] + a[1] * b[3] - a[2] * b[0] - a[3] * b[1];
  const double z = a[0] * b[3] - a[1] * b[2] + a[2] * b[1] - a[3] * b[0];
  return 2.0 * std::atan2(std::sqrt(x * x + y * y + z * z), std::abs(w));
}

// ---------------------------------------------------------------------------
// Rigid transforms

Vec3 RigidTransform::apply(const Vec3& p) const {
  if (rotation == UnitQuaternion::identity()) return p + translation;
  return rotation.to_matrix() * (p - pivot) + pivot + translation;
}

RigidTransform RigidTransform::inverse() const {
  return {rotation.conjugate(), -translation, pivot + translation};
}

std::vector<Vec3> apply_transform(const RigidTransform& t, std::span<const Vec3> pts) {
  if (t.rotation == UnitQuaternion::identity()) {
    // exact: p + t, no detour through the pivot
    std::vector<Vec3> out(pts.begin(), pts.end());
    if (t.translation != Vec3{})
      for (Vec3& p : out) p += t.translation;
    return out;
  }
  const Mat3 r = t.rotation.to_matrix();
  const Vec3 offset = t.pivot + t.translation;
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const Vec3& p : pts) out.push_back(r * (p - t.pivot) + offset);
  return out;
}

Vec3 centroid(std::span<const Vec3> pts) {
  if (pts.empty()) throw Error(ErrorCode::EmptyCloud, "centroid of an empty cloud");
  Vec3 sum;
  for (const Vec3& p : pts) sum += p;
  return sum / static_cast<double>(pts.size());
}

// ---------------------------------------------------------------------------
// Sampling

PointsSoA::PointsSoA(std::span<const Vec3> pts) {
  xs.reserve(pts.size());
  ys.reserve(pts.size());
  zs.reserve(pts.size());
  for (const Vec3& p : pts) {
    xs.push_back(p.x);
    ys.push_back(p.y);
    zs.push_back(p.z);
  }
}

double min_distance2(const Vec3& q, const PointsSoA& cloud) {
  return kernels::active().min_dist2_3d(q.x, q.y, q.z, cloud.xs.data(), cloud.ys.data(), cloud.zs.data(),
                                        cloud.size());
}

double min_distance2_xy(double qx, double qy, const PointsSoA& cloud) {
  return kernels::active().min_dist2_2d(qx, qy, cloud.xs.data(), cloud.ys.data(), cloud.size());
}

std::vector<std::size_t> fps_sample(std::span<const Vec3> pts, std::size_t n, std::size_t start_index) {
  if (n > pts.size()) {
    throw Error(ErrorCode::InsufficientPoints,
                "requested " + std::to_string(n) + " samples from " + std::to_string(pts.size()) + " points");
  }
  if (n == 0) return {};
  if (start_index >= pts.size()) throw Error(ErrorCode::InvalidArgument, "fps start index out of range");

  const PointsSoA soa(pts);
  const auto& k = kernels::active();
  std::vector<double> mind(pts.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> picked;
  picked.reserve(n);

  std::size_t current = start_index;
  for (;;) {
    picked.push_back(current);
    mind[current] = -1.0;  // stays below any distance, so never picked again
    if (picked.size() == n) break;
    const Vec3& q = pts[current];
    k.update_min_dist2(q.x, q.y, q.z, soa.xs.data(), soa.ys.data(), soa.zs.data(), soa.size(), mind.data());
    std::size_t best = 0;
    double best_d = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mind.size(); ++i) {
      if (mind[i] > best_d) {
        best_d = mind[i];
        best = i;
      }
    }
    current = best;
  }
  return picked;
}

std::size_t farthest_from_centroid(std::span<const Vec3> pts) {
  const Vec3 c = centroid(pts);
  std::size_t best = 0;
  double best_d = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = squared_norm(pts[i] - c);
    if (d > best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Kabsch

RigidTransform kabsch_recover(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size()) {
    throw Error(ErrorCode::InvalidArgument, "kabsch: clouds differ in size");
  }
  if (src.size() < 3) throw Error(ErrorCode::DegenerateCloud, "kabsch needs at least three points");

  const Vec3 cs = centroid(src);
  const Vec3 cd = centroid(dst);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec3 a = src[i] - cs;
    const Vec3 b = dst[i] - cd;
    const Eigen::Vector3d ea(a.x, a.y, a.z);
    cov += ea * Eigen::Vector3d(b.x, b.y, b.z).transpose();
    scatter += ea * ea.transpose();
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
  const Eigen::Vector3d ev = es.eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
    throw Error(ErrorCode::DegenerateCloud, "kabsch: source cloud is collinear or coincident");
  }

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix3d r = v * d * u.transpose();
  const Eigen::Quaterniond q(r);

  RigidTransform t;
  t.rotation = UnitQuaternion::from_components(q.w(), q.x(), q.y(), q.z());
  t.pivot = cs;
  t.translation = cd - cs;
  return t;
}

}  // namespace toothalign
