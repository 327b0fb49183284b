#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace toothalign {

/// Point or displacement in millimetres.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr Vec3 operator/(const Vec3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

  double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
constexpr double squared_norm(const Vec3& a) { return dot(a, a); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }
Vec3 normalized(const Vec3& a);

using Mat3 = std::array<std::array<double, 3>, 3>;

Vec3 operator*(const Mat3& m, const Vec3& v);
Mat3 transpose(const Mat3& m);

/// Unit quaternion (w, x, y, z), canonicalized to w >= 0. When w == 0 the
/// first nonzero vector component is made positive so the representative of
/// the double cover is unique.
class UnitQuaternion {
 public:
  UnitQuaternion() = default;

  /// Normalizes and canonicalizes arbitrary (nonzero) components.
  static UnitQuaternion from_components(double w, double x, double y, double z);
  static UnitQuaternion identity() { return {}; }

  double w() const { return c_[0]; }
  double x() const { return c_[1]; }
  double y() const { return c_[2]; }
  double z() const { return c_[3]; }
  const std::array<double, 4>& components() const { return c_; }
  double operator[](std::size_t i) const { return c_[i]; }

  Mat3 to_matrix() const;
  Vec3 rotate(const Vec3& v) const;
  UnitQuaternion conjugate() const;

  friend UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b);
  friend bool operator==(const UnitQuaternion&, const UnitQuaternion&) = default;

 private:
  std::array<double, 4> c_{1.0, 0.0, 0.0, 0.0};
};

struct AxisAngle {
  Vec3 axis{1.0, 0.0, 0.0};  // unit length
  double angle = 0.0;        // radians, [0, pi]

  /// Builds a valid axis-angle from any axis and signed angle; a negative
  /// angle flips the axis, angles beyond pi wrap.
  static AxisAngle make(const Vec3& axis, double angle);
};

UnitQuaternion quat_from_axis_angle(const AxisAngle& a);
AxisAngle axis_angle_from_quat(const UnitQuaternion& q);

/// Rotation matrix from raw (not necessarily unit) quaternion components;
/// equals the matrix of the normalized quaternion.
Mat3 rotation_matrix_from_raw(const std::array<double, 4>& q);

/// Geodesic angle between two rotations, in [0, pi]; sign-invariant.
double rotation_angle_between(const UnitQuaternion& q1, const UnitQuaternion& q2);

/// p -> R (p - pivot) + pivot + translation
struct RigidTransform {
  UnitQuaternion rotation;
  Vec3 translation;
  Vec3 pivot;

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const;
  RigidTransform inverse() const;
};

std::vector<Vec3> apply_transform(const RigidTransform& t, std::span<const Vec3> pts);

/// Throws EmptyCloud on empty input.
Vec3 centroid(std::span<const Vec3> pts);

/// Greedy farthest point sampling. Each step picks the unselected point with
/// the largest distance to the selected set; ties go to the lowest index.
std::vector<std::size_t> fps_sample(std::span<const Vec3> pts, std::size_t n, std::size_t start_index);

/// Index of the point farthest from the cloud centroid (lowest index on ties).
std::size_t farthest_from_centroid(std::span<const Vec3> pts);

/// Least-squares rigid transform mapping src onto dst, pivot = centroid(src).
/// Throws DegenerateCloud for fewer than three points or collinear input.
RigidTransform kabsch_recover(std::span<const Vec3> src, std::span<const Vec3> dst);

/// Structure-of-arrays copy of a cloud, the layout the SIMD kernels consume.
struct PointsSoA {
  std::vector<double> xs, ys, zs;

  PointsSoA() = default;
  explicit PointsSoA(std::span<const Vec3> pts);
  std::size_t size() const { return xs.size(); }
};

/// Squared distance from q to the nearest point of the cloud (+inf if empty).
double min_distance2(const Vec3& q, const PointsSoA& cloud);
/// Same, measured in the XY plane.
double min_distance2_xy(double qx, double qy, const PointsSoA& cloud);

}  // namespace toothalign
