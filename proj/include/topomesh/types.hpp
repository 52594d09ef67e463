#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace topomesh {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat23 = Eigen::Matrix<double, 2, 3>;

// Quaternions are stored (w, x, y, z).
using Quat = Vec4;

inline Quat quat_identity() { return Quat(1.0, 0.0, 0.0, 0.0); }

inline Quat quat_conjugate(const Quat& q) { return Quat(q[0], -q[1], -q[2], -q[3]); }

inline Quat quat_mul(const Quat& a, const Quat& b) {
  const double w = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3];
  const double x = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2];
  const double y = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1];
  const double z = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0];
  return Quat(w, x, y, z);
}

// a ⊗ b == quat_left_matrix(a) * b
inline Mat4 quat_left_matrix(const Quat& q) {
  Mat4 m;
  m << q[0], -q[1], -q[2], -q[3],
       q[1],  q[0], -q[3],  q[2],
       q[2],  q[3],  q[0], -q[1],
       q[3], -q[2],  q[1],  q[0];
  return m;
}

// a ⊗ b == quat_right_matrix(b) * a
inline Mat4 quat_right_matrix(const Quat& q) {
  Mat4 m;
  m << q[0], -q[1], -q[2], -q[3],
       q[1],  q[0],  q[3], -q[2],
       q[2], -q[3],  q[0],  q[1],
       q[3],  q[2], -q[1],  q[0];
  return m;
}

inline Quat quat_normalized(const Quat& q) {
  const double n = q.norm();
  return n > 0.0 ? Quat(q / n) : quat_identity();
}

// d(q/|q|)/dq = (I - q̂ q̂ᵀ) / |q|
inline Mat4 quat_normalize_jacobian(const Quat& q) {
  const double n = q.norm();
  const Quat qh = q / n;
  return (Mat4::Identity() - qh * qh.transpose()) / n;
}

// Rotation matrix of a unit quaternion.
inline Mat3 rotation_from_unit_quat(const Quat& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
       2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y);
  return r;
}

// ∂R/∂q̂ for the unit-quaternion formula above, one 3x3 block per component.
inline std::array<Mat3, 4> rotation_quat_jacobian(const Quat& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  std::array<Mat3, 4> d;
  d[0] << 0, -z, y,
          z, 0, -x,
          -y, x, 0;
  d[1] << 0, y, z,
          y, -2 * x, -w,
          z, w, -2 * x;
  d[2] << -2 * y, x, w,
          x, 0, z,
          -w, z, -2 * y;
  d[3] << -2 * z, -w, x,
          w, -2 * z, y,
          x, y, 0;
  for (auto& m : d) m *= 2.0;
  return d;
}

// Shortest-arc rotation taking +z onto direction n (n need not be unit).
// Falls back to a half-turn about x when n is antiparallel to +z.
inline Quat quat_from_z_to(const Vec3& n_in) {
  const double len = n_in.norm();
  if (len <= 0.0) return quat_identity();
  const Vec3 n = n_in / len;
  const double w = 1.0 + n.z();
  if (w < 1e-12) return Quat(0.0, 1.0, 0.0, 0.0);
  return quat_normalized(Quat(w, -n.y(), n.x(), 0.0));
}

inline Vec3 rotate_by_quat(const Quat& q, const Vec3& v) {
  return rotation_from_unit_quat(quat_normalized(q)) * v;
}

}  // namespace topomesh
