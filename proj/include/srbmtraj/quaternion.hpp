// Copyright 2026 The srbmtraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

#include "srbmtraj/errors.hpp"

namespace srbmtraj {

/// Unit quaternion attitude, scalar-first (w, x, y, z), Hamilton product.
/// Rotations map body-frame vectors to the world frame.
struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Quat() = default;
  Quat(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

  static Quat identity() { return {1.0, 0.0, 0.0, 0.0}; }

  /// Rotation of `angle` radians about a (not necessarily unit) axis.
  static Quat from_axis_angle(const Eigen::Vector3d& axis, double angle) {
    const double n = axis.norm();
    if (n < 1e-300) return identity();
    const double half = 0.5 * angle;
    const double s = std::sin(half) / n;
    return {std::cos(half), s * axis.x(), s * axis.y(), s * axis.z()};
  }

  /// Pure yaw rotation about the world z axis.
  static Quat from_yaw(double yaw) {
    return {std::cos(0.5 * yaw), 0.0, 0.0, std::sin(0.5 * yaw)};
  }

  static Quat from_vec(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }

  Eigen::Vector4d vec() const { return {w, x, y, z}; }

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  double dot(const Quat& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }

  Quat conjugate() const { return {w, -x, -y, -z}; }

  Quat normalized() const {
    const double n = norm();
    if (n < 1e-300) throw InvalidStateError("cannot normalize zero quaternion");
    return {w / n, x / n, y / n, z / n};
  }

  /// Hamilton product this ⊗ other.
  Quat operator*(const Quat& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z,
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w};
  }

  Quat operator-() const { return {-w, -x, -y, -z}; }

  /// Rotates a body-frame vector into the world frame. The quaternion is
  /// normalized internally so near-unit inputs stay well defined.
  Eigen::Vector3d rotate(const Eigen::Vector3d& v) const {
    const Quat q = normalized();
    // q v q* expanded; cheaper than building the matrix.
    const Eigen::Vector3d u(q.x, q.y, q.z);
    const Eigen::Vector3d t = 2.0 * u.cross(v);
    return v + q.w * t + u.cross(t);
  }

  /// Rotates a world-frame vector into the body frame.
  Eigen::Vector3d rotate_inverse(const Eigen::Vector3d& v) const {
    return conjugate().rotate(v);
  }

  /// Body-to-world rotation matrix R(q).
  Eigen::Matrix3d rotation_matrix() const {
    const Quat q = normalized();
    Eigen::Matrix3d r;
    const double ww = q.w * q.w, xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
    r(0, 0) = ww + xx - yy - zz;
    r(0, 1) = 2.0 * (q.x * q.y - q.w * q.z);
    r(0, 2) = 2.0 * (q.x * q.z + q.w * q.y);
    r(1, 0) = 2.0 * (q.x * q.y + q.w * q.z);
    r(1, 1) = ww - xx + yy - zz;
    r(1, 2) = 2.0 * (q.y * q.z - q.w * q.x);
    r(2, 0) = 2.0 * (q.x * q.z - q.w * q.y);
    r(2, 1) = 2.0 * (q.y * q.z + q.w * q.x);
    r(2, 2) = ww - xx - yy + zz;
    return r;
  }

  /// Yaw of the rotated body x axis projected to the world xy plane.
  double yaw() const {
    const Eigen::Vector3d fwd = rotate(Eigen::Vector3d::UnitX());
    return std::atan2(fwd.y(), fwd.x());
  }

  bool is_unit(double tol = 1e-6) const { return std::abs(norm() - 1.0) <= tol; }
};

/// Attitude kinematics ½ q ⊗ [0, ω] with ω in the body frame.
/// The result is orthogonal to q in exact arithmetic, so unit norm is
/// preserved along the flow.
inline Eigen::Vector4d quat_derivative(const Quat& q, const Eigen::Vector3d& omega) {
  const Quat omega_quat(0.0, omega.x(), omega.y(), omega.z());
  const Quat dq = q * omega_quat;
  return 0.5 * dq.vec();
}

/// Quaternion exponential of the pure quaternion [0, u]:
///   exp([0, u]) = (cos|u|, sin|u|·u/|u|),
/// a unit quaternion for every u. A series branch keeps the map smooth
/// through u = 0. For a body rate ω held constant over a step h, the exact
/// attitude update is q ⊗ quat_exp(h ω / 2).
inline Quat quat_exp(const Eigen::Vector3d& u) {
  const double theta2 = u.squaredNorm();
  double c, s;
  if (theta2 < 1e-16) {
    c = 1.0 - 0.5 * theta2;
    s = 1.0 - theta2 / 6.0;
  } else {
    const double theta = std::sqrt(theta2);
    c = std::cos(theta);
    s = std::sin(theta) / theta;
  }
  return {c, s * u.x(), s * u.y(), s * u.z()};
}

/// Geodesic angle between two attitudes in [0, π], invariant under the
/// double cover (q and −q give the same rotation). Componentwise-equal
/// inputs short-circuit to exactly zero: near |⟨a,b⟩| = 1 the acos is so
/// steep that a last-bit norm error would otherwise read as ~1e-8 rad.
inline double quat_distance(const Quat& a, const Quat& b) {
  if ((a.w == b.w && a.x == b.x && a.y == b.y && a.z == b.z) ||
      (a.w == -b.w && a.x == -b.x && a.y == -b.y && a.z == -b.z))
    return 0.0;
  const double d = std::clamp(std::abs(a.dot(b)), 0.0, 1.0);
  return 2.0 * std::acos(d);
}

/// Reflection of the rotation across the body x–z (sagittal) plane:
/// (w, x, y, z) → (w, −x, y, −z). Preserves pitch, negates roll and yaw.
inline Quat mirror_sagittal(const Quat& q) { return {q.w, -q.x, q.y, -q.z}; }

/// Spherical interpolation along the shorter arc; falls back to normalized
/// linear interpolation when the endpoints nearly coincide.
inline Quat slerp(const Quat& a, const Quat& b, double t) {
  Quat b2 = (a.dot(b) < 0.0) ? -b : b;
  double d = std::clamp(a.dot(b2), -1.0, 1.0);
  if (d > 1.0 - 1e-12) {
    Quat out(a.w + t * (b2.w - a.w), a.x + t * (b2.x - a.x), a.y + t * (b2.y - a.y),
             a.z + t * (b2.z - a.z));
    return out.normalized();
  }
  const double theta = std::acos(d);
  const double sa = std::sin((1.0 - t) * theta) / std::sin(theta);
  const double sb = std::sin(t * theta) / std::sin(theta);
  return {sa * a.w + sb * b2.w, sa * a.x + sb * b2.x, sa * a.y + sb * b2.y,
          sa * a.z + sb * b2.z};
}

}  // namespace srbmtraj
