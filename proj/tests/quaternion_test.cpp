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

#include "srbmtraj/quaternion.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace srbmtraj {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Reference attitude used across the oracle tests: 0.7 rad about (1,2,3)/√14.
// Components frozen from an independent evaluation.
Quat reference_quat() {
  return {0.9393727128473789, 0.0916432938695913, 0.1832865877391826,
          0.2749298816087739};
}

TEST(Quat, IdentityDefaults) {
  const Quat q;
  EXPECT_EQ(q.w, 1.0);
  EXPECT_EQ(q.x, 0.0);
  EXPECT_EQ(q.y, 0.0);
  EXPECT_EQ(q.z, 0.0);
  EXPECT_TRUE(q.is_unit());
}

TEST(Quat, FromAxisAngleMatchesTrig) {
  const Quat q = Quat::from_axis_angle(Eigen::Vector3d::UnitZ(), kPi / 2.0);
  EXPECT_NEAR(q.w, std::cos(kPi / 4.0), 1e-15);
  EXPECT_NEAR(q.z, std::sin(kPi / 4.0), 1e-15);
  EXPECT_EQ(q.x, 0.0);
  EXPECT_EQ(q.y, 0.0);

  const Quat r = Quat::from_axis_angle(Eigen::Vector3d(1.0, 2.0, 3.0), 0.7);
  const Quat want = reference_quat();
  EXPECT_NEAR(r.w, want.w, 1e-15);
  EXPECT_NEAR(r.x, want.x, 1e-15);
  EXPECT_NEAR(r.y, want.y, 1e-15);
  EXPECT_NEAR(r.z, want.z, 1e-15);
}

TEST(Quat, FromAxisAngleZeroAxisIsIdentity) {
  const Quat q = Quat::from_axis_angle(Eigen::Vector3d::Zero(), 1.0);
  EXPECT_EQ(q.w, 1.0);
  EXPECT_EQ(q.z, 0.0);
}

TEST(Quat, HamiltonProductOracle) {
  // yaw(π/2) ⊗ roll(π/2) = (0.5, 0.5, 0.5, 0.5).
  const Quat a = Quat::from_axis_angle(Eigen::Vector3d::UnitZ(), kPi / 2.0);
  const Quat b = Quat::from_axis_angle(Eigen::Vector3d::UnitX(), kPi / 2.0);
  const Quat p = a * b;
  EXPECT_NEAR(p.w, 0.5, 1e-15);
  EXPECT_NEAR(p.x, 0.5, 1e-15);
  EXPECT_NEAR(p.y, 0.5, 1e-15);
  EXPECT_NEAR(p.z, 0.5, 1e-15);
}

TEST(Quat, ProductWithConjugateIsIdentity) {
  const Quat q = reference_quat();
  const Quat p = q * q.conjugate();
  EXPECT_NEAR(p.w, 1.0, 1e-14);
  EXPECT_NEAR(p.x, 0.0, 1e-14);
  EXPECT_NEAR(p.y, 0.0, 1e-14);
  EXPECT_NEAR(p.z, 0.0, 1e-14);
}

TEST(Quat, RotateOracle) {
  const Quat q = reference_quat();
  const Eigen::Vector3d v(0.2, -1.1, 0.4);
  const Eigen::Vector3d got = q.rotate(v);
  EXPECT_NEAR(got.x(), 0.8454459666865585, 1e-14);
  EXPECT_NEAR(got.y(), -0.8337667007783767, 1e-14);
  EXPECT_NEAR(got.z(), 0.00736247829006506, 1e-14);

  const Eigen::Vector3d inv = q.rotate_inverse(v);
  EXPECT_NEAR(inv.x(), -0.5663842703688214, 1e-14);
  EXPECT_NEAR(inv.y(), -0.9026364684396146, 1e-14);
  EXPECT_NEAR(inv.z(), 0.5238857357493504, 1e-14);
}

TEST(Quat, RotateMatchesRotationMatrix) {
  const Quat q = reference_quat();
  const Eigen::Vector3d v(0.2, -1.1, 0.4);
  const Eigen::Vector3d via_matrix = q.rotation_matrix() * v;
  const Eigen::Vector3d direct = q.rotate(v);
  EXPECT_NEAR((via_matrix - direct).norm(), 0.0, 1e-14);
  // R is orthogonal with determinant +1.
  const Eigen::Matrix3d r = q.rotation_matrix();
  EXPECT_NEAR((r * r.transpose() - Eigen::Matrix3d::Identity()).norm(), 0.0, 1e-14);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-14);
}

TEST(Quat, RotateInverseInvertsRotate) {
  const Quat q = reference_quat();
  const Eigen::Vector3d v(-0.3, 0.9, 2.1);
  EXPECT_NEAR((q.rotate_inverse(q.rotate(v)) - v).norm(), 0.0, 1e-14);
}

TEST(Quat, YawOfPureYaw) {
  EXPECT_NEAR(Quat::from_yaw(0.8).yaw(), 0.8, 1e-14);
  EXPECT_NEAR(Quat::from_yaw(-2.5).yaw(), -2.5, 1e-14);
}

TEST(QuatDerivative, Oracle) {
  const Quat q = reference_quat();
  const Eigen::Vector3d omega(0.3, -0.4, 0.5);
  const Eigen::Vector4d dq = quat_derivative(q, omega);
  EXPECT_NEAR(dq[0], -0.04582164693479565, 1e-15);
  EXPECT_NEAR(dq[1], 0.24171353018365727, 1e-15);
  EXPECT_NEAR(dq[2], -0.16954588379555752, 1e-15);
  EXPECT_NEAR(dq[3], 0.18902153127704907, 1e-15);
}

TEST(QuatDerivative, ZeroOmegaGivesZero) {
  EXPECT_EQ(quat_derivative(reference_quat(), Eigen::Vector3d::Zero()).norm(), 0.0);
}

TEST(QuatDerivative, OrthogonalToQuaternion) {
  // d/dt |q|² = 2 ⟨q, q̇⟩ = 0 for unit q: the flow preserves the norm.
  const Quat q = reference_quat();
  const Eigen::Vector4d dq = quat_derivative(q, Eigen::Vector3d(1.7, -0.2, 0.9));
  EXPECT_NEAR(q.vec().dot(dq), 0.0, 1e-15);
}

TEST(QuatDistance, Oracle) {
  const Quat a = reference_quat();
  const Quat b = Quat::from_yaw(1.2);
  EXPECT_NEAR(quat_distance(a, b), 0.749851342347473, 1e-14);
}

TEST(QuatDistance, BasicProperties) {
  const Quat q = reference_quat();
  EXPECT_NEAR(quat_distance(q, q), 0.0, 1e-7);
  EXPECT_NEAR(quat_distance(q, -q), 0.0, 1e-7);  // double cover
  EXPECT_NEAR(quat_distance(Quat::identity(), Quat::from_yaw(kPi / 2.0)), kPi / 2.0,
              1e-14);
  // Symmetry.
  const Quat b = Quat::from_yaw(1.2);
  EXPECT_EQ(quat_distance(q, b), quat_distance(b, q));
}

TEST(MirrorSagittal, NegatesYawAndRoll) {
  const Quat yaw = Quat::from_yaw(0.6);
  const Quat myaw = mirror_sagittal(yaw);
  EXPECT_NEAR(quat_distance(myaw, Quat::from_yaw(-0.6)), 0.0, 1e-7);

  const Quat roll = Quat::from_axis_angle(Eigen::Vector3d::UnitX(), 0.4);
  const Quat mroll = mirror_sagittal(roll);
  EXPECT_NEAR(quat_distance(mroll, Quat::from_axis_angle(Eigen::Vector3d::UnitX(), -0.4)),
              0.0, 1e-7);

  // Near zero the acos-based metric only resolves to ~√ε ≈ 1e-8.
  const Quat pitch = Quat::from_axis_angle(Eigen::Vector3d::UnitY(), 0.5);
  EXPECT_NEAR(quat_distance(mirror_sagittal(pitch), pitch), 0.0, 1e-7);
}

TEST(MirrorSagittal, IsInvolution) {
  const Quat q = reference_quat();
  const Quat qq = mirror_sagittal(mirror_sagittal(q));
  EXPECT_EQ(qq.w, q.w);
  EXPECT_EQ(qq.x, q.x);
  EXPECT_EQ(qq.y, q.y);
  EXPECT_EQ(qq.z, q.z);
}

TEST(Slerp, Oracle) {
  const Quat a = reference_quat();
  const Quat b = Quat::from_yaw(1.2);
  const Quat s = slerp(a, b, 0.3);
  EXPECT_NEAR(s.w, 0.9184848288207931, 1e-14);
  EXPECT_NEAR(s.x, 0.06492686852375748, 1e-14);
  EXPECT_NEAR(s.y, 0.12985373704751496, 1e-14);
  EXPECT_NEAR(s.z, 0.3678425314513422, 1e-14);
  EXPECT_TRUE(s.is_unit(1e-12));
}

TEST(Slerp, EndpointsAndShortArc) {
  const Quat a = reference_quat();
  const Quat b = Quat::from_yaw(1.2);
  EXPECT_NEAR(quat_distance(slerp(a, b, 0.0), a), 0.0, 1e-7);
  EXPECT_NEAR(quat_distance(slerp(a, b, 1.0), b), 0.0, 1e-7);
  // Against −b the interpolation must take the same (short) arc.
  EXPECT_NEAR(quat_distance(slerp(a, -b, 0.5), slerp(a, b, 0.5)), 0.0, 1e-7);
  // Midpoint is equidistant.
  const Quat mid = slerp(a, b, 0.5);
  EXPECT_NEAR(quat_distance(a, mid), quat_distance(mid, b), 1e-12);
}

TEST(Slerp, NearlyParallelFallsBackToNlerp) {
  const Quat a = Quat::from_yaw(0.3);
  const Quat b = Quat::from_yaw(0.3 + 1e-14);
  const Quat s = slerp(a, b, 0.4);
  EXPECT_TRUE(s.is_unit(1e-12));
  EXPECT_NEAR(quat_distance(s, a), 0.0, 1e-7);
}

TEST(Quat, NormalizedZeroThrows) {
  const Quat zero(0.0, 0.0, 0.0, 0.0);
  EXPECT_THROW(zero.normalized(), InvalidStateError);
}

TEST(Quat, VecRoundTrip) {
  const Quat q = reference_quat();
  const Quat r = Quat::from_vec(q.vec());
  EXPECT_EQ(r.w, q.w);
  EXPECT_EQ(r.x, q.x);
  EXPECT_EQ(r.y, q.y);
  EXPECT_EQ(r.z, q.z);
}

TEST(Quat, IsUnitTolerance) {
  Quat q = reference_quat();
  EXPECT_TRUE(q.is_unit());
  q.w += 1e-3;
  EXPECT_FALSE(q.is_unit());
  EXPECT_TRUE(q.is_unit(1e-2));
}

}  // namespace
}  // namespace srbmtraj
