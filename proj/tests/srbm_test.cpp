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

#include "srbmtraj/srbm.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "srbmtraj/rollout.hpp"

namespace srbmtraj {
namespace {

// Desk-scale test model shared by the oracle cases below.
SRBMParams test_params() {
  SRBMParams p;
  p.mass = 10.0;
  p.inertia = Eigen::Vector3d(0.5, 0.6, 0.3).asDiagonal();
  p.gravity = 9.81;
  return p;
}

// Reference state: values frozen together with the wrench/dynamics oracles.
SRBMState test_state() {
  SRBMState s;
  s.position = {0.1, -0.2, 0.9};
  s.orientation = Quat::from_axis_angle(Eigen::Vector3d(1.0, 2.0, 3.0), 0.7);
  s.velocity = {1.0, 0.5, -0.2};
  s.omega = {0.3, -0.4, 0.5};
  return s;
}

ContactSet test_contacts() {
  return {{{0.15, 0.1, 0.0}, {5.0, -3.0, 60.0}},
          {{-0.05, -0.3, 0.0}, {-2.0, 4.0, 45.0}}};
}

TEST(SRBMParams, ValidateAcceptsDeskScaleModel) {
  EXPECT_NO_THROW(test_params().validate());
}

TEST(SRBMParams, ValidateRejectsBadMass) {
  SRBMParams p = test_params();
  p.mass = 0.0;
  EXPECT_THROW(p.validate(), ParameterError);
  p.mass = -1.0;
  EXPECT_THROW(p.validate(), ParameterError);
}

TEST(SRBMParams, ValidateRejectsAsymmetricInertia) {
  SRBMParams p = test_params();
  p.inertia(0, 1) = 0.01;  // leave (1,0) untouched
  EXPECT_THROW(p.validate(), ParameterError);
}

TEST(SRBMParams, ValidateRejectsIndefiniteInertia) {
  SRBMParams p = test_params();
  p.inertia = Eigen::Vector3d(0.5, -0.1, 0.3).asDiagonal();
  EXPECT_THROW(p.validate(), ParameterError);
}

TEST(SRBMParams, InertiaInverse) {
  const Eigen::Matrix3d inv = test_params().inertia_inverse();
  EXPECT_NEAR(inv(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(inv(1, 1), 1.0 / 0.6, 1e-15);
  EXPECT_NEAR(inv(2, 2), 1.0 / 0.3, 1e-15);
  EXPECT_NEAR(inv(0, 1), 0.0, 1e-15);
}

TEST(SRBMState, VectorOrder) {
  const Vector13d v = test_state().to_vector();
  // p(0..2), q(3..6, scalar first), v(7..9), ω(10..12).
  EXPECT_EQ(v[0], 0.1);
  EXPECT_EQ(v[1], -0.2);
  EXPECT_EQ(v[2], 0.9);
  EXPECT_NEAR(v[3], 0.9393727128473789, 1e-15);
  EXPECT_NEAR(v[4], 0.0916432938695913, 1e-15);
  EXPECT_NEAR(v[5], 0.1832865877391826, 1e-15);
  EXPECT_NEAR(v[6], 0.2749298816087739, 1e-15);
  EXPECT_EQ(v[7], 1.0);
  EXPECT_EQ(v[8], 0.5);
  EXPECT_EQ(v[9], -0.2);
  EXPECT_EQ(v[10], 0.3);
  EXPECT_EQ(v[11], -0.4);
  EXPECT_EQ(v[12], 0.5);
}

TEST(SRBMState, VectorRoundTrip) {
  const SRBMState s = test_state();
  const SRBMState r = SRBMState::from_vector(s.to_vector());
  EXPECT_EQ((r.position - s.position).norm(), 0.0);
  EXPECT_EQ((r.velocity - s.velocity).norm(), 0.0);
  EXPECT_EQ((r.omega - s.omega).norm(), 0.0);
  EXPECT_EQ(r.orientation.w, s.orientation.w);
  EXPECT_EQ(r.orientation.z, s.orientation.z);
}

TEST(BodyWrench, Oracle) {
  const auto [force, torque] = body_wrench(test_state(), test_contacts());
  EXPECT_NEAR(force.x(), 3.0, 1e-12);
  EXPECT_NEAR(force.y(), 1.0, 1e-12);
  EXPECT_NEAR(force.z(), 105.0, 1e-12);
  // Body-frame torque of the two contact forces about the CoM.
  EXPECT_NEAR(torque.x(), 12.553423998675264, 1e-12);
  EXPECT_NEAR(torque.y(), -6.749293082497661, 1e-12);
  EXPECT_NEAR(torque.z(), 3.365054055440022, 1e-12);
}

TEST(BodyWrench, NoContactsGivesZeroWrench) {
  const auto [force, torque] = body_wrench(test_state(), {});
  EXPECT_EQ(force.norm(), 0.0);
  EXPECT_EQ(torque.norm(), 0.0);
}

TEST(BodyWrench, RejectsNonUnitQuaternion) {
  SRBMState s = test_state();
  s.orientation.w += 0.2;
  EXPECT_THROW(body_wrench(s, test_contacts()), InvalidStateError);
}

TEST(Dynamics, Oracle) {
  const Vector13d dx = dynamics(test_state(), test_contacts(), test_params());
  // ṗ = v.
  EXPECT_EQ(dx[0], 1.0);
  EXPECT_EQ(dx[1], 0.5);
  EXPECT_EQ(dx[2], -0.2);
  // q̇ = ½ q ⊗ [0, ω].
  EXPECT_NEAR(dx[3], -0.04582164693479565, 1e-14);
  EXPECT_NEAR(dx[4], 0.24171353018365727, 1e-14);
  EXPECT_NEAR(dx[5], -0.16954588379555752, 1e-14);
  EXPECT_NEAR(dx[6], 0.18902153127704907, 1e-14);
  // v̇ = ΣF/m − g ẑ.
  EXPECT_NEAR(dx[7], 0.3, 1e-13);
  EXPECT_NEAR(dx[8], 0.1, 1e-13);
  EXPECT_NEAR(dx[9], 0.69, 1e-13);
  // ω̇ = J⁻¹(τ_B − ω × Jω).
  EXPECT_NEAR(dx[10], 24.986847997350527, 1e-12);
  EXPECT_NEAR(dx[11], -11.298821804162769, 1e-12);
  EXPECT_NEAR(dx[12], 11.25684685146674, 1e-12);
}

TEST(Dynamics, FlightIsBallisticPlusEuler) {
  SRBMState s = test_state();
  const Vector13d dx = dynamics(s, {}, test_params());
  EXPECT_EQ(dx[7], 0.0);
  EXPECT_EQ(dx[8], 0.0);
  EXPECT_NEAR(dx[9], -9.81, 1e-15);
  // ω̇ = −J⁻¹(ω × Jω): Euler's equations, torque free.
  const Eigen::Vector3d want =
      -test_params().inertia_inverse() *
      (s.omega.cross(test_params().inertia * s.omega));
  EXPECT_NEAR(dx[10], want.x(), 1e-14);
  EXPECT_NEAR(dx[11], want.y(), 1e-14);
  EXPECT_NEAR(dx[12], want.z(), 1e-14);
}

TEST(Dynamics, RejectsNonUnitQuaternion) {
  SRBMState s = test_state();
  s.orientation = Quat(0.5, 0.5, 0.0, 0.0);
  EXPECT_THROW(dynamics(s, {}, test_params()), InvalidStateError);
}

TEST(Conservation, OracleValues) {
  const SRBMState s = test_state();
  const SRBMParams p = test_params();
  const Eigen::Vector3d l = angular_momentum_world(s, p);
  EXPECT_NEAR(l.x(), 0.29235987402353464, 1e-14);
  EXPECT_NEAR(l.y(), -0.1278785224129399, 1e-14);
  EXPECT_NEAR(l.z(), 0.02779905693411507, 1e-14);
  EXPECT_NEAR(mechanical_energy(s, p), 94.848, 1e-12);
}

TEST(Rollout, FlightConservesMomentumAndEnergy) {
  const SRBMParams p = test_params();
  SRBMState s = test_state();
  s.omega = {2.0, -1.5, 3.0};  // fast tumble to stress the attitude integration
  const ContactSchedule flight = [](double) { return ContactSet{}; };
  const double duration = 0.5;
  const auto states = rk4_rollout(s, flight, p, duration, 1e-4);

  const Eigen::Vector3d l0 = angular_momentum_world(states.front(), p);
  const double e0 = mechanical_energy(states.front(), p);
  const Eigen::Vector3d l1 = angular_momentum_world(states.back(), p);
  const double e1 = mechanical_energy(states.back(), p);

  const double l_drift_per_s = (l1 - l0).norm() / duration;
  const double e_drift_per_s = std::abs(e1 - e0) / duration;
  EXPECT_LT(l_drift_per_s, 1e-6 * std::max(1.0, l0.norm()));
  EXPECT_LT(e_drift_per_s, 1e-6 * std::max(1.0, std::abs(e0)));
}

TEST(Rollout, SampleCountAndFinalTime) {
  const SRBMParams p = test_params();
  const ContactSchedule flight = [](double) { return ContactSet{}; };
  const auto states = rk4_rollout(test_state(), flight, p, 0.1, 0.01);
  EXPECT_EQ(states.size(), 11u);  // t = 0, 0.01, …, 0.1
  // Ballistic x position advances by v_x · t.
  EXPECT_NEAR(states.back().position.x(), 0.1 + 1.0 * 0.1, 1e-12);
  EXPECT_NEAR(states.back().position.z(), 0.9 - 0.2 * 0.1 - 0.5 * 9.81 * 0.01, 1e-10);
}

TEST(Rollout, QuaternionStaysUnit) {
  const SRBMParams p = test_params();
  const ContactSchedule flight = [](double) { return ContactSet{}; };
  const auto states = rk4_rollout(test_state(), flight, p, 0.3, 1e-3);
  for (const auto& st : states) EXPECT_TRUE(st.orientation.is_unit(1e-12));
}

TEST(Rollout, RejectsBadArguments) {
  const SRBMParams p = test_params();
  const ContactSchedule flight = [](double) { return ContactSet{}; };
  EXPECT_THROW(rk4_rollout(test_state(), flight, p, 1.0, 0.0), UsageError);
  EXPECT_THROW(rk4_rollout(test_state(), flight, p, 1.0, -0.1), UsageError);
  EXPECT_THROW(rk4_rollout(test_state(), flight, p, 0.0, 0.1), UsageError);
}

TEST(Rollout, ThrowsOnDivergence) {
  const SRBMParams p = test_params();
  const ContactSchedule absurd = [](double) {
    return ContactSet{{{0.0, 0.0, 0.0}, {1e308, 1e308, 1e308}}};
  };
  try {
    rk4_rollout(test_state(), absurd, p, 1.0, 0.1);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.step_index, 0);
  }
}

}  // namespace
}  // namespace srbmtraj
