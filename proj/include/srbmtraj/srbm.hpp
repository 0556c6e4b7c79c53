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
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <vector>

#include "srbmtraj/errors.hpp"
#include "srbmtraj/quaternion.hpp"

namespace srbmtraj {

using Vector13d = Eigen::Matrix<double, 13, 1>;

/// Mass, body-frame rotational inertia, and gravity of the single rigid body.
struct SRBMParams {
  double mass = 1.0;                                    // kg
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Identity();  // kg m^2, body frame
  double gravity = 9.81;                                // m/s^2, world −z

  /// Throws ParameterError unless mass > 0 and the inertia is symmetric
  /// positive definite (symmetry within 1e-12).
  void validate() const {
    if (!(mass > 0.0)) throw ParameterError("mass must be positive");
    if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw ParameterError("inertia matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(inertia);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw ParameterError("inertia matrix must be positive definite");
  }

  Eigen::Matrix3d inertia_inverse() const {
    const double det = inertia.determinant();
    if (std::abs(det) < 1e-300) throw ParameterError("inertia matrix is singular");
    return inertia.inverse();
  }
};

/// 13-component body state: CoM position, attitude, CoM velocity and
/// body-frame angular velocity.
struct SRBMState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();   // world, m
  Quat orientation = Quat::identity();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();   // world, m/s
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();      // body frame, rad/s

  Vector13d to_vector() const {
    Vector13d v;
    v.segment<3>(0) = position;
    v.segment<4>(3) = orientation.vec();
    v.segment<3>(7) = velocity;
    v.segment<3>(10) = omega;
    return v;
  }

  static SRBMState from_vector(const Vector13d& v) {
    SRBMState s;
    s.position = v.segment<3>(0);
    s.orientation = Quat::from_vec(v.segment<4>(3));
    s.velocity = v.segment<3>(7);
    s.omega = v.segment<3>(10);
    return s;
  }
};

/// One active foot contact: world foot position and world GRF.
struct Contact {
  Eigen::Vector3d foot = Eigen::Vector3d::Zero();   // m
  Eigen::Vector3d force = Eigen::Vector3d::Zero();  // N
};

/// 0 (flight), 1 (single stance) or 2 (double stance) active contacts.
using ContactSet = std::vector<Contact>;

namespace detail {

// Unchecked wrench: contact force sum in world frame and contact torque in
// the body frame. Gravity is applied in the dynamics, not here. Used by the
// transcription evaluators, where quaternion norms are constrained
// separately and may be off-unit at intermediate iterates.
inline void contact_wrench(const Eigen::Vector3d& com, const Quat& q,
                           const ContactSet& contacts, Eigen::Vector3d& force_world,
                           Eigen::Vector3d& torque_body) {
  force_world.setZero();
  torque_body.setZero();
  if (contacts.empty()) return;
  Eigen::Vector3d torque_world = Eigen::Vector3d::Zero();
  for (const Contact& c : contacts) {
    force_world += c.force;
    torque_world += (c.foot - com).cross(c.force);
  }
  torque_body = q.rotate_inverse(torque_world);
}

// Unchecked state derivative; see Eq. forms in dynamics() below.
inline Vector13d state_derivative(const SRBMState& state, const ContactSet& contacts,
                                  const SRBMParams& params,
                                  const Eigen::Matrix3d& inertia_inv) {
  Eigen::Vector3d force_world, torque_body;
  contact_wrench(state.position, state.orientation, contacts, force_world, torque_body);

  Vector13d dx;
  dx.segment<3>(0) = state.velocity;
  dx.segment<4>(3) = quat_derivative(state.orientation, state.omega);
  dx.segment<3>(7) = force_world / params.mass;
  dx[9] -= params.gravity;
  const Eigen::Vector3d j_omega = params.inertia * state.omega;
  dx.segment<3>(10) = inertia_inv * (torque_body - state.omega.cross(j_omega));
  return dx;
}

}  // namespace detail

/// Resultant of the contact forces as a wrench at the body: world-frame
/// force sum and body-frame torque. Gravity enters the dynamics, not the
/// wrench, so constraint code sees contact contributions only.
inline std::pair<Eigen::Vector3d, Eigen::Vector3d> body_wrench(const SRBMState& state,
                                                               const ContactSet& contacts) {
  if (!state.orientation.is_unit())
    throw InvalidStateError("body_wrench: orientation is not a unit quaternion");
  Eigen::Vector3d force, torque;
  detail::contact_wrench(state.position, state.orientation, contacts, force, torque);
  return {force, torque};
}

/// Full 13-component state derivative:
///   ṗ = v,  q̇ = ½ q ⊗ [0, ω],  v̇ = ΣF/m − g ẑ,  ω̇ = J⁻¹(τ_B − ω × Jω).
inline Vector13d dynamics(const SRBMState& state, const ContactSet& contacts,
                          const SRBMParams& params) {
  if (!state.orientation.is_unit())
    throw InvalidStateError("dynamics: orientation is not a unit quaternion");
  return detail::state_derivative(state, contacts, params, params.inertia_inverse());
}

/// World-frame angular momentum R(q) J ω; conserved in flight.
inline Eigen::Vector3d angular_momentum_world(const SRBMState& state,
                                              const SRBMParams& params) {
  return state.orientation.rotate(params.inertia * state.omega);
}

/// Total mechanical energy m g p_z + ½ m |v|² + ½ ωᵀJω; conserved in flight.
inline double mechanical_energy(const SRBMState& state, const SRBMParams& params) {
  return params.mass * params.gravity * state.position.z() +
         0.5 * params.mass * state.velocity.squaredNorm() +
         0.5 * state.omega.dot(params.inertia * state.omega);
}

}  // namespace srbmtraj
