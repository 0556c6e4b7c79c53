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

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "srbmtraj/layout.hpp"
#include "srbmtraj/maneuver_spec.hpp"
#include "srbmtraj/srbm.hpp"
#include "srbmtraj/transferability.hpp"

namespace srbmtraj {

/// Names a contiguous slice of a stacked residual vector so infeasibilities
/// can be reported per constraint family.
struct ConstraintGroup {
  std::string name;
  int offset = 0;
  int size = 0;
};

/// Dense nonlinear program: minimize objective(z) subject to
/// equalities(z) = 0, inequalities(z) <= 0, lower <= z <= upper.
struct NLPProblem {
  int dimension = 0;
  int equality_count = 0;
  int inequality_count = 0;

  std::function<double(const Eigen::VectorXd&)> objective;
  std::function<void(const Eigen::VectorXd&, Eigen::Ref<Eigen::VectorXd>)> equalities;
  std::function<void(const Eigen::VectorXd&, Eigen::Ref<Eigen::VectorXd>)> inequalities;

  std::vector<ConstraintGroup> equality_groups;
  std::vector<ConstraintGroup> inequality_groups;

  // Elementwise decision bounds; ±infinity marks a free component. Equal
  // bounds pin the component to that value.
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

namespace detail {

/// State derivative at one knot of one mode, read straight out of the stacked
/// decision vector. Allocation free; tolerates a non-unit quaternion so it can
/// be evaluated at infeasible iterates.
inline void knot_derivative(const Eigen::VectorXd& z, const DecisionLayout& layout, int m,
                            int k, const SRBMParams& params, const Eigen::Matrix3d& inertia_inv,
                            Eigen::Ref<Vector13d> dx) {
  const Eigen::Vector3d com = z.segment<3>(layout.state_index(m, k, comp::kPosX));
  const Quat q = Quat::from_vec(z.segment<4>(layout.state_index(m, k, comp::kQuatW)));
  const Eigen::Vector3d vel = z.segment<3>(layout.state_index(m, k, comp::kVelX));
  const Eigen::Vector3d omega = z.segment<3>(layout.state_index(m, k, comp::kOmegaX));

  Eigen::Vector3d force_sum = Eigen::Vector3d::Zero();
  Eigen::Vector3d torque_world = Eigen::Vector3d::Zero();
  for (int c = 0; c < layout.contacts(m); ++c) {
    const Eigen::Vector3d foot = z.segment<3>(layout.foot_index(m, c, 0));
    const Eigen::Vector3d grf = z.segment<3>(layout.grf_index(m, k, c, 0));
    force_sum += grf;
    torque_world += (foot - com).cross(grf);
  }
  const Eigen::Vector3d torque_body = q.rotate_inverse(torque_world);

  dx.segment<3>(comp::kPosX) = vel;
  dx.segment<4>(comp::kQuatW) = quat_derivative(q, omega);
  dx.segment<3>(comp::kVelX) =
      force_sum / params.mass - Eigen::Vector3d(0, 0, params.gravity);
  dx.segment<3>(comp::kOmegaX) =
      inertia_inv * (torque_body - omega.cross(params.inertia * omega));
}

/// Body-frame contact torque at one knot; used by the effort objective.
inline Eigen::Vector3d knot_body_torque(const Eigen::VectorXd& z, const DecisionLayout& layout,
                                        int m, int k) {
  const Eigen::Vector3d com = z.segment<3>(layout.state_index(m, k, comp::kPosX));
  const Quat q = Quat::from_vec(z.segment<4>(layout.state_index(m, k, comp::kQuatW)));
  Eigen::Vector3d torque_world = Eigen::Vector3d::Zero();
  for (int c = 0; c < layout.contacts(m); ++c) {
    const Eigen::Vector3d foot = z.segment<3>(layout.foot_index(m, c, 0));
    const Eigen::Vector3d grf = z.segment<3>(layout.grf_index(m, k, c, 0));
    torque_world += (foot - com).cross(grf);
  }
  return q.rotate_inverse(torque_world);
}

}  // namespace detail

/// Number of collocation residuals: per mode, 13(N−1) trapezoidal defects
/// plus N unit-quaternion residuals.
inline int defect_size(const DecisionLayout& layout) {
  int n = 0;
  for (int m = 0; m < layout.mode_count(); ++m)
    n += 13 * (layout.knots(m) - 1) + layout.knots(m);
  return n;
}

/// Trapezoidal collocation defects. For each mode with duration T and N knots
/// (h = T/(N−1)):
///   d_k = x_{k+1} − x_k − h/2 (f(x_k) + f(x_{k+1})),  k = 0..N−2,
/// followed by the unit-norm residuals |q_k|² − 1 for k = 0..N−1.
///
/// The four attitude rows of each defect use the midpoint exponential update
///   q_{k+1} − q_k ⊗ exp([0, h (ω_k + ω_{k+1}) / 4])
/// instead of the raw trapezoid. Both are second-order accurate, but a
/// trapezoid applied to the quaternion 4-vector changes its norm by
/// (1 + h²|ω_k|²/16)/(1 + h²|ω_{k+1}|²/16) per interval, which contradicts
/// the per-knot unit-norm rows whenever |ω| varies — the stacked equality
/// system would have no solution. The exponential update preserves the norm
/// exactly for any ω profile, so the two row families stay consistent.
inline void dynamics_defects(const Eigen::VectorXd& z, const DecisionLayout& layout,
                             const SRBMParams& params, const Eigen::Matrix3d& inertia_inv,
                             Eigen::Ref<Eigen::VectorXd> out) {
  int pos = 0;
  Vector13d f_prev, f_next;
  for (int m = 0; m < layout.mode_count(); ++m) {
    const int n = layout.knots(m);
    const double h = z[layout.duration_index(m)] / (n - 1);
    detail::knot_derivative(z, layout, m, 0, params, inertia_inv, f_prev);
    for (int k = 0; k + 1 < n; ++k) {
      detail::knot_derivative(z, layout, m, k + 1, params, inertia_inv, f_next);
      out.segment<13>(pos) = z.segment<13>(layout.state_index(m, k + 1, 0)) -
                             z.segment<13>(layout.state_index(m, k, 0)) -
                             0.5 * h * (f_prev + f_next);
      const Quat qk =
          Quat::from_vec(z.segment<4>(layout.state_index(m, k, comp::kQuatW)));
      const Quat qn =
          Quat::from_vec(z.segment<4>(layout.state_index(m, k + 1, comp::kQuatW)));
      const Eigen::Vector3d half_angle =
          0.25 * h *
          (z.segment<3>(layout.state_index(m, k, comp::kOmegaX)) +
           z.segment<3>(layout.state_index(m, k + 1, comp::kOmegaX)));
      out.segment<4>(pos + comp::kQuatW) = qn.vec() - (qk * quat_exp(half_angle)).vec();
      pos += 13;
      f_prev = f_next;
    }
    for (int k = 0; k < n; ++k) {
      out[pos++] = z.segment<4>(layout.state_index(m, k, comp::kQuatW)).squaredNorm() - 1.0;
    }
  }
}

inline Eigen::VectorXd dynamics_defects(const Eigen::VectorXd& z, const DecisionLayout& layout,
                                        const SRBMParams& params) {
  Eigen::VectorXd out(defect_size(layout));
  dynamics_defects(z, layout, params, params.inertia_inverse(), out);
  return out;
}

/// Number of linking residuals: the full 13-state must match across each
/// adjacent mode boundary.
inline int linking_size(const DecisionLayout& layout) {
  return 13 * (layout.mode_count() - 1);
}

/// x(m, N_m−1) − x(m+1, 0) = 0 for each adjacent mode pair.
inline void linking_constraints(const Eigen::VectorXd& z, const DecisionLayout& layout,
                                Eigen::Ref<Eigen::VectorXd> out) {
  int pos = 0;
  for (int m = 0; m + 1 < layout.mode_count(); ++m) {
    out.segment<13>(pos) = z.segment<13>(layout.state_index(m, layout.knots(m) - 1, 0)) -
                           z.segment<13>(layout.state_index(m + 1, 0, 0));
    pos += 13;
  }
}

inline Eigen::VectorXd linking_constraints(const Eigen::VectorXd& z,
                                           const DecisionLayout& layout) {
  Eigen::VectorXd out(linking_size(layout));
  linking_constraints(z, layout, out);
  return out;
}

/// Control-effort objective: trapezoidal integral over each stance mode of
///   e(t) = Σ_c |F_c|² + |τ_B|²,
/// where τ_B is the body-frame torque produced by the contact forces. Flight
/// modes contribute nothing (no decision forces).
inline double trajectory_effort(const Eigen::VectorXd& z, const DecisionLayout& layout) {
  double total = 0.0;
  for (int m = 0; m < layout.mode_count(); ++m) {
    if (layout.contacts(m) == 0) continue;
    const int n = layout.knots(m);
    const double h = z[layout.duration_index(m)] / (n - 1);
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      double e = detail::knot_body_torque(z, layout, m, k).squaredNorm();
      for (int c = 0; c < layout.contacts(m); ++c)
        e += z.segment<3>(layout.grf_index(m, k, c, 0)).squaredNorm();
      acc += (k == 0 || k == n - 1) ? 0.5 * e : e;
    }
    total += h * acc;
  }
  return total;
}

/// Residuals for the named linear state equalities followed by the average
/// velocity equalities (Δp/T − v_des along a world axis).
inline int maneuver_equality_size(const ManeuverSpec& spec) {
  return static_cast<int>(spec.constraints.equalities.size() +
                          spec.constraints.average_velocity.size());
}

inline void maneuver_equalities(const Eigen::VectorXd& z, const DecisionLayout& layout,
                                const ManeuverSpec& spec, Eigen::Ref<Eigen::VectorXd> out) {
  int pos = 0;
  for (const StateEquality& eq : spec.constraints.equalities) {
    double acc = -eq.value;
    for (const StateEqualityTerm& term : eq.terms)
      acc += term.coeff * z[layout.state_index(term.mode, term.knot, term.component)];
    out[pos++] = acc;
  }
  for (const AverageVelocityEquality& av : spec.constraints.average_velocity) {
    double total_time = 0.0;
    for (int m = 0; m < layout.mode_count(); ++m) total_time += z[layout.duration_index(m)];
    const int last = layout.mode_count() - 1;
    const double dp = z[layout.state_index(last, layout.knots(last) - 1, comp::kPosX + av.axis)] -
                      z[layout.state_index(0, 0, comp::kPosX + av.axis)];
    out[pos++] = dp / total_time - av.v_des;
  }
}

/// Residuals for the orientation-proximity inequalities:
///   dist(q_lhs, q_rhs) − tolerance ≤ 0
/// with q_lhs the (optionally sagittally mirrored) quaternion at the anchor
/// knot and q_rhs either a fixed target or the quaternion at another knot.
inline int quat_tolerance_size(const ManeuverSpec& spec) {
  return static_cast<int>(spec.constraints.quat_tolerances.size());
}

inline void quat_tolerances(const Eigen::VectorXd& z, const DecisionLayout& layout,
                            const ManeuverSpec& spec, Eigen::Ref<Eigen::VectorXd> out) {
  int pos = 0;
  for (const QuatTolerance& qt : spec.constraints.quat_tolerances) {
    Quat lhs = Quat::from_vec(z.segment<4>(layout.state_index(qt.mode, qt.knot, comp::kQuatW)));
    if (qt.mirror) lhs = mirror_sagittal(lhs);
    const Quat rhs =
        qt.relative
            ? Quat::from_vec(
                  z.segment<4>(layout.state_index(qt.other_mode, qt.other_knot, comp::kQuatW)))
            : qt.target;
    out[pos++] = quat_distance(lhs.normalized(), rhs.normalized()) - qt.tolerance;
  }
}

namespace detail {

struct AssembleContext {
  ManeuverSpec spec;
  DecisionLayout layout;
  Eigen::Matrix3d inertia_inv;

  explicit AssembleContext(const ManeuverSpec& s)
      : spec(s), layout(s.modes), inertia_inv(s.params.inertia_inverse()) {}
};

}  // namespace detail

/// Builds the full dense NLP for a maneuver: collocation defects, mode
/// linking and the maneuver equalities stack into `equalities`; the
/// transferability families and orientation tolerances stack into
/// `inequalities`; foot heights are pinned to the ground plane and mode
/// durations are boxed via the bounds vectors.
inline NLPProblem assemble(const ManeuverSpec& spec) {
  spec.validate();
  auto ctx = std::make_shared<detail::AssembleContext>(spec);
  const DecisionLayout& layout = ctx->layout;

  NLPProblem nlp;
  nlp.dimension = layout.total();

  // --- Equality stack ---
  int pos = 0;
  for (int m = 0; m < layout.mode_count(); ++m) {
    const int n = layout.knots(m);
    nlp.equality_groups.push_back({"dynamics[" + std::to_string(m) + "]", pos, 13 * (n - 1)});
    nlp.equality_groups.push_back(
        {"quat_norm[" + std::to_string(m) + "]", pos + 13 * (n - 1), n});
    pos += 13 * (n - 1) + n;
  }
  if (layout.mode_count() > 1) {
    nlp.equality_groups.push_back({"linking", pos, linking_size(layout)});
    pos += linking_size(layout);
  }
  for (const StateEquality& eq : spec.constraints.equalities)
    nlp.equality_groups.push_back({"eq:" + eq.name, pos++, 1});
  for (const AverageVelocityEquality& av : spec.constraints.average_velocity)
    nlp.equality_groups.push_back({"avg_vel:" + av.name, pos++, 1});
  nlp.equality_count = pos;

  nlp.equalities = [ctx](const Eigen::VectorXd& z, Eigen::Ref<Eigen::VectorXd> out) {
    const DecisionLayout& lt = ctx->layout;
    int at = 0;
    dynamics_defects(z, lt, ctx->spec.params, ctx->inertia_inv,
                     out.segment(at, defect_size(lt)));
    at += defect_size(lt);
    if (lt.mode_count() > 1) {
      linking_constraints(z, lt, out.segment(at, linking_size(lt)));
      at += linking_size(lt);
    }
    maneuver_equalities(z, lt, ctx->spec, out.segment(at, maneuver_equality_size(ctx->spec)));
  };

  // --- Inequality stack ---
  pos = 0;
  auto add_group = [&](const std::string& name, int size) {
    if (size > 0) nlp.inequality_groups.push_back({name, pos, size});
    pos += size;
  };
  add_group("leg_length", transfer::leg_length_size(layout));
  add_group("leg_angle", transfer::leg_angle_size(layout));
  add_group("friction_cone", transfer::friction_cone_size(layout));
  add_group("max_force", transfer::max_force_size(layout));
  add_group("yank", transfer::yank_size(layout));
  add_group("omega_bound", transfer::omega_bound_size(layout));
  add_group("footstep", transfer::footstep_size(layout));
  for (const QuatTolerance& qt : spec.constraints.quat_tolerances)
    add_group("quat_tol:" + qt.name, 1);
  nlp.inequality_count = pos;

  nlp.inequalities = [ctx](const Eigen::VectorXd& z, Eigen::Ref<Eigen::VectorXd> out) {
    const DecisionLayout& lt = ctx->layout;
    const TransferabilityConfig& cfg = ctx->spec.transfer;
    int at = 0;
    transfer::leg_length(z, lt, cfg, out.segment(at, transfer::leg_length_size(lt)));
    at += transfer::leg_length_size(lt);
    transfer::leg_angle(z, lt, cfg, out.segment(at, transfer::leg_angle_size(lt)));
    at += transfer::leg_angle_size(lt);
    transfer::friction_cone(z, lt, cfg, out.segment(at, transfer::friction_cone_size(lt)));
    at += transfer::friction_cone_size(lt);
    transfer::max_force(z, lt, cfg, out.segment(at, transfer::max_force_size(lt)));
    at += transfer::max_force_size(lt);
    transfer::yank_bound(z, lt, cfg, out.segment(at, transfer::yank_size(lt)));
    at += transfer::yank_size(lt);
    transfer::omega_bound(z, lt, cfg, out.segment(at, transfer::omega_bound_size(lt)));
    at += transfer::omega_bound_size(lt);
    transfer::footstep_halfplanes(z, lt, cfg, ctx->spec,
                                  out.segment(at, transfer::footstep_size(lt)));
    at += transfer::footstep_size(lt);
    quat_tolerances(z, lt, ctx->spec, out.segment(at, quat_tolerance_size(ctx->spec)));
  };

  // --- Objective ---
  nlp.objective = [ctx](const Eigen::VectorXd& z) {
    return trajectory_effort(z, ctx->layout);
  };

  // --- Bounds ---
  const double inf = std::numeric_limits<double>::infinity();
  nlp.lower = Eigen::VectorXd::Constant(nlp.dimension, -inf);
  nlp.upper = Eigen::VectorXd::Constant(nlp.dimension, inf);
  for (int m = 0; m < layout.mode_count(); ++m) {
    for (int c = 0; c < layout.contacts(m); ++c) {
      nlp.lower[layout.foot_index(m, c, 2)] = 0.0;  // feet on the ground plane
      nlp.upper[layout.foot_index(m, c, 2)] = 0.0;
    }
    nlp.lower[layout.duration_index(m)] = spec.modes[m].t_min;
    nlp.upper[layout.duration_index(m)] = spec.modes[m].t_max;
  }
  return nlp;
}

}  // namespace srbmtraj
