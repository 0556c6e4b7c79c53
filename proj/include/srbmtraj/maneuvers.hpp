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
#include <string>
#include <vector>

#include "srbmtraj/layout.hpp"
#include "srbmtraj/maneuver_spec.hpp"

namespace srbmtraj {

namespace detail {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline StateEquality single(const std::string& name, int mode, int knot, int component,
                            double value) {
  StateEquality eq;
  eq.name = name;
  eq.terms = {{mode, knot, component, 1.0}};
  eq.value = value;
  return eq;
}

inline StateEquality pair_diff(const std::string& name, int mode_a, int knot_a, int mode_b,
                               int knot_b, int component, double sign_b) {
  StateEquality eq;
  eq.name = name;
  eq.terms = {{mode_a, knot_a, component, 1.0}, {mode_b, knot_b, component, sign_b}};
  eq.value = 0.0;
  return eq;
}

}  // namespace detail

/// Grounded running: `step_count` alternating single-stance steps along +x at
/// the target average speed. Each step is constrained to be the sagittal
/// mirror of itself (cyclic height, vertical speed and pitch rate; sign-flipped
/// roll and yaw rates; mirrored attitude within tolerance), which makes the
/// two-step unit loopable.
inline ManeuverSpec build_running(const ManeuverTargets& targets, const HybridMode& stance,
                                  const SRBMParams& params,
                                  const TransferabilityConfig& transfer) {
  if (!(targets.v_des >= 0.0) || targets.v_des >= 10.0)
    throw RangeError("build_running: v_des must be in [0, 10) m/s");
  if (targets.step_count < 1)
    throw RangeError("build_running: step_count must be at least 1");

  ManeuverSpec spec;
  spec.kind = "running";
  spec.targets = targets;
  spec.params = params;
  spec.transfer = transfer;
  for (int m = 0; m < targets.step_count; ++m) {
    HybridMode mode = stance;
    mode.kind = ModeKind::SingleStance;
    spec.modes.push_back(mode);
    spec.stance_sides.push_back(m % 2 == 0 ? StanceSide::Left : StanceSide::Right);
    spec.headings.push_back(0.0);
  }

  const int last = targets.step_count - 1;
  const int n = stance.knots;
  auto& eqs = spec.constraints.equalities;
  eqs.push_back(detail::single("anchor_px", 0, 0, comp::kPosX, 0.0));
  eqs.push_back(detail::single("anchor_py", 0, 0, comp::kPosY, 0.0));
  eqs.push_back(
      detail::pair_diff("lateral_return", last, n - 1, 0, 0, comp::kPosY, -1.0));
  for (int m = 0; m < targets.step_count; ++m) {
    const std::string suffix = "[" + std::to_string(m) + "]";
    eqs.push_back(detail::pair_diff("cyclic_pz" + suffix, m, n - 1, m, 0, comp::kPosZ, -1.0));
    eqs.push_back(detail::pair_diff("cyclic_vz" + suffix, m, n - 1, m, 0, comp::kVelZ, -1.0));
    eqs.push_back(
        detail::pair_diff("cyclic_wy" + suffix, m, n - 1, m, 0, comp::kOmegaY, -1.0));
    eqs.push_back(
        detail::pair_diff("mirror_wx" + suffix, m, n - 1, m, 0, comp::kOmegaX, 1.0));
    eqs.push_back(
        detail::pair_diff("mirror_wz" + suffix, m, n - 1, m, 0, comp::kOmegaZ, 1.0));
  }

  AverageVelocityEquality av;
  av.name = "avg_velocity_x";
  av.axis = 0;
  av.v_des = targets.v_des;
  spec.constraints.average_velocity.push_back(av);

  auto& qts = spec.constraints.quat_tolerances;
  {
    QuatTolerance qt;
    qt.name = "attitude_start";
    qt.mode = 0;
    qt.knot = 0;
    qt.target = targets.q_run;
    qt.tolerance = targets.theta_tol;
    qts.push_back(qt);
    qt.name = "attitude_end";
    qt.mode = last;
    qt.knot = n - 1;
    qts.push_back(qt);
  }
  for (int m = 0; m < targets.step_count; ++m) {
    QuatTolerance qt;
    qt.name = "mirror_attitude[" + std::to_string(m) + "]";
    qt.mode = m;
    qt.knot = n - 1;
    qt.mirror = true;
    qt.relative = true;
    qt.other_mode = m;
    qt.other_knot = 0;
    qt.tolerance = targets.theta_mirror;
    qts.push_back(qt);
  }

  spec.validate();
  return spec;
}

/// Turning: alternating single-stance steps whose nominal heading advances by
/// heading_change/step_count per step. Entry and exit CoM velocities are
/// pinned to the target speed along the pre- and post-turn headings, the CoM
/// height is cyclic across the maneuver, and the final attitude must land
/// within theta_turn of yaw(heading_change) ⊗ q_run.
inline ManeuverSpec build_turning(const ManeuverTargets& targets, const HybridMode& stance,
                                  const SRBMParams& params,
                                  const TransferabilityConfig& transfer) {
  if (!(targets.v_des >= 0.0) || targets.v_des >= 10.0)
    throw RangeError("build_turning: v_des must be in [0, 10) m/s");
  if (targets.step_count < 2)
    throw RangeError("build_turning: step_count must be at least 2");
  if (std::abs(targets.heading_change) > detail::kTwoPi)
    throw RangeError("build_turning: |heading_change| must be at most 2π");

  ManeuverSpec spec;
  spec.kind = "turning";
  spec.targets = targets;
  spec.params = params;
  spec.transfer = transfer;
  const double delta = targets.heading_change;
  const int steps = targets.step_count;
  for (int m = 0; m < steps; ++m) {
    HybridMode mode = stance;
    mode.kind = ModeKind::SingleStance;
    spec.modes.push_back(mode);
    spec.stance_sides.push_back(m % 2 == 0 ? StanceSide::Left : StanceSide::Right);
    // Heading after (m+1) of the `steps` equal sub-turns.
    spec.headings.push_back(delta * (m + 1) / steps);
  }

  const int last = steps - 1;
  const int n = stance.knots;
  auto& eqs = spec.constraints.equalities;
  eqs.push_back(detail::single("anchor_px", 0, 0, comp::kPosX, 0.0));
  eqs.push_back(detail::single("anchor_py", 0, 0, comp::kPosY, 0.0));
  eqs.push_back(detail::pair_diff("cyclic_pz", 0, 0, last, n - 1, comp::kPosZ, -1.0));

  const double v = targets.v_des;
  eqs.push_back(detail::single("entry_vx", 0, 0, comp::kVelX, v));
  eqs.push_back(detail::single("entry_vy", 0, 0, comp::kVelY, 0.0));
  eqs.push_back(detail::single("entry_vz", 0, 0, comp::kVelZ, 0.0));
  eqs.push_back(detail::single("exit_vx", last, n - 1, comp::kVelX, v * std::cos(delta)));
  eqs.push_back(detail::single("exit_vy", last, n - 1, comp::kVelY, v * std::sin(delta)));
  eqs.push_back(detail::single("exit_vz", last, n - 1, comp::kVelZ, 0.0));

  auto& qts = spec.constraints.quat_tolerances;
  {
    QuatTolerance qt;
    qt.name = "attitude_entry";
    qt.mode = 0;
    qt.knot = 0;
    qt.target = targets.q_run;
    qt.tolerance = targets.theta_turn;
    qts.push_back(qt);
    qt.name = "attitude_exit";
    qt.mode = last;
    qt.knot = n - 1;
    qt.target = Quat::from_yaw(delta) * targets.q_run;
    qts.push_back(qt);
  }

  spec.validate();
  return spec;
}

/// Spin jump: double stance (crouch and launch), two flight phases split at
/// the apex, then double stance (landing). The apex height and zero apex
/// vertical speed are equalities; the maneuver starts and ends at rest. The
/// landing attitude target is the liftoff target yawed by heading_change,
/// tracked loosely at touchdown and tightly by the end of the landing phase.
inline ManeuverSpec build_spin_jump(const ManeuverTargets& targets, const HybridMode& stance,
                                    const HybridMode& flight, const SRBMParams& params,
                                    const TransferabilityConfig& transfer) {
  if (!(targets.p_z_des > 0.0))
    throw RangeError("build_spin_jump: p_z_des must be positive");
  if (std::abs(targets.heading_change) > detail::kTwoPi)
    throw RangeError("build_spin_jump: |heading_change| must be at most 2π");

  ManeuverSpec spec;
  spec.kind = "spin_jump";
  spec.targets = targets;
  spec.params = params;
  spec.transfer = transfer;
  const double delta = targets.heading_change;

  HybridMode ds = stance;
  ds.kind = ModeKind::DoubleStance;
  HybridMode fl = flight;
  fl.kind = ModeKind::Flight;
  spec.modes = {ds, fl, fl, ds};
  spec.stance_sides.assign(4, StanceSide::Left);  // unused for DS/flight
  spec.headings = {0.0, 0.0, delta, delta};

  const int n_ds = ds.knots;
  const int n_fl = fl.knots;
  auto& eqs = spec.constraints.equalities;
  eqs.push_back(detail::single("anchor_px", 0, 0, comp::kPosX, 0.0));
  eqs.push_back(detail::single("anchor_py", 0, 0, comp::kPosY, 0.0));
  for (int a = 0; a < 3; ++a) {
    eqs.push_back(detail::single("rest_start_v" + std::string(1, "xyz"[a]), 0, 0,
                                 comp::kVelX + a, 0.0));
    eqs.push_back(detail::single("rest_start_w" + std::string(1, "xyz"[a]), 0, 0,
                                 comp::kOmegaX + a, 0.0));
    eqs.push_back(detail::single("rest_end_v" + std::string(1, "xyz"[a]), 3, n_ds - 1,
                                 comp::kVelX + a, 0.0));
    eqs.push_back(detail::single("rest_end_w" + std::string(1, "xyz"[a]), 3, n_ds - 1,
                                 comp::kOmegaX + a, 0.0));
  }
  eqs.push_back(detail::single("apex_height", 1, n_fl - 1, comp::kPosZ, targets.p_z_des));
  eqs.push_back(detail::single("apex_vz", 1, n_fl - 1, comp::kVelZ, 0.0));

  const Quat q_touchdown = Quat::from_yaw(delta) * targets.q_liftoff;
  auto& qts = spec.constraints.quat_tolerances;
  {
    QuatTolerance qt;
    qt.name = "attitude_stand";
    qt.mode = 0;
    qt.knot = 0;
    qt.target = targets.q_liftoff;
    qt.tolerance = targets.theta_liftoff;
    qts.push_back(qt);
    qt.name = "attitude_liftoff";
    qt.knot = n_ds - 1;
    qts.push_back(qt);
    qt.name = "attitude_touchdown";
    qt.mode = 3;
    qt.knot = 0;
    qt.target = q_touchdown;
    qt.tolerance = targets.theta_touchdown_i;
    qts.push_back(qt);
    qt.name = "attitude_landed";
    qt.knot = n_ds - 1;
    qt.tolerance = targets.theta_touchdown_f;
    qts.push_back(qt);
  }

  spec.validate();
  return spec;
}

namespace detail {

// Lateral foot offset used by the cold-start guesses: keeps the guess strictly
// inside the footstep half-planes.
inline double guess_offset(const TransferabilityConfig& cfg) { return cfg.delta_min + 0.04; }

inline Eigen::Vector2d heading_left_normal(double heading) {
  return {-std::sin(heading), std::cos(heading)};
}

}  // namespace detail

/// Cold-start decision vector for a built maneuver: mid-range durations, a
/// kinematically plausible CoM path at `nominal_height`, weight-supporting
/// vertical GRFs, and feet placed beside the CoM path on their stance side.
/// The guess respects the variable bounds but not the dynamics; it is the
/// standard starting point when no warm start is available.
inline Eigen::VectorXd initial_guess(const ManeuverSpec& spec, double nominal_height = 0.8) {
  if (!(nominal_height > 0.0))
    throw UsageError("initial_guess: nominal_height must be positive");
  spec.validate();
  const DecisionLayout layout(spec.modes);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(layout.total());

  const int n_modes = layout.mode_count();
  std::vector<double> durations(n_modes);
  double total_time = 0.0;
  for (int m = 0; m < n_modes; ++m) {
    durations[m] = 0.5 * (spec.modes[m].t_min + spec.modes[m].t_max);
    layout.set_duration(z, m, durations[m]);
    total_time += durations[m];
  }

  const double mg = spec.params.mass * spec.params.gravity;
  const double delta = spec.targets.heading_change;

  if (spec.kind == "spin_jump") {
    // Vertical plan: stand, ballistic rise to the apex, ballistic fall,
    // stand. The flight segments use the exact free-fall arc anchored at the
    // apex so the guess already satisfies the apex equalities.
    const double g = spec.params.gravity;
    const double t_up = durations[1];
    const double t_down = durations[2];
    const double z_liftoff = spec.targets.p_z_des - 0.5 * g * t_up * t_up;
    const double z_touchdown = spec.targets.p_z_des - 0.5 * g * t_down * t_down;
    const double spin_rate = delta / (t_up + t_down);

    double elapsed = 0.0;
    for (int m = 0; m < n_modes; ++m) {
      const int n = layout.knots(m);
      for (int k = 0; k < n; ++k) {
        const double local = durations[m] * k / (n - 1);
        SRBMState s;
        s.position.x() = 0.0;
        s.position.y() = 0.0;
        switch (m) {
          case 0: {
            const double f = local / durations[0];
            s.position.z() = nominal_height + f * (z_liftoff - nominal_height);
            s.velocity.z() = f * g * t_up;  // ramp up to the launch speed
            s.orientation = spec.targets.q_liftoff;
            break;
          }
          case 1: {
            const double remain = t_up - local;
            s.position.z() = spec.targets.p_z_des - 0.5 * g * remain * remain;
            s.velocity.z() = g * remain;
            s.orientation = Quat::from_yaw(spin_rate * local) * spec.targets.q_liftoff;
            s.omega.z() = spin_rate;
            break;
          }
          case 2: {
            s.position.z() = spec.targets.p_z_des - 0.5 * g * local * local;
            s.velocity.z() = -g * local;
            s.orientation =
                Quat::from_yaw(spin_rate * (t_up + local)) * spec.targets.q_liftoff;
            s.omega.z() = spin_rate;
            break;
          }
          default: {
            const double f = local / durations[3];
            s.position.z() = z_touchdown + f * (nominal_height - z_touchdown);
            s.velocity.z() = -(1.0 - f) * g * t_down;
            s.orientation = Quat::from_yaw(delta) * spec.targets.q_liftoff;
            break;
          }
        }
        layout.set_state(z, m, k, s);
      }
      for (int c = 0; c < layout.contacts(m); ++c) {
        const double side = spec.contact_side(m, c) == StanceSide::Left ? 1.0 : -1.0;
        const Eigen::Vector2d offset =
            side * detail::guess_offset(spec.transfer) *
            detail::heading_left_normal(spec.headings[m]);
        layout.set_foot(z, m, c, {offset.x(), offset.y(), 0.0});
        for (int k = 0; k < layout.knots(m); ++k)
          layout.set_grf(z, m, k, c, {0.0, 0.0, mg / layout.contacts(m)});
      }
      elapsed += durations[m];
    }
    (void)elapsed;
    return z;
  }

  // Running / turning / generic: constant-height CoM advancing at v_des along
  // the per-mode headings, attitude yawing with the accumulated turn.
  const double v_des = spec.targets.v_des;
  Eigen::Vector2d com(0.0, 0.0);
  double elapsed = 0.0;
  for (int m = 0; m < n_modes; ++m) {
    const int n = layout.knots(m);
    const double heading = spec.headings[m];
    const Eigen::Vector2d dir(std::cos(heading), std::sin(heading));
    for (int k = 0; k < n; ++k) {
      const double local = durations[m] * k / (n - 1);
      const double f_total = (elapsed + local) / total_time;
      SRBMState s;
      s.position.head<2>() = com + v_des * local * dir;
      s.position.z() = nominal_height;
      s.velocity.head<2>() = v_des * dir;
      if (spec.kind == "turning") {
        s.orientation = Quat::from_yaw(f_total * delta) * spec.targets.q_run;
        s.omega.z() = delta / total_time;
      } else {
        s.orientation = spec.targets.q_run;
      }
      layout.set_state(z, m, k, s);
    }
    const Eigen::Vector2d com_mid = com + 0.5 * v_des * durations[m] * dir;
    for (int c = 0; c < layout.contacts(m); ++c) {
      const double side = spec.contact_side(m, c) == StanceSide::Left ? 1.0 : -1.0;
      const Eigen::Vector2d foot =
          com_mid +
          side * detail::guess_offset(spec.transfer) * detail::heading_left_normal(heading);
      layout.set_foot(z, m, c, {foot.x(), foot.y(), 0.0});
      for (int k = 0; k < n; ++k)
        layout.set_grf(z, m, k, c, {0.0, 0.0, mg / layout.contacts(m)});
    }
    com += v_des * durations[m] * dir;
    elapsed += durations[m];
  }
  return z;
}

}  // namespace srbmtraj
