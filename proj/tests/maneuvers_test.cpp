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

#include "srbmtraj/maneuvers.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "srbmtraj/transcription.hpp"

namespace srbmtraj {
namespace {

constexpr double kPi = 3.14159265358979323846;

SRBMParams test_params() {
  SRBMParams p;
  p.mass = 10.0;
  p.inertia = Eigen::Vector3d(0.5, 0.6, 0.3).asDiagonal();
  p.gravity = 9.81;
  return p;
}

HybridMode stance_template(int knots = 8) {
  HybridMode m;
  m.kind = ModeKind::SingleStance;
  m.knots = knots;
  m.t_min = 0.2;
  m.t_max = 0.6;
  return m;
}

HybridMode flight_template(int knots = 6) {
  HybridMode m;
  m.kind = ModeKind::Flight;
  m.knots = knots;
  m.t_min = 0.05;
  m.t_max = 0.5;
  return m;
}

TEST(BuildRunning, ShapeAndConstraintInventory) {
  ManeuverTargets targets;
  targets.v_des = 1.0;
  targets.step_count = 2;
  const ManeuverSpec spec =
      build_running(targets, stance_template(), test_params(), TransferabilityConfig{});

  EXPECT_EQ(spec.kind, "running");
  ASSERT_EQ(spec.modes.size(), 2u);
  EXPECT_EQ(spec.modes[0].kind, ModeKind::SingleStance);
  EXPECT_EQ(spec.stance_sides[0], StanceSide::Left);
  EXPECT_EQ(spec.stance_sides[1], StanceSide::Right);
  EXPECT_EQ(spec.headings[0], 0.0);

  // anchors (2) + lateral return (1) + 5 cyclic/mirror rows per step.
  EXPECT_EQ(spec.constraints.equalities.size(), 3u + 5u * 2u);
  ASSERT_EQ(spec.constraints.average_velocity.size(), 1u);
  EXPECT_EQ(spec.constraints.average_velocity[0].v_des, 1.0);
  // start + end attitude plus one mirror tolerance per step.
  EXPECT_EQ(spec.constraints.quat_tolerances.size(), 4u);
  EXPECT_NO_THROW(spec.validate());
}

TEST(BuildRunning, RejectsOutOfRangeTargets) {
  ManeuverTargets targets;
  targets.v_des = -0.5;
  EXPECT_THROW(
      build_running(targets, stance_template(), test_params(), TransferabilityConfig{}),
      RangeError);
  targets.v_des = 10.5;
  EXPECT_THROW(
      build_running(targets, stance_template(), test_params(), TransferabilityConfig{}),
      RangeError);
  targets.v_des = 1.0;
  targets.step_count = 0;
  EXPECT_THROW(
      build_running(targets, stance_template(), test_params(), TransferabilityConfig{}),
      RangeError);
}

TEST(BuildTurning, HeadingsAdvanceBySubTurns) {
  ManeuverTargets targets;
  targets.v_des = 1.0;
  targets.step_count = 4;
  targets.heading_change = kPi / 2.0;
  const ManeuverSpec spec =
      build_turning(targets, stance_template(), test_params(), TransferabilityConfig{});

  ASSERT_EQ(spec.headings.size(), 4u);
  EXPECT_NEAR(spec.headings[0], kPi / 8.0, 1e-15);
  EXPECT_NEAR(spec.headings[1], kPi / 4.0, 1e-15);
  EXPECT_NEAR(spec.headings[2], 3.0 * kPi / 8.0, 1e-15);
  EXPECT_NEAR(spec.headings[3], kPi / 2.0, 1e-15);

  // anchors (2) + cyclic height (1) + entry/exit velocities (6).
  EXPECT_EQ(spec.constraints.equalities.size(), 9u);
  // Exit velocity rotated by the full turn.
  double exit_vx = 0.0, exit_vy = 0.0;
  for (const auto& eq : spec.constraints.equalities) {
    if (eq.name == "exit_vx") exit_vx = eq.value;
    if (eq.name == "exit_vy") exit_vy = eq.value;
  }
  EXPECT_NEAR(exit_vx, 0.0, 1e-15);
  EXPECT_NEAR(exit_vy, 1.0, 1e-15);

  ASSERT_EQ(spec.constraints.quat_tolerances.size(), 2u);
  const Quat want_exit = Quat::from_yaw(kPi / 2.0);
  EXPECT_NEAR(quat_distance(spec.constraints.quat_tolerances[1].target, want_exit), 0.0,
              1e-7);
  EXPECT_NO_THROW(spec.validate());
}

TEST(BuildTurning, RejectsOversizedTurn) {
  ManeuverTargets targets;
  targets.heading_change = 2.1 * kPi;
  EXPECT_THROW(
      build_turning(targets, stance_template(), test_params(), TransferabilityConfig{}),
      RangeError);
  targets.heading_change = kPi / 2.0;
  targets.step_count = 1;  // a turn needs at least two steps
  EXPECT_THROW(
      build_turning(targets, stance_template(), test_params(), TransferabilityConfig{}),
      RangeError);
}

TEST(BuildSpinJump, ModeSequenceAndTargets) {
  ManeuverTargets targets;
  targets.p_z_des = 1.2;
  targets.heading_change = -kPi / 2.0;
  const ManeuverSpec spec = build_spin_jump(targets, stance_template(), flight_template(),
                                            test_params(), TransferabilityConfig{});

  ASSERT_EQ(spec.modes.size(), 4u);
  EXPECT_EQ(spec.modes[0].kind, ModeKind::DoubleStance);
  EXPECT_EQ(spec.modes[1].kind, ModeKind::Flight);
  EXPECT_EQ(spec.modes[2].kind, ModeKind::Flight);
  EXPECT_EQ(spec.modes[3].kind, ModeKind::DoubleStance);

  // anchors (2) + rest start/end (12) + apex height and speed (2).
  EXPECT_EQ(spec.constraints.equalities.size(), 16u);
  bool found_apex = false;
  for (const auto& eq : spec.constraints.equalities) {
    if (eq.name == "apex_height") {
      found_apex = true;
      EXPECT_EQ(eq.value, 1.2);
      EXPECT_EQ(eq.terms[0].mode, 1);
      EXPECT_EQ(eq.terms[0].knot, spec.modes[1].knots - 1);
    }
  }
  EXPECT_TRUE(found_apex);

  ASSERT_EQ(spec.constraints.quat_tolerances.size(), 4u);
  const Quat want_touchdown = Quat::from_yaw(-kPi / 2.0);
  EXPECT_NEAR(quat_distance(spec.constraints.quat_tolerances[3].target, want_touchdown),
              0.0, 1e-7);
  EXPECT_EQ(spec.constraints.quat_tolerances[2].tolerance, 0.6);
  EXPECT_EQ(spec.constraints.quat_tolerances[3].tolerance, 0.1);
  EXPECT_NO_THROW(spec.validate());
}

TEST(BuildSpinJump, RejectsBadApexHeight) {
  ManeuverTargets targets;
  targets.p_z_des = 0.0;
  EXPECT_THROW(build_spin_jump(targets, stance_template(), flight_template(), test_params(),
                               TransferabilityConfig{}),
               RangeError);
}

TEST(InitialGuess, RunningGuessIsTransferFeasible) {
  ManeuverTargets targets;
  targets.v_des = 1.0;
  targets.step_count = 2;
  const TransferabilityConfig cfg;
  const ManeuverSpec spec = build_running(targets, stance_template(), test_params(), cfg);
  const DecisionLayout layout(spec.modes);
  const Eigen::VectorXd z = initial_guess(spec);
  ASSERT_EQ(z.size(), layout.total());

  // Durations at mid-range; feet on the ground on the correct side.
  EXPECT_NEAR(layout.duration(z, 0), 0.4, 1e-15);
  EXPECT_EQ(layout.foot(z, 0, 0).z(), 0.0);
  EXPECT_GT(layout.foot(z, 0, 0).y(), cfg.delta_min);   // left foot
  EXPECT_LT(layout.foot(z, 1, 0).y(), -cfg.delta_min);  // right foot

  // The guess satisfies every transferability inequality strictly.
  EXPECT_LE(transfer::leg_length(z, layout, cfg).maxCoeff(), -1e-3);
  EXPECT_LE(transfer::leg_angle(z, layout, cfg).maxCoeff(), -1e-3);
  EXPECT_LE(transfer::friction_cone(z, layout, cfg).maxCoeff(), -1e-3);
  EXPECT_LE(transfer::max_force(z, layout, cfg).maxCoeff(), -1e-3);
  EXPECT_LE(transfer::yank_bound(z, layout, cfg).maxCoeff(), -1e-3);
  EXPECT_LE(transfer::omega_bound(z, layout, cfg).maxCoeff(), -1e-3);
  EXPECT_LE(transfer::footstep_halfplanes(z, layout, cfg, spec).maxCoeff(), -1e-3);

  // The maneuver-shaping equalities and attitude tolerances also hold; only
  // the dynamics defects are left for the solver.
  Eigen::VectorXd eq(maneuver_equality_size(spec));
  maneuver_equalities(z, layout, spec, eq);
  EXPECT_LT(eq.lpNorm<Eigen::Infinity>(), 1e-12);
  Eigen::VectorXd qt(quat_tolerance_size(spec));
  quat_tolerances(z, layout, spec, qt);
  EXPECT_LT(qt.maxCoeff(), 0.0);
}

TEST(InitialGuess, SpinJumpGuessHitsApexExactly) {
  ManeuverTargets targets;
  targets.p_z_des = 1.2;
  targets.heading_change = -kPi / 2.0;
  const ManeuverSpec spec = build_spin_jump(targets, stance_template(10), flight_template(8),
                                            test_params(), TransferabilityConfig{});
  const DecisionLayout layout(spec.modes);
  const Eigen::VectorXd z = initial_guess(spec);

  const int apex_knot = spec.modes[1].knots - 1;
  EXPECT_NEAR(z[layout.state_index(1, apex_knot, comp::kPosZ)], 1.2, 1e-12);
  EXPECT_NEAR(z[layout.state_index(1, apex_knot, comp::kVelZ)], 0.0, 1e-12);
  // Rest at both ends.
  EXPECT_EQ(z[layout.state_index(0, 0, comp::kVelZ)], 0.0);
  EXPECT_NEAR(z[layout.state_index(3, spec.modes[3].knots - 1, comp::kVelZ)], 0.0, 1e-12);
  // Flight quaternions stay unit and sweep the commanded yaw.
  for (int m = 1; m <= 2; ++m)
    for (int k = 0; k < spec.modes[m].knots; ++k) {
      const Quat q = Quat::from_vec(z.segment<4>(layout.state_index(m, k, comp::kQuatW)));
      EXPECT_TRUE(q.is_unit(1e-12));
    }
  const Quat q_end = Quat::from_vec(
      z.segment<4>(layout.state_index(3, spec.modes[3].knots - 1, comp::kQuatW)));
  EXPECT_NEAR(quat_distance(q_end, Quat::from_yaw(-kPi / 2.0)), 0.0, 1e-7);
  // Both feet share each double-stance phase, on opposite sides.
  EXPECT_GT(layout.foot(z, 0, 0).y(), 0.0);
  EXPECT_LT(layout.foot(z, 0, 1).y(), 0.0);
}

TEST(InitialGuess, TurningGuessFollowsHeadings) {
  ManeuverTargets targets;
  targets.v_des = 1.0;
  targets.step_count = 4;
  targets.heading_change = kPi / 2.0;
  const ManeuverSpec spec =
      build_turning(targets, stance_template(), test_params(), TransferabilityConfig{});
  const DecisionLayout layout(spec.modes);
  const Eigen::VectorXd z = initial_guess(spec);

  // The CoM path bends left: x and y both advance, and the final knot's
  // velocity points along the last heading.
  const int last = 3, n = spec.modes[3].knots;
  EXPECT_GT(z[layout.state_index(last, n - 1, comp::kPosX)], 0.3);
  EXPECT_GT(z[layout.state_index(last, n - 1, comp::kPosY)], 0.3);
  const double vx = z[layout.state_index(last, n - 1, comp::kVelX)];
  const double vy = z[layout.state_index(last, n - 1, comp::kVelY)];
  EXPECT_NEAR(std::atan2(vy, vx), spec.headings[3], 1e-12);
  // Attitude finishes at the commanded yaw.
  const Quat q_end =
      Quat::from_vec(z.segment<4>(layout.state_index(last, n - 1, comp::kQuatW)));
  EXPECT_NEAR(quat_distance(q_end, Quat::from_yaw(kPi / 2.0)), 0.0, 1e-7);
}

TEST(InitialGuess, RejectsBadHeight) {
  ManeuverTargets targets;
  const ManeuverSpec spec =
      build_running(targets, stance_template(), test_params(), TransferabilityConfig{});
  EXPECT_THROW(initial_guess(spec, 0.0), UsageError);
}

}  // namespace
}  // namespace srbmtraj
