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

#include <string>
#include <vector>

#include "srbmtraj/errors.hpp"
#include "srbmtraj/quaternion.hpp"
#include "srbmtraj/srbm.hpp"
#include "srbmtraj/transferability_config.hpp"

namespace srbmtraj {

enum class ModeKind { Flight, SingleStance, DoubleStance };

enum class StanceSide { Left, Right };

inline const char* to_string(ModeKind k) {
  switch (k) {
    case ModeKind::Flight: return "flight";
    case ModeKind::SingleStance: return "single_stance";
    case ModeKind::DoubleStance: return "double_stance";
  }
  return "?";
}

inline const char* to_string(StanceSide s) {
  return s == StanceSide::Left ? "left" : "right";
}

/// One hybrid phase: contact kind, collocation knot count and duration bounds.
struct HybridMode {
  ModeKind kind = ModeKind::SingleStance;
  int knots = 10;
  double t_min = 0.2;  // s
  double t_max = 0.6;  // s

  int contact_count() const {
    switch (kind) {
      case ModeKind::Flight: return 0;
      case ModeKind::SingleStance: return 1;
      case ModeKind::DoubleStance: return 2;
    }
    return 0;
  }
};

// State component indices inside the 13-vector.
namespace comp {
inline constexpr int kPosX = 0, kPosY = 1, kPosZ = 2;
inline constexpr int kQuatW = 3, kQuatX = 4, kQuatY = 5, kQuatZ = 6;
inline constexpr int kVelX = 7, kVelY = 8, kVelZ = 9;
inline constexpr int kOmegaX = 10, kOmegaY = 11, kOmegaZ = 12;
}  // namespace comp

/// One linear-combination term referencing a state component at a knot.
struct StateEqualityTerm {
  int mode = 0;
  int knot = 0;
  int component = 0;  // comp:: index
  double coeff = 1.0;
};

/// Σ coeff · x(mode, knot, component) = value. Covers the cyclic, mirror and
/// boundary equality constraints that shape a maneuver.
struct StateEquality {
  std::string name;
  std::vector<StateEqualityTerm> terms;
  double value = 0.0;
};

/// (p_axis(F, N) − p_axis(i, 1)) / T = v_des with T the sum of all mode
/// durations; axis 0 = world x, 1 = world y.
struct AverageVelocityEquality {
  std::string name;
  int axis = 0;
  double v_des = 0.0;
};

/// d(subject, target) ≤ tolerance, with the subject quaternion optionally
/// mirrored about the sagittal plane, and the target either a fixed attitude
/// or another knot's quaternion.
struct QuatTolerance {
  std::string name;
  int mode = 0;
  int knot = 0;
  bool mirror = false;
  bool relative = false;  // compare against q(other_mode, other_knot)
  int other_mode = 0;
  int other_knot = 0;
  Quat target = Quat::identity();
  double tolerance = 0.1;
};

/// Maneuver-shaping constraint set attached to a spec.
struct ManeuverConstraints {
  std::vector<StateEquality> equalities;
  std::vector<AverageVelocityEquality> average_velocity;
  std::vector<QuatTolerance> quat_tolerances;
};

/// Desired attitudes, tolerances and targets used by the maneuver builders.
/// Tolerance defaults are implementation values; the touchdown pair must keep
/// the loose-then-tight ordering.
struct ManeuverTargets {
  double v_des = 1.0;                   // m/s
  Quat q_run = Quat::identity();
  Quat q_turn = Quat::identity();
  Quat q_liftoff = Quat::identity();
  Quat q_touchdown = Quat::identity();
  double theta_tol = 0.1;               // rad
  double theta_mirror = 0.15;           // rad
  double theta_turn = 0.1;              // rad
  double theta_liftoff = 0.1;           // rad
  double theta_touchdown_i = 0.6;       // rad, loose, start of touchdown
  double theta_touchdown_f = 0.1;       // rad, tight, end of touchdown
  double p_z_des = 1.2;                 // m, jump apex height
  double heading_change = 0.0;          // rad
  int step_count = 2;
};

/// A fully specified maneuver: hybrid sequence, stance sides, per-mode
/// nominal headings, shaping constraints, and the model/transferability
/// configuration the NLP is assembled against.
struct ManeuverSpec {
  std::string kind;  // "running", "turning", "spin_jump" or "" for custom
  std::vector<HybridMode> modes;
  std::vector<StanceSide> stance_sides;  // per mode; ignored for flight
  std::vector<double> headings;          // rad, per mode
  ManeuverConstraints constraints;
  ManeuverTargets targets;
  TransferabilityConfig transfer;
  SRBMParams params;

  /// Side of a given contact slot: single stance uses the mode's side,
  /// double stance is always (left, right).
  StanceSide contact_side(int mode, int contact) const {
    if (modes[mode].kind == ModeKind::DoubleStance)
      return contact == 0 ? StanceSide::Left : StanceSide::Right;
    return stance_sides[mode];
  }

  void validate() const;
};

inline void ManeuverSpec::validate() const {
  if (modes.empty()) throw InvalidSpecError("maneuver has no modes");
  if (stance_sides.size() != modes.size())
    throw InvalidSpecError("stance_sides must match mode count");
  if (headings.size() != modes.size())
    throw InvalidSpecError("headings must match mode count");
  for (size_t m = 0; m < modes.size(); ++m) {
    if (modes[m].knots < 2)
      throw InvalidSpecError("mode " + std::to_string(m) + ": knots must be >= 2");
    if (!(modes[m].t_min > 0.0))
      throw InvalidSpecError("mode " + std::to_string(m) + ": t_min must be positive");
    if (modes[m].t_max < modes[m].t_min)
      throw InvalidSpecError("mode " + std::to_string(m) + ": t_max below t_min");
  }
  if (targets.theta_touchdown_i < targets.theta_touchdown_f)
    throw InvalidSpecError("touchdown tolerances must be loose-then-tight");
  for (double t : {targets.theta_tol, targets.theta_mirror, targets.theta_turn,
                   targets.theta_liftoff, targets.theta_touchdown_i,
                   targets.theta_touchdown_f}) {
    if (t < 0.0) throw InvalidSpecError("orientation tolerances must be non-negative");
  }

  if (kind == "running" || kind == "turning") {
    for (size_t m = 0; m < modes.size(); ++m) {
      if (modes[m].kind != ModeKind::SingleStance)
        throw InvalidSpecError(kind + " maneuvers use single-stance modes only");
      if (m > 0 && stance_sides[m] == stance_sides[m - 1])
        throw InvalidSpecError(kind + " maneuvers must alternate stance sides");
    }
  } else if (kind == "spin_jump") {
    const std::vector<ModeKind> want = {ModeKind::DoubleStance, ModeKind::Flight,
                                        ModeKind::Flight, ModeKind::DoubleStance};
    if (modes.size() != want.size())
      throw InvalidSpecError("spin jump needs exactly 4 modes");
    for (size_t m = 0; m < want.size(); ++m)
      if (modes[m].kind != want[m])
        throw InvalidSpecError("spin jump mode sequence must be DS, F, F, DS");
  }

  const int n_modes = static_cast<int>(modes.size());
  auto check_ref = [&](int mode, int knot, const std::string& who) {
    if (mode < 0 || mode >= n_modes)
      throw InvalidSpecError(who + ": mode index out of range");
    if (knot < 0 || knot >= modes[mode].knots)
      throw InvalidSpecError(who + ": knot index out of range");
  };
  for (const auto& eq : constraints.equalities) {
    if (eq.terms.empty()) throw InvalidSpecError(eq.name + ": equality has no terms");
    for (const auto& t : eq.terms) {
      check_ref(t.mode, t.knot, eq.name);
      if (t.component < 0 || t.component >= 13)
        throw InvalidSpecError(eq.name + ": component out of range");
    }
  }
  for (const auto& qt : constraints.quat_tolerances) {
    check_ref(qt.mode, qt.knot, qt.name);
    if (qt.relative) check_ref(qt.other_mode, qt.other_knot, qt.name);
    if (qt.tolerance < 0.0) throw InvalidSpecError(qt.name + ": negative tolerance");
  }

  transfer.validate();
  params.validate();
}

}  // namespace srbmtraj
