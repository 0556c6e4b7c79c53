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
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "srbmtraj/errors.hpp"
#include "srbmtraj/quaternion.hpp"
#include "srbmtraj/trajectory.hpp"

namespace srbmtraj {

/// Coefficients and shape parameters of the tracking reward. The coefficient
/// defaults are the published values; the divisor is their sum so a perfect
/// match scores exactly 1. When a config overrides coefficients it must keep
/// divisor equal to the new sum.
struct RewardConfig {
  double coeff_orientation = 0.05;
  double coeff_velocity_x = 0.35;
  double coeff_velocity_y = 0.1;
  double coeff_velocity_z = 0.1;
  double coeff_angular_momentum = 0.15;
  double coeff_foot_position_x = 0.15;
  double coeff_foot_position_y = 0.15;
  double coeff_clock = 0.3;
  double coeff_foot_orientation = 0.3;
  double coeff_foot_height = 0.3;
  double coeff_drift = 0.3;
  double coeff_hip_roll = 0.1;
  double coeff_hip_yaw = 0.1;

  double foot_position_scale = 20.0;  // 1/m, inside the foot-position exponent
  double drift_threshold = 0.2;       // m, |p_y| below which drift is free
  double drift_scale = 15.0;          // 1/m, drift exponent beyond the threshold
  double z_foot_des = 0.15;           // m, swing apex height target

  /// Average the two per-foot terms (default) or score only the first foot
  /// in the summary — callers using the latter pass the swing foot first.
  bool average_foot_terms = true;

  /// Normalization divisor. Keep this the sum of the coefficients, in the
  /// declaration order above, so totals land in (0, 1].
  double divisor = 0.05 + 0.35 + 0.1 + 0.1 + 0.15 + 0.15 + 0.15 + 0.3 + 0.3 + 0.3 +
                   0.3 + 0.1 + 0.1;

  double coefficient_sum() const {
    return coeff_orientation + coeff_velocity_x + coeff_velocity_y + coeff_velocity_z +
           coeff_angular_momentum + coeff_foot_position_x + coeff_foot_position_y +
           coeff_clock + coeff_foot_orientation + coeff_foot_height + coeff_drift +
           coeff_hip_roll + coeff_hip_yaw;
  }

  void validate() const {
    for (double c : {coeff_orientation, coeff_velocity_x, coeff_velocity_y,
                     coeff_velocity_z, coeff_angular_momentum, coeff_foot_position_x,
                     coeff_foot_position_y, coeff_clock, coeff_foot_orientation,
                     coeff_foot_height, coeff_drift, coeff_hip_roll, coeff_hip_yaw})
      if (!(c > 0.0)) throw UsageError("reward config: coefficients must be positive");
    if (!(foot_position_scale > 0.0) || !(drift_scale > 0.0))
      throw UsageError("reward config: scales must be positive");
    if (!(drift_threshold >= 0.0))
      throw UsageError("reward config: drift threshold must be non-negative");
    if (std::abs(divisor - coefficient_sum()) > 1e-9)
      throw UsageError("reward config: divisor must equal the coefficient sum");
  }
};

/// Per-foot slice of a robot summary: position relative to the CoM (world
/// x, y), world sole height, and sole orientation.
struct FootSummary {
  Eigen::Vector2d relative_position = Eigen::Vector2d::Zero();  // m
  double height = 0.0;                                          // m
  Quat orientation = Quat::identity();
};

/// Snapshot of the tracked robot, as a trainer would summarize one control
/// tick: attitude, CoM velocity, angular momentum L = Jω (body frame),
/// per-foot geometry, lateral position, hip roll/yaw motor speeds, and the
/// externally computed clock penalty.
struct RobotSummary {
  Quat orientation = Quat::identity();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();          // m/s
  Eigen::Vector3d angular_momentum = Eigen::Vector3d::Zero();  // kg m^2/s
  std::vector<FootSummary> feet;                               // 1 or 2 entries
  double lateral_position = 0.0;                               // m, p_y
  double hip_roll_rate = 0.0;                                  // rad/s
  double hip_yaw_rate = 0.0;                                   // rad/s
  double clock_penalty = 0.0;                                  // dimensionless
};

/// Per-foot slice of a reference sample: relative position and orientation.
struct FootReference {
  Eigen::Vector2d relative_position = Eigen::Vector2d::Zero();  // m
  Quat orientation = Quat::identity();
};

/// The reference values a robot summary is scored against.
struct ReferenceSummary {
  Quat orientation = Quat::identity();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d angular_momentum = Eigen::Vector3d::Zero();
  std::vector<FootReference> feet;
};

/// One value per reward term plus the normalized total.
struct RewardBreakdown {
  double orientation = 0.0;
  double velocity_x = 0.0;
  double velocity_y = 0.0;
  double velocity_z = 0.0;
  double angular_momentum = 0.0;
  double foot_position_x = 0.0;
  double foot_position_y = 0.0;
  double clock = 0.0;
  double foot_orientation = 0.0;
  double foot_height = 0.0;
  double drift = 0.0;
  double hip_roll = 0.0;
  double hip_yaw = 0.0;
  double total = 0.0;
};

namespace detail {

inline void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) throw EvaluationError(std::string("non-finite input: ") + field);
}

inline void require_finite(const Eigen::Vector3d& v, const char* field) {
  if (!v.allFinite()) throw EvaluationError(std::string("non-finite input: ") + field);
}

inline void require_finite(const Quat& q, const char* field) {
  if (!std::isfinite(q.w) || !std::isfinite(q.x) || !std::isfinite(q.y) ||
      !std::isfinite(q.z))
    throw EvaluationError(std::string("non-finite input: ") + field);
}

}  // namespace detail

/// Evaluates the full tracking reward of a robot summary against a reference.
/// Every term is of the form coefficient · exp(−deviation), so each lies in
/// (0, coefficient] and the divisor-normalized total lies in (0, 1]. The
/// drift term is flat at its coefficient inside |p_y| < threshold and drops
/// discontinuously to the exponential branch outside — the published shape,
/// kept as printed.
inline RewardBreakdown evaluate(const RobotSummary& robot, const ReferenceSummary& reference,
                                const RewardConfig& config = RewardConfig{}) {
  config.validate();
  detail::require_finite(robot.orientation, "robot orientation");
  detail::require_finite(robot.velocity, "robot velocity");
  detail::require_finite(robot.angular_momentum, "robot angular momentum");
  detail::require_finite(robot.lateral_position, "robot lateral position");
  detail::require_finite(robot.hip_roll_rate, "robot hip roll rate");
  detail::require_finite(robot.hip_yaw_rate, "robot hip yaw rate");
  detail::require_finite(robot.clock_penalty, "robot clock penalty");
  detail::require_finite(reference.orientation, "reference orientation");
  detail::require_finite(reference.velocity, "reference velocity");
  detail::require_finite(reference.angular_momentum, "reference angular momentum");
  if (robot.feet.empty()) throw EvaluationError("robot summary has no feet");
  if (robot.feet.size() != reference.feet.size())
    throw EvaluationError("robot summary has " + std::to_string(robot.feet.size()) +
                          " feet, reference has " + std::to_string(reference.feet.size()));
  for (size_t f = 0; f < robot.feet.size(); ++f) {
    detail::require_finite(robot.feet[f].relative_position.x(), "robot foot position");
    detail::require_finite(robot.feet[f].relative_position.y(), "robot foot position");
    detail::require_finite(robot.feet[f].height, "robot foot height");
    detail::require_finite(robot.feet[f].orientation, "robot foot orientation");
    detail::require_finite(reference.feet[f].relative_position.x(), "reference foot position");
    detail::require_finite(reference.feet[f].relative_position.y(), "reference foot position");
    detail::require_finite(reference.feet[f].orientation, "reference foot orientation");
  }

  // Foot deviations, averaged over feet or taken from the first entry only.
  const size_t foot_count = config.average_foot_terms ? robot.feet.size() : 1;
  double dev_fx = 0.0, dev_fy = 0.0, dev_fq = 0.0, dev_fz = 0.0;
  for (size_t f = 0; f < foot_count; ++f) {
    dev_fx += std::abs(config.foot_position_scale *
                       (robot.feet[f].relative_position.x() -
                        reference.feet[f].relative_position.x()));
    dev_fy += std::abs(config.foot_position_scale *
                       (robot.feet[f].relative_position.y() -
                        reference.feet[f].relative_position.y()));
    dev_fq += quat_distance(robot.feet[f].orientation, reference.feet[f].orientation);
    dev_fz += std::abs(robot.feet[f].height - config.z_foot_des);
  }
  dev_fx /= foot_count;
  dev_fy /= foot_count;
  dev_fq /= foot_count;
  dev_fz /= foot_count;

  RewardBreakdown r;
  r.orientation = config.coeff_orientation *
                  std::exp(-quat_distance(robot.orientation, reference.orientation));
  r.velocity_x = config.coeff_velocity_x *
                 std::exp(-std::abs(robot.velocity.x() - reference.velocity.x()));
  r.velocity_y = config.coeff_velocity_y *
                 std::exp(-std::abs(robot.velocity.y() - reference.velocity.y()));
  r.velocity_z = config.coeff_velocity_z *
                 std::exp(-std::abs(robot.velocity.z() - reference.velocity.z()));
  r.angular_momentum =
      config.coeff_angular_momentum *
      std::exp(-(robot.angular_momentum - reference.angular_momentum).norm());
  r.foot_position_x = config.coeff_foot_position_x * std::exp(-dev_fx);
  r.foot_position_y = config.coeff_foot_position_y * std::exp(-dev_fy);
  r.clock = config.coeff_clock * std::exp(-std::abs(robot.clock_penalty));
  r.foot_orientation = config.coeff_foot_orientation * std::exp(-dev_fq);
  r.foot_height = config.coeff_foot_height * std::exp(-dev_fz);
  r.drift = std::abs(robot.lateral_position) < config.drift_threshold
                ? config.coeff_drift
                : config.coeff_drift *
                      std::exp(-std::abs(config.drift_scale * robot.lateral_position));
  r.hip_roll = config.coeff_hip_roll * std::exp(-std::abs(robot.hip_roll_rate));
  r.hip_yaw = config.coeff_hip_yaw * std::exp(-std::abs(robot.hip_yaw_rate));

  // Sum in the coefficient declaration order so a perfect match reproduces
  // the divisor bit for bit and totals exactly 1.
  r.total = (r.orientation + r.velocity_x + r.velocity_y + r.velocity_z +
             r.angular_momentum + r.foot_position_x + r.foot_position_y + r.clock +
             r.foot_orientation + r.foot_height + r.drift + r.hip_roll + r.hip_yaw) /
            config.divisor;
  return r;
}

namespace detail {

/// Periodic distance from t to the interval set `windows` within one period:
/// zero inside a window, otherwise the shortest wrap-aware gap to an edge.
/// Also reports the largest possible such distance (half the widest gap
/// between consecutive windows), the normalizer that puts anti-phase at 1.
inline std::pair<double, double> window_distance(
    double t, const std::vector<std::pair<double, double>>& windows, double period) {
  double dist = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : windows) {
    if (t >= a && t < b) {
      dist = 0.0;
      break;
    }
    for (double shift : {-period, 0.0, period}) {
      dist = std::min(dist, std::abs(t - (a + shift)));
      dist = std::min(dist, std::abs(t - (b + shift)));
    }
  }
  double widest_gap = 0.0;
  for (size_t i = 0; i < windows.size(); ++i) {
    const double end = windows[i].second;
    const double next_start =
        i + 1 < windows.size() ? windows[i + 1].first : windows[0].first + period;
    widest_gap = std::max(widest_gap, next_start - end);
  }
  return {dist, 0.5 * widest_gap};
}

/// Complement of an interval set within [0, period).
inline std::vector<std::pair<double, double>> complement_windows(
    const std::vector<std::pair<double, double>>& windows, double period) {
  std::vector<std::pair<double, double>> out;
  double cursor = 0.0;
  for (const auto& [a, b] : windows) {
    if (a > cursor + 1e-12) out.push_back({cursor, a});
    cursor = std::max(cursor, b);
  }
  if (cursor < period - 1e-12) out.push_back({cursor, period});
  return out;
}

inline double foot_clock_penalty(double t, bool in_contact,
                                 const std::vector<std::pair<double, double>>& stance,
                                 double period) {
  const std::vector<std::pair<double, double>> target =
      in_contact ? stance : complement_windows(stance, period);
  if (target.empty()) return 1.0;  // the measured contact truth can never match
  const auto [dist, max_dist] = window_distance(t, target, period);
  return max_dist > 0.0 ? std::min(dist / max_dist, 1.0) : 0.0;
}

}  // namespace detail

/// Piecewise-linear stepping-phase penalty. Zero whenever each measured foot
/// contact agrees with the reference stance/swing window at phase t; away
/// from agreement it rises linearly with the phase offset to the nearest
/// matching window, normalized so a contact pattern exactly anti-phase to
/// the reference scores 1. Periodic in t with the reference gait period,
/// and continuous except where the measured contact truth flips.
inline double clock_value(double t, const StanceSchedule& schedule, bool left_contact,
                          bool right_contact) {
  if (!(schedule.period > 0.0))
    throw UsageError("clock_value: schedule period must be positive");
  if (schedule.left.empty() && schedule.right.empty())
    throw UsageError("clock_value: schedule has no stance windows");
  double phase = std::fmod(t, schedule.period);
  if (phase < 0.0) phase += schedule.period;
  const double left =
      detail::foot_clock_penalty(phase, left_contact, schedule.left, schedule.period);
  const double right =
      detail::foot_clock_penalty(phase, right_contact, schedule.right, schedule.period);
  return 0.5 * (left + right);
}

/// Builds the reference summary a sampled trajectory point implies: attitude,
/// velocity and L = Jω from the state, per-foot relative positions from the
/// sampled contacts, and flat foot soles at the mode's nominal heading. Feet
/// are padded to `foot_count` by repeating the last contact (a flight sample
/// still references the attitude-aligned sole orientation).
inline ReferenceSummary reference_summary(const TrajectorySample& point,
                                          const Trajectory& traj, const SRBMParams& params,
                                          int foot_count = 2) {
  ReferenceSummary ref;
  ref.orientation = point.state.orientation;
  ref.velocity = point.state.velocity;
  ref.angular_momentum = params.inertia * point.state.omega;
  const Quat sole = Quat::from_yaw(traj.modes[point.mode].heading);
  for (int f = 0; f < foot_count; ++f) {
    FootReference foot;
    foot.orientation = sole;
    if (!point.contacts.empty()) {
      const Contact& c = point.contacts[std::min<size_t>(f, point.contacts.size() - 1)];
      foot.relative_position = (c.foot - point.state.position).head<2>();
    }
    ref.feet.push_back(foot);
  }
  return ref;
}

}  // namespace srbmtraj
