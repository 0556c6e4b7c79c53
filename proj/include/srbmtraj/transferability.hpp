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

#include "srbmtraj/layout.hpp"
#include "srbmtraj/maneuver_spec.hpp"

namespace srbmtraj {

// Transferability residual builders. Every residual follows the g(z) <= 0
// convention; a feasible point gives non-positive entries. Each builder has a
// *_size companion so callers can preallocate, and a writer overload used by
// the assembled NLP. The convenience overloads returning VectorXd are for
// tests and diagnostics.

namespace transfer {

inline int leg_length_size(const DecisionLayout& layout) {
  int n = 0;
  for (int m = 0; m < layout.mode_count(); ++m)
    n += layout.knots(m) * layout.contacts(m);
  return n;
}

/// |p_c − p_f| − L_max ≤ 0 per stance knot, per contact.
inline void leg_length(const Eigen::VectorXd& z, const DecisionLayout& layout,
                       const TransferabilityConfig& cfg, Eigen::Ref<Eigen::VectorXd> out) {
  int pos = 0;
  for (int m = 0; m < layout.mode_count(); ++m) {
    for (int c = 0; c < layout.contacts(m); ++c) {
      const Eigen::Vector3d foot = z.segment<3>(layout.foot_index(m, c, 0));
      for (int k = 0; k < layout.knots(m); ++k) {
        const Eigen::Vector3d com = z.segment<3>(layout.state_index(m, k, comp::kPosX));
        out[pos++] = (com - foot).norm() - cfg.l_max;
      }
    }
  }
}

inline int leg_angle_size(const DecisionLayout& layout) { return leg_length_size(layout); }

/// ψ − ẑ_body · (p_c − p_f)/|p_c − p_f| ≤ 0 per stance knot, per contact,
/// where ẑ_body is the body vertical axis expressed in world coordinates, so
/// the dot product is 1 with the foot directly below an upright body.
inline void leg_angle(const Eigen::VectorXd& z, const DecisionLayout& layout,
                      const TransferabilityConfig& cfg, Eigen::Ref<Eigen::VectorXd> out) {
  int pos = 0;
  for (int m = 0; m < layout.mode_count(); ++m) {
    if (layout.contacts(m) == 0) continue;
    for (int c = 0; c < layout.contacts(m); ++c) {
      const Eigen::Vector3d foot = z.segment<3>(layout.foot_index(m, c, 0));
      for (int k = 0; k < layout.knots(m); ++k) {
        const Eigen::Vector3d com = z.segment<3>(layout.state_index(m, k, comp::kPosX));
        const Quat q = Quat::from_vec(z.segment<4>(layout.state_index(m, k, comp::kQuatW)));
        const Eigen::Vector3d leg = com - foot;
        const double len = leg.norm();
        if (len < 1e-12)
          throw SingularGeometryError("leg_angle: zero-length leg vector at mode " +
                                      std::to_string(m) + " knot " + std::to_string(k));
        const Eigen::Vector3d body_up = q.rotate(Eigen::Vector3d::UnitZ());
        out[pos++] = cfg.psi - body_up.dot(leg) / len;
      }
    }
  }
}

inline int friction_cone_size(const DecisionLayout& layout) {
  return 2 * leg_length_size(layout);
}

/// Quadratic cone F_x² + F_y² − μ F_z² ≤ 0 plus unilateral −F_z ≤ 0, per
/// stance knot, per contact. μ multiplies F_z² exactly as configured.
inline void friction_cone(const Eigen::VectorXd& z, const DecisionLayout& layout,
                          const TransferabilityConfig& cfg,
                          Eigen::Ref<Eigen::VectorXd> out) {
  int pos = 0;
  for (int m = 0; m < layout.mode_count(); ++m) {
    for (int c = 0; c < layout.contacts(m); ++c) {
      for (int k = 0; k < layout.knots(m); ++k) {
        const Eigen::Vector3d f = z.segment<3>(layout.grf_index(m, k, c, 0));
        out[pos++] = f.x() * f.x() + f.y() * f.y() - cfg.mu * f.z() * f.z();
        out[pos++] = -f.z();
      }
    }
  }
}

inline int max_force_size(const DecisionLayout& layout) { return leg_length_size(layout); }

/// |F|² − F_max² ≤ 0 per stance knot, per contact.
inline void max_force(const Eigen::VectorXd& z, const DecisionLayout& layout,
                      const TransferabilityConfig& cfg, Eigen::Ref<Eigen::VectorXd> out) {
  int pos = 0;
  for (int m = 0; m < layout.mode_count(); ++m) {
    for (int c = 0; c < layout.contacts(m); ++c) {
      for (int k = 0; k < layout.knots(m); ++k) {
        const Eigen::Vector3d f = z.segment<3>(layout.grf_index(m, k, c, 0));
        out[pos++] = f.squaredNorm() - cfg.f_max * cfg.f_max;
      }
    }
  }
}

inline int yank_size(const DecisionLayout& layout) {
  int n = 0;
  for (int m = 0; m < layout.mode_count(); ++m)
    n += 2 * (layout.knots(m) - 1) * layout.contacts(m);
  return n;
}

/// Vertical-force rate by finite difference between adjacent knots:
/// ±(F_z(k+1) − F_z(k))/h − Ḟ_max ≤ 0 with h = T/(N−1) from the mode's
/// duration decision variable.
inline void yank_bound(const Eigen::VectorXd& z, const DecisionLayout& layout,
                       const TransferabilityConfig& cfg, Eigen::Ref<Eigen::VectorXd> out) {
  int pos = 0;
  for (int m = 0; m < layout.mode_count(); ++m) {
    if (layout.contacts(m) == 0) continue;
    const double h = z[layout.duration_index(m)] / (layout.knots(m) - 1);
    for (int c = 0; c < layout.contacts(m); ++c) {
      for (int k = 0; k + 1 < layout.knots(m); ++k) {
        const double dfz = z[layout.grf_index(m, k + 1, c, 2)] - z[layout.grf_index(m, k, c, 2)];
        const double rate = dfz / h;
        out[pos++] = rate - cfg.fdot_max;
        out[pos++] = -rate - cfg.fdot_max;
      }
    }
  }
}

inline int omega_bound_size(const DecisionLayout& layout) {
  int n = 0;
  for (int m = 0; m < layout.mode_count(); ++m) n += 6 * layout.knots(m);
  return n;
}

/// Componentwise |ω_i| − ω_max ≤ 0 at every knot of every mode.
inline void omega_bound(const Eigen::VectorXd& z, const DecisionLayout& layout,
                        const TransferabilityConfig& cfg, Eigen::Ref<Eigen::VectorXd> out) {
  int pos = 0;
  for (int m = 0; m < layout.mode_count(); ++m) {
    for (int k = 0; k < layout.knots(m); ++k) {
      for (int axis = 0; axis < 3; ++axis) {
        const double w = z[layout.state_index(m, k, comp::kOmegaX + axis)];
        out[pos++] = w - cfg.omega_max;
        out[pos++] = -w - cfg.omega_max;
      }
    }
  }
}

inline int footstep_size(const DecisionLayout& layout) {
  int n = 0;
  for (int m = 0; m < layout.mode_count(); ++m) n += 2 * layout.contacts(m);
  return n;
}

/// Footstep half-plane heuristic: for each stance contact, the foot must lie
/// at least δ_min to its own side of two lines along the mode's nominal
/// heading, one through the CoM xy-position at the first knot (touchdown) and
/// one through the last (liftoff). Keeps feet from crossing the CoM path.
inline void footstep_halfplanes(const Eigen::VectorXd& z, const DecisionLayout& layout,
                                const TransferabilityConfig& cfg, const ManeuverSpec& spec,
                                Eigen::Ref<Eigen::VectorXd> out) {
  int pos = 0;
  for (int m = 0; m < layout.mode_count(); ++m) {
    if (layout.contacts(m) == 0) continue;
    const double heading = spec.headings[m];
    if (!std::isfinite(heading))
      throw InvalidSpecError("footstep_halfplanes: non-finite heading for mode " +
                             std::to_string(m));
    // Unit normal pointing to the left of the heading.
    const Eigen::Vector2d n_left(-std::sin(heading), std::cos(heading));
    const Eigen::Vector2d com_first =
        z.segment<2>(layout.state_index(m, 0, comp::kPosX));
    const Eigen::Vector2d com_last =
        z.segment<2>(layout.state_index(m, layout.knots(m) - 1, comp::kPosX));
    for (int c = 0; c < layout.contacts(m); ++c) {
      const double side = spec.contact_side(m, c) == StanceSide::Left ? 1.0 : -1.0;
      const Eigen::Vector2d foot = z.segment<2>(layout.foot_index(m, c, 0));
      out[pos++] = cfg.delta_min - side * n_left.dot(foot - com_first);
      out[pos++] = cfg.delta_min - side * n_left.dot(foot - com_last);
    }
  }
}

// Allocating overloads.

inline Eigen::VectorXd leg_length(const Eigen::VectorXd& z, const DecisionLayout& layout,
                                  const TransferabilityConfig& cfg) {
  Eigen::VectorXd out(leg_length_size(layout));
  leg_length(z, layout, cfg, out);
  return out;
}
inline Eigen::VectorXd leg_angle(const Eigen::VectorXd& z, const DecisionLayout& layout,
                                 const TransferabilityConfig& cfg) {
  Eigen::VectorXd out(leg_angle_size(layout));
  leg_angle(z, layout, cfg, out);
  return out;
}
inline Eigen::VectorXd friction_cone(const Eigen::VectorXd& z, const DecisionLayout& layout,
                                     const TransferabilityConfig& cfg) {
  Eigen::VectorXd out(friction_cone_size(layout));
  friction_cone(z, layout, cfg, out);
  return out;
}
inline Eigen::VectorXd max_force(const Eigen::VectorXd& z, const DecisionLayout& layout,
                                 const TransferabilityConfig& cfg) {
  Eigen::VectorXd out(max_force_size(layout));
  max_force(z, layout, cfg, out);
  return out;
}
inline Eigen::VectorXd yank_bound(const Eigen::VectorXd& z, const DecisionLayout& layout,
                                  const TransferabilityConfig& cfg) {
  Eigen::VectorXd out(yank_size(layout));
  yank_bound(z, layout, cfg, out);
  return out;
}
inline Eigen::VectorXd omega_bound(const Eigen::VectorXd& z, const DecisionLayout& layout,
                                   const TransferabilityConfig& cfg) {
  Eigen::VectorXd out(omega_bound_size(layout));
  omega_bound(z, layout, cfg, out);
  return out;
}
inline Eigen::VectorXd footstep_halfplanes(const Eigen::VectorXd& z,
                                           const DecisionLayout& layout,
                                           const TransferabilityConfig& cfg,
                                           const ManeuverSpec& spec) {
  Eigen::VectorXd out(footstep_size(layout));
  footstep_halfplanes(z, layout, cfg, spec, out);
  return out;
}

}  // namespace transfer
}  // namespace srbmtraj
