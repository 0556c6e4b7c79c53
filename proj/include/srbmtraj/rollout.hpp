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

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "srbmtraj/srbm.hpp"

namespace srbmtraj {

/// Time-interpolable contact schedule: returns the active contacts (feet and
/// GRFs) at time t. Used by the verification integrator.
using ContactSchedule = std::function<ContactSet(double)>;

/// Classic fixed-step RK4 with quaternion renormalization after every step.
/// Returns the state at t = 0, dt, 2·dt, …, duration (final step shortened
/// when duration is not a multiple of dt). Independent of the collocation
/// path; used to cross-check solved trajectories.
inline std::vector<SRBMState> rk4_rollout(const SRBMState& initial,
                                          const ContactSchedule& schedule,
                                          const SRBMParams& params, double duration,
                                          double dt) {
  if (!(dt > 0.0)) throw UsageError("rk4_rollout: dt must be positive");
  if (duration < dt) throw UsageError("rk4_rollout: duration must be at least dt");
  params.validate();
  const Eigen::Matrix3d inertia_inv = params.inertia_inverse();

  std::vector<SRBMState> out;
  out.reserve(static_cast<size_t>(duration / dt) + 2);
  SRBMState state = initial;
  state.orientation = state.orientation.normalized();
  out.push_back(state);

  double t = 0.0;
  int step = 0;
  while (t < duration - 1e-15) {
    const double h = std::min(dt, duration - t);
    const Vector13d x = state.to_vector();

    const Vector13d k1 = detail::state_derivative(state, schedule(t), params, inertia_inv);
    const Vector13d k2 = detail::state_derivative(
        SRBMState::from_vector(x + 0.5 * h * k1), schedule(t + 0.5 * h), params, inertia_inv);
    const Vector13d k3 = detail::state_derivative(
        SRBMState::from_vector(x + 0.5 * h * k2), schedule(t + 0.5 * h), params, inertia_inv);
    const Vector13d k4 = detail::state_derivative(
        SRBMState::from_vector(x + h * k3), schedule(t + h), params, inertia_inv);

    const Vector13d next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite())
      throw DivergenceError("rk4_rollout: non-finite state at step " + std::to_string(step),
                            step);
    state = SRBMState::from_vector(next);
    state.orientation = state.orientation.normalized();
    out.push_back(state);
    t += h;
    ++step;
  }
  return out;
}

}  // namespace srbmtraj
