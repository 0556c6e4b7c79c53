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

#include "srbmtraj/errors.hpp"

namespace srbmtraj {

/// Hardware-transferability limits applied to every stance phase. Defaults
/// are desk-scale implementation values, not measured robot parameters; all
/// are expected to be overridden from the config file for a specific model.
struct TransferabilityConfig {
  double l_max = 1.0;          // m, maximum leg length
  double psi = 0.5;            // cosine of the maximum leg lean from body vertical
  double mu = 0.8;             // friction coefficient (enters as mu * Fz^2)
  double f_max = 1200.0;       // N, maximum GRF magnitude
  double fdot_max = 30000.0;   // N/s, maximum vertical-force rate (yank)
  double omega_max = 6.0;      // rad/s, per angular velocity component
  double delta_min = 0.08;     // m, minimum lateral foot offset from the CoM path

  void validate() const {
    if (!(l_max > 0.0)) throw InvalidSpecError("transferability: l_max must be positive");
    if (!(psi > 0.0) || psi > 1.0)
      throw InvalidSpecError("transferability: psi must be in (0, 1]");
    if (!(mu > 0.0) || mu > 2.0)
      throw InvalidSpecError("transferability: mu must be in (0, 2]");
    if (!(f_max > 0.0)) throw InvalidSpecError("transferability: f_max must be positive");
    if (!(fdot_max > 0.0))
      throw InvalidSpecError("transferability: fdot_max must be positive");
    if (!(omega_max > 0.0))
      throw InvalidSpecError("transferability: omega_max must be positive");
    if (!(delta_min > 0.0))
      throw InvalidSpecError("transferability: delta_min must be positive");
  }
};

}  // namespace srbmtraj
