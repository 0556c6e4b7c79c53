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

#include <vector>

#include "srbmtraj/errors.hpp"
#include "srbmtraj/maneuver_spec.hpp"

namespace srbmtraj {

/// Index map from (mode, knot, field) onto the flat decision vector.
///
/// Per-mode block layout, contiguous in maneuver order:
///   [states: knots × 13][GRFs: knots × 3 per contact][feet: 3 per contact][duration]
/// giving per-mode lengths 13N+1 (flight), 16N+4 (single stance) and
/// 19N+7 (double stance).
class DecisionLayout {
 public:
  static constexpr int kStateDim = 13;

  explicit DecisionLayout(const std::vector<HybridMode>& modes) {
    int offset = 0;
    blocks_.reserve(modes.size());
    for (size_t m = 0; m < modes.size(); ++m) {
      if (modes[m].knots < 2)
        throw InvalidSpecError("layout: mode " + std::to_string(m) +
                               " needs at least 2 knots");
      Block b;
      b.kind = modes[m].kind;
      b.knots = modes[m].knots;
      b.contacts = modes[m].contact_count();
      b.offset = offset;
      b.length = kStateDim * b.knots + 3 * b.contacts * b.knots + 3 * b.contacts + 1;
      offset += b.length;
      blocks_.push_back(b);
    }
    total_ = offset;
  }

  int total() const { return total_; }
  int mode_count() const { return static_cast<int>(blocks_.size()); }
  int knots(int mode) const { return blocks_[mode].knots; }
  int contacts(int mode) const { return blocks_[mode].contacts; }
  ModeKind kind(int mode) const { return blocks_[mode].kind; }
  int mode_offset(int mode) const { return blocks_[mode].offset; }
  int mode_length(int mode) const { return blocks_[mode].length; }

  int state_index(int mode, int knot, int component) const {
    return blocks_[mode].offset + kStateDim * knot + component;
  }
  int grf_index(int mode, int knot, int contact, int axis) const {
    const Block& b = blocks_[mode];
    return b.offset + kStateDim * b.knots + 3 * (knot * b.contacts + contact) + axis;
  }
  int foot_index(int mode, int contact, int axis) const {
    const Block& b = blocks_[mode];
    return b.offset + (kStateDim + 3 * b.contacts) * b.knots + 3 * contact + axis;
  }
  int duration_index(int mode) const {
    const Block& b = blocks_[mode];
    return b.offset + (kStateDim + 3 * b.contacts) * b.knots + 3 * b.contacts;
  }

  // Typed accessors over a flat decision vector.

  SRBMState state(const Eigen::VectorXd& z, int mode, int knot) const {
    return SRBMState::from_vector(z.segment<13>(state_index(mode, knot, 0)));
  }
  void set_state(Eigen::VectorXd& z, int mode, int knot, const SRBMState& s) const {
    z.segment<13>(state_index(mode, knot, 0)) = s.to_vector();
  }
  Eigen::Vector3d grf(const Eigen::VectorXd& z, int mode, int knot, int contact) const {
    return z.segment<3>(grf_index(mode, knot, contact, 0));
  }
  void set_grf(Eigen::VectorXd& z, int mode, int knot, int contact,
               const Eigen::Vector3d& f) const {
    z.segment<3>(grf_index(mode, knot, contact, 0)) = f;
  }
  Eigen::Vector3d foot(const Eigen::VectorXd& z, int mode, int contact) const {
    return z.segment<3>(foot_index(mode, contact, 0));
  }
  void set_foot(Eigen::VectorXd& z, int mode, int contact, const Eigen::Vector3d& p) const {
    z.segment<3>(foot_index(mode, contact, 0)) = p;
  }
  double duration(const Eigen::VectorXd& z, int mode) const {
    return z[duration_index(mode)];
  }
  void set_duration(Eigen::VectorXd& z, int mode, double t) const {
    z[duration_index(mode)] = t;
  }

  void check_dimension(const Eigen::VectorXd& z) const {
    if (z.size() != total_)
      throw ShapeError("decision vector has length " + std::to_string(z.size()) +
                       ", layout expects " + std::to_string(total_));
  }

 private:
  struct Block {
    ModeKind kind;
    int knots;
    int contacts;
    int offset;
    int length;
  };
  std::vector<Block> blocks_;
  int total_ = 0;
};

}  // namespace srbmtraj
