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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "srbmtraj/layout.hpp"
#include "srbmtraj/maneuver_spec.hpp"
#include "srbmtraj/rollout.hpp"
#include "srbmtraj/solver.hpp"
#include "srbmtraj/srbm.hpp"

namespace srbmtraj {

/// One hybrid phase of a solved maneuver: knot states, per-knot GRFs for each
/// contact slot, fixed foot positions, the solved duration, and the nominal
/// heading the phase was planned along.
struct ModeTrajectory {
  ModeKind kind = ModeKind::SingleStance;
  StanceSide side = StanceSide::Left;  // single stance only; double is (L, R)
  double heading = 0.0;                // rad
  double duration = 0.0;               // s
  std::vector<SRBMState> states;                    // one per knot
  std::vector<std::vector<Eigen::Vector3d>> grfs;   // [knot][contact], N
  std::vector<Eigen::Vector3d> feet;                // [contact], world m

  int knots() const { return static_cast<int>(states.size()); }
  int contacts() const { return static_cast<int>(feet.size()); }
};

/// A solved maneuver: per-mode knot arrays plus the solver metadata that
/// certifies them. The wall time of the producing solve is deliberately not
/// stored so that identical solves serialize to identical bytes.
struct Trajectory {
  std::string kind;          // maneuver family ("running", "turning", ...)
  std::string config_json;   // one-line provenance; "{}" when unknown
  std::vector<ModeTrajectory> modes;

  SolveStatus status = SolveStatus::NumericalFailure;
  double objective = 0.0;
  double max_equality_violation = 0.0;
  double max_inequality_violation = 0.0;
  double stationarity = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;

  int mode_count() const { return static_cast<int>(modes.size()); }
  int total_knots() const {
    int n = 0;
    for (const auto& m : modes) n += m.knots();
    return n;
  }
  double total_duration() const {
    double t = 0.0;
    for (const auto& m : modes) t += m.duration;
    return t;
  }

  const SRBMState& first_state() const { return modes.front().states.front(); }
  const SRBMState& final_state() const { return modes.back().states.back(); }

  std::vector<HybridMode> hybrid_modes() const {
    std::vector<HybridMode> out;
    out.reserve(modes.size());
    for (const auto& m : modes) {
      HybridMode h;
      h.kind = m.kind;
      h.knots = m.knots();
      h.t_min = m.duration;
      h.t_max = m.duration;
      out.push_back(h);
    }
    return out;
  }

  void validate() const {
    if (modes.empty()) throw UsageError("trajectory has no modes");
    for (size_t m = 0; m < modes.size(); ++m) {
      const auto& mode = modes[m];
      const std::string who = "trajectory mode " + std::to_string(m);
      if (mode.knots() < 2) throw UsageError(who + ": needs at least 2 knots");
      if (!(mode.duration > 0.0)) throw UsageError(who + ": duration must be positive");
      const int contacts = HybridMode{mode.kind}.contact_count();
      if (mode.contacts() != contacts)
        throw UsageError(who + ": has " + std::to_string(mode.contacts()) +
                         " feet, kind expects " + std::to_string(contacts));
      if (static_cast<int>(mode.grfs.size()) != mode.knots())
        throw UsageError(who + ": GRF rows must match knot count");
      for (const auto& row : mode.grfs)
        if (static_cast<int>(row.size()) != contacts)
          throw UsageError(who + ": GRF columns must match contact count");
    }
  }
};

/// Packs a solved decision vector into a Trajectory, carrying over the
/// maneuver structure (kinds, sides, headings) and the solve metadata.
inline Trajectory make_trajectory(const ManeuverSpec& spec, const SolveResult& result) {
  const DecisionLayout layout(spec.modes);
  layout.check_dimension(result.z);

  Trajectory traj;
  traj.kind = spec.kind;
  traj.config_json = "{}";
  traj.status = result.status;
  traj.objective = result.objective;
  traj.max_equality_violation = result.max_equality_violation;
  traj.max_inequality_violation = result.max_inequality_violation;
  traj.stationarity = result.stationarity;
  traj.outer_iterations = result.outer_iterations;
  traj.inner_iterations = result.inner_iterations;

  traj.modes.resize(spec.modes.size());
  for (size_t m = 0; m < spec.modes.size(); ++m) {
    ModeTrajectory& mode = traj.modes[m];
    mode.kind = spec.modes[m].kind;
    mode.side = spec.stance_sides[m];
    mode.heading = spec.headings[m];
    mode.duration = layout.duration(result.z, static_cast<int>(m));
    const int n = spec.modes[m].knots;
    const int contacts = spec.modes[m].contact_count();
    mode.states.reserve(n);
    mode.grfs.assign(n, std::vector<Eigen::Vector3d>(contacts));
    for (int k = 0; k < n; ++k) {
      mode.states.push_back(layout.state(result.z, static_cast<int>(m), k));
      for (int c = 0; c < contacts; ++c)
        mode.grfs[k][c] = layout.grf(result.z, static_cast<int>(m), k, c);
    }
    mode.feet.resize(contacts);
    for (int c = 0; c < contacts; ++c)
      mode.feet[c] = layout.foot(result.z, static_cast<int>(m), c);
  }
  return traj;
}

/// Inverse of make_trajectory: flattens the knot arrays back onto the
/// decision layout. The result warm-starts a solve of the same structure.
inline Eigen::VectorXd decision_vector(const Trajectory& traj) {
  traj.validate();
  const DecisionLayout layout(traj.hybrid_modes());
  Eigen::VectorXd z(layout.total());
  for (int m = 0; m < traj.mode_count(); ++m) {
    const ModeTrajectory& mode = traj.modes[m];
    layout.set_duration(z, m, mode.duration);
    for (int k = 0; k < mode.knots(); ++k) {
      layout.set_state(z, m, k, mode.states[k]);
      for (int c = 0; c < mode.contacts(); ++c)
        layout.set_grf(z, m, k, c, mode.grfs[k][c]);
    }
    for (int c = 0; c < mode.contacts(); ++c) layout.set_foot(z, m, c, mode.feet[c]);
  }
  return z;
}

/// Distance between two body states normalized across the four state groups:
/// √(mean of |Δp|², d(q₁,q₂)², |Δv|², |Δω|²). Dimensionally mixed but scale
/// balanced, the metric every consistency threshold in this library uses.
inline double normalized_state_distance(const SRBMState& a, const SRBMState& b) {
  const double dp = (a.position - b.position).squaredNorm();
  const double dq = quat_distance(a.orientation, b.orientation);
  const double dv = (a.velocity - b.velocity).squaredNorm();
  const double dw = (a.omega - b.omega).squaredNorm();
  return std::sqrt(0.25 * (dp + dq * dq + dv + dw));
}

/// Interpolated point on a trajectory: body state, active contacts with
/// interpolated GRFs, phase clock in [0, 1), and the owning mode.
struct TrajectorySample {
  SRBMState state;
  ContactSet contacts;
  double clock = 0.0;
  int mode = 0;
  bool left_contact = false;
  bool right_contact = false;
};

namespace detail {

inline void mode_contact_flags(const ModeTrajectory& mode, bool& left, bool& right) {
  left = right = false;
  switch (mode.kind) {
    case ModeKind::Flight: break;
    case ModeKind::SingleStance:
      (mode.side == StanceSide::Left ? left : right) = true;
      break;
    case ModeKind::DoubleStance: left = right = true; break;
  }
}

}  // namespace detail

/// Samples the trajectory at time t. Within a mode, position, velocity and
/// angular velocity interpolate linearly between knots, attitude spherically,
/// and GRFs linearly; feet are fixed per mode. With looping enabled, t wraps
/// modulo the total duration and the horizontal position is re-based each
/// loop by the net (x, y) displacement, so a gait repeated for many loops
/// keeps advancing instead of snapping back to the origin.
inline TrajectorySample sample(const Trajectory& traj, double t, bool looping = false) {
  traj.validate();
  if (t < 0.0) throw UsageError("sample: t must be non-negative");
  const double total = traj.total_duration();

  double shift_x = 0.0, shift_y = 0.0;
  if (looping) {
    const double loops = std::floor(t / total);
    if (loops > 0.0) {
      shift_x = loops * (traj.final_state().position.x() - traj.first_state().position.x());
      shift_y = loops * (traj.final_state().position.y() - traj.first_state().position.y());
      t -= loops * total;
    }
  } else if (t > total) {
    throw UsageError("sample: t exceeds the total duration and looping is off");
  }

  // Locate the owning mode; boundary instants belong to the later mode.
  int m = 0;
  double start = 0.0;
  while (m + 1 < traj.mode_count() && t >= start + traj.modes[m].duration) {
    start += traj.modes[m].duration;
    ++m;
  }
  const ModeTrajectory& mode = traj.modes[m];
  const int n = mode.knots();
  const double h = mode.duration / (n - 1);
  double local = std::min(t - start, mode.duration);
  int k = std::min(static_cast<int>(local / h), n - 2);
  const double alpha = std::clamp(local / h - k, 0.0, 1.0);

  const SRBMState& a = mode.states[k];
  const SRBMState& b = mode.states[k + 1];
  TrajectorySample out;
  out.mode = m;
  out.clock = std::clamp((start + local) / total, 0.0, 1.0);
  if (out.clock >= 1.0) out.clock = 0.0;
  out.state.position = (1.0 - alpha) * a.position + alpha * b.position;
  out.state.orientation = slerp(a.orientation.normalized(), b.orientation.normalized(), alpha);
  out.state.velocity = (1.0 - alpha) * a.velocity + alpha * b.velocity;
  out.state.omega = (1.0 - alpha) * a.omega + alpha * b.omega;
  out.state.position.x() += shift_x;
  out.state.position.y() += shift_y;

  out.contacts.resize(mode.contacts());
  for (int c = 0; c < mode.contacts(); ++c) {
    out.contacts[c].foot = mode.feet[c];
    out.contacts[c].foot.x() += shift_x;
    out.contacts[c].foot.y() += shift_y;
    out.contacts[c].force = (1.0 - alpha) * mode.grfs[k][c] + alpha * mode.grfs[k + 1][c];
  }
  detail::mode_contact_flags(mode, out.left_contact, out.right_contact);
  return out;
}

/// Per-foot stance windows over one gait period, in seconds from the start
/// of the trajectory. Consecutive windows for the same foot are merged.
struct StanceSchedule {
  double period = 0.0;
  std::vector<std::pair<double, double>> left;
  std::vector<std::pair<double, double>> right;
};

inline StanceSchedule stance_schedule(const Trajectory& traj) {
  traj.validate();
  StanceSchedule out;
  out.period = traj.total_duration();
  auto push = [](std::vector<std::pair<double, double>>& windows, double a, double b) {
    if (!windows.empty() && std::abs(windows.back().second - a) < 1e-12)
      windows.back().second = b;
    else
      windows.push_back({a, b});
  };
  double t = 0.0;
  for (const auto& mode : traj.modes) {
    bool left, right;
    detail::mode_contact_flags(mode, left, right);
    if (left) push(out.left, t, t + mode.duration);
    if (right) push(out.right, t, t + mode.duration);
    t += mode.duration;
  }
  return out;
}

/// Replays the trajectory's interpolated GRF/foot schedule through the
/// independent RK4 integrator from the trajectory's first knot, and returns
/// the normalized state distance between where the rollout lands and the
/// final knot. Small values mean the collocation solution is dynamically
/// consistent, not just feasible on the knot grid.
inline double rollout_consistency(const Trajectory& traj, const SRBMParams& params,
                                  double dt = 1e-4) {
  traj.validate();
  const double total = traj.total_duration();
  ContactSchedule schedule = [&traj, total](double t) {
    return sample(traj, std::min(t, total)).contacts;
  };
  const std::vector<SRBMState> states =
      rk4_rollout(traj.first_state(), schedule, params, total, dt);
  return normalized_state_distance(states.back(), traj.final_state());
}

// --- Text serialization -----------------------------------------------------
//
// Line-oriented, versioned, decimal text at 17 significant digits so doubles
// round-trip exactly. Layout:
//
//   srbmtraj trajectory 1
//   kind <family>
//   config <one-line JSON>
//   status <name>
//   metadata <objective> <eq viol> <ineq viol> <stationarity> <outer> <inner>
//   modes <count>
//   mode <kind> <side> <heading> <duration> <knots> <contacts>
//   knot <13 state values>            (× knots)
//   grf <3 values per contact>        (× knots)
//   foot <3 values>                   (× contacts)
//   end trajectory

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Splits a line into whitespace-separated tokens.
inline std::vector<std::string> tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

class LineReader {
 public:
  LineReader(std::istream& in, std::string context) : in_(in), context_(std::move(context)) {}

  std::string next(const std::string& expected) {
    std::string line;
    while (std::getline(in_, line)) {
      ++number_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return line;
    }
    throw ParseError(context_ + ": unexpected end of file, expected " + expected);
  }

  /// Next line, which must start with `key`; returns the tokens after it.
  std::vector<std::string> expect(const std::string& key, int value_count = -1) {
    const std::string line = next("'" + key + "'");
    std::vector<std::string> toks = tokens(line);
    if (toks.empty() || toks[0] != key)
      throw ParseError(context_ + " line " + std::to_string(number_) + ": expected '" +
                       key + "', found '" + line + "'");
    toks.erase(toks.begin());
    if (value_count >= 0 && static_cast<int>(toks.size()) != value_count)
      throw ParseError(context_ + " line " + std::to_string(number_) + ": '" + key +
                       "' needs " + std::to_string(value_count) + " values, found " +
                       std::to_string(toks.size()));
    return toks;
  }

  /// Next line, which must start with `key`; returns the raw remainder.
  std::string expect_rest(const std::string& key) {
    const std::string line = next("'" + key + "'");
    if (line.rfind(key + " ", 0) != 0 && line != key)
      throw ParseError(context_ + " line " + std::to_string(number_) + ": expected '" +
                       key + "', found '" + line + "'");
    return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
  }

  double to_double(const std::string& tok) const {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw ParseError(context_ + " line " + std::to_string(number_) +
                       ": not a number: '" + tok + "'");
    return v;
  }

  int to_int(const std::string& tok) const {
    const double v = to_double(tok);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
      throw ParseError(context_ + " line " + std::to_string(number_) +
                       ": not an integer: '" + tok + "'");
    return i;
  }

  int line_number() const { return number_; }

 private:
  std::istream& in_;
  std::string context_;
  int number_ = 0;
};

inline SolveStatus parse_status(const std::string& name, const LineReader& reader) {
  for (SolveStatus s : {SolveStatus::Converged, SolveStatus::MaxIterations,
                        SolveStatus::Infeasible, SolveStatus::NumericalFailure})
    if (name == to_string(s)) return s;
  throw ParseError("line " + std::to_string(reader.line_number()) +
                   ": unknown solve status '" + name + "'");
}

inline ModeKind parse_mode_kind(const std::string& name, const LineReader& reader) {
  for (ModeKind k : {ModeKind::Flight, ModeKind::SingleStance, ModeKind::DoubleStance})
    if (name == to_string(k)) return k;
  throw ParseError("line " + std::to_string(reader.line_number()) +
                   ": unknown mode kind '" + name + "'");
}

inline StanceSide parse_side(const std::string& name, const LineReader& reader) {
  if (name == "left") return StanceSide::Left;
  if (name == "right") return StanceSide::Right;
  throw ParseError("line " + std::to_string(reader.line_number()) +
                   ": unknown stance side '" + name + "'");
}

}  // namespace detail

inline void write_trajectory(std::ostream& out, const Trajectory& traj) {
  traj.validate();
  auto g = detail::format_double;
  out << "srbmtraj trajectory 1\n";
  out << "kind " << (traj.kind.empty() ? "custom" : traj.kind) << "\n";
  out << "config " << (traj.config_json.empty() ? "{}" : traj.config_json) << "\n";
  out << "status " << to_string(traj.status) << "\n";
  out << "metadata " << g(traj.objective) << " " << g(traj.max_equality_violation) << " "
      << g(traj.max_inequality_violation) << " " << g(traj.stationarity) << " "
      << traj.outer_iterations << " " << traj.inner_iterations << "\n";
  out << "modes " << traj.mode_count() << "\n";
  for (const auto& mode : traj.modes) {
    out << "mode " << to_string(mode.kind) << " " << to_string(mode.side) << " "
        << g(mode.heading) << " " << g(mode.duration) << " " << mode.knots() << " "
        << mode.contacts() << "\n";
    for (const auto& s : mode.states) {
      const Vector13d v = s.to_vector();
      out << "knot";
      for (int i = 0; i < 13; ++i) out << " " << g(v[i]);
      out << "\n";
    }
    for (const auto& row : mode.grfs) {
      out << "grf";
      for (const auto& f : row) out << " " << g(f.x()) << " " << g(f.y()) << " " << g(f.z());
      out << "\n";
    }
    for (const auto& p : mode.feet)
      out << "foot " << g(p.x()) << " " << g(p.y()) << " " << g(p.z()) << "\n";
  }
  out << "end trajectory\n";
}

inline Trajectory read_trajectory(detail::LineReader& reader) {
  Trajectory traj;
  {
    const std::string header = reader.next("'srbmtraj trajectory 1'");
    const auto toks = detail::tokens(header);
    if (toks.size() != 3 || toks[0] != "srbmtraj" || toks[1] != "trajectory")
      throw ParseError("not a trajectory file (header '" + header + "')");
    if (toks[2] != "1")
      throw ParseError("unsupported trajectory format version " + toks[2] +
                       " (this reader handles version 1)");
  }
  traj.kind = reader.expect("kind", 1)[0];
  traj.config_json = reader.expect_rest("config");
  traj.status = detail::parse_status(reader.expect("status", 1)[0], reader);
  {
    const auto meta = reader.expect("metadata", 6);
    traj.objective = reader.to_double(meta[0]);
    traj.max_equality_violation = reader.to_double(meta[1]);
    traj.max_inequality_violation = reader.to_double(meta[2]);
    traj.stationarity = reader.to_double(meta[3]);
    traj.outer_iterations = reader.to_int(meta[4]);
    traj.inner_iterations = reader.to_int(meta[5]);
  }
  const int mode_count = reader.to_int(reader.expect("modes", 1)[0]);
  if (mode_count < 1) throw ParseError("trajectory must have at least one mode");
  traj.modes.resize(mode_count);
  for (int m = 0; m < mode_count; ++m) {
    ModeTrajectory& mode = traj.modes[m];
    const auto head = reader.expect("mode", 6);
    mode.kind = detail::parse_mode_kind(head[0], reader);
    mode.side = detail::parse_side(head[1], reader);
    mode.heading = reader.to_double(head[2]);
    mode.duration = reader.to_double(head[3]);
    const int knots = reader.to_int(head[4]);
    const int contacts = reader.to_int(head[5]);
    if (knots < 2) throw ParseError("mode " + std::to_string(m) + ": needs at least 2 knots");
    if (contacts != HybridMode{mode.kind}.contact_count())
      throw ParseError("mode " + std::to_string(m) + ": contact count " +
                       std::to_string(contacts) + " does not match kind " + head[0]);
    mode.states.reserve(knots);
    for (int k = 0; k < knots; ++k) {
      const auto vals = reader.expect("knot", 13);
      Vector13d v;
      for (int i = 0; i < 13; ++i) v[i] = reader.to_double(vals[i]);
      mode.states.push_back(SRBMState::from_vector(v));
    }
    mode.grfs.assign(knots, std::vector<Eigen::Vector3d>(contacts));
    for (int k = 0; k < knots; ++k) {
      const auto vals = reader.expect("grf", 3 * contacts);
      for (int c = 0; c < contacts; ++c)
        mode.grfs[k][c] = Eigen::Vector3d(reader.to_double(vals[3 * c]),
                                          reader.to_double(vals[3 * c + 1]),
                                          reader.to_double(vals[3 * c + 2]));
    }
    mode.feet.resize(contacts);
    for (int c = 0; c < contacts; ++c) {
      const auto vals = reader.expect("foot", 3);
      mode.feet[c] = Eigen::Vector3d(reader.to_double(vals[0]), reader.to_double(vals[1]),
                                     reader.to_double(vals[2]));
    }
  }
  reader.expect("end", 1);
  traj.validate();
  return traj;
}

inline Trajectory read_trajectory(std::istream& in, const std::string& context = "trajectory") {
  detail::LineReader reader(in, context);
  return read_trajectory(reader);
}

inline void save_trajectory(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  write_trajectory(out, traj);
  if (!out) throw UsageError("failed while writing '" + path + "'");
}

inline Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "' for reading");
  return read_trajectory(in, path);
}

/// Columnar table of the knot grid, one row per knot in maneuver order:
/// time, the 13 state components, GRF and foot position for up to two
/// contact slots (zero-filled where a mode has fewer), and the mode index.
/// Comma separated, one header row, 17 significant digits.
inline void write_columnar(std::ostream& out, const Trajectory& traj) {
  traj.validate();
  auto g = detail::format_double;
  out << "time_s,px_m,py_m,pz_m,qw,qx,qy,qz,vx_mps,vy_mps,vz_mps,"
         "wx_radps,wy_radps,wz_radps,"
         "f1x_n,f1y_n,f1z_n,foot1x_m,foot1y_m,foot1z_m,"
         "f2x_n,f2y_n,f2z_n,foot2x_m,foot2y_m,foot2z_m,mode\n";
  double start = 0.0;
  for (int m = 0; m < traj.mode_count(); ++m) {
    const ModeTrajectory& mode = traj.modes[m];
    const double h = mode.duration / (mode.knots() - 1);
    for (int k = 0; k < mode.knots(); ++k) {
      out << g(start + h * k);
      const Vector13d v = mode.states[k].to_vector();
      for (int i = 0; i < 13; ++i) out << "," << g(v[i]);
      for (int c = 0; c < 2; ++c) {
        Eigen::Vector3d f = Eigen::Vector3d::Zero(), p = Eigen::Vector3d::Zero();
        if (c < mode.contacts()) {
          f = mode.grfs[k][c];
          p = mode.feet[c];
        }
        out << "," << g(f.x()) << "," << g(f.y()) << "," << g(f.z());
        out << "," << g(p.x()) << "," << g(p.y()) << "," << g(p.z());
      }
      out << "," << m << "\n";
    }
    start += mode.duration;
  }
}

inline void save_columnar(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  write_columnar(out, traj);
  if (!out) throw UsageError("failed while writing '" + path + "'");
}

}  // namespace srbmtraj
