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
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "srbmtraj/maneuvers.hpp"
#include "srbmtraj/solver.hpp"
#include "srbmtraj/trajectory.hpp"
#include "srbmtraj/transcription.hpp"

namespace srbmtraj {

/// A family sweep: the maneuver builder inputs with one target parameter
/// swept over [lo, hi] in fixed steps. Entries are solved in ascending or
/// descending order (each warm-starting the next), but the resulting library
/// is always stored ascending.
struct SweepPlan {
  std::string kind = "running";  // "running", "turning" or "spin_jump"
  ManeuverTargets targets;       // fixed targets; the swept one is overwritten
  HybridMode stance;
  HybridMode flight;             // spin jumps only
  SRBMParams params;
  TransferabilityConfig transfer;

  std::string parameter = "v_des";  // "v_des", "p_z_des" or "heading_change"
  double lo = 0.5;
  double hi = 1.5;
  double step = 0.25;
  bool descending = false;

  double nominal_height = 0.8;  // m, cold-start guess height

  void validate() const {
    if (kind != "running" && kind != "turning" && kind != "spin_jump")
      throw UsageError("sweep plan: unknown maneuver kind '" + kind + "'");
    if (parameter != "v_des" && parameter != "p_z_des" && parameter != "heading_change")
      throw UsageError("sweep plan: unknown parameter '" + parameter + "'");
    if (!(lo <= hi)) throw UsageError("sweep plan: lo must not exceed hi");
    if (!(step > 0.0)) throw UsageError("sweep plan: step must be positive");
  }

  /// The swept grid, ascending: lo, lo+step, …, up to hi inclusive (within
  /// half a step of rounding slack).
  std::vector<double> grid() const {
    validate();
    std::vector<double> values;
    const int count = static_cast<int>(std::floor((hi - lo) / step + 0.5)) + 1;
    for (int i = 0; i < count; ++i) {
      const double v = lo + step * i;
      if (v <= hi + 0.5 * step) values.push_back(v);
    }
    return values;
  }

  /// The maneuver at one swept value.
  ManeuverSpec spec_at(double value) const {
    ManeuverTargets t = targets;
    if (parameter == "v_des")
      t.v_des = value;
    else if (parameter == "p_z_des")
      t.p_z_des = value;
    else
      t.heading_change = value;
    if (kind == "running") return build_running(t, stance, params, transfer);
    if (kind == "turning") return build_turning(t, stance, params, transfer);
    return build_spin_jump(t, stance, flight, params, transfer);
  }
};

/// One converged library entry.
struct LibraryEntry {
  double parameter = 0.0;
  Trajectory trajectory;
};

/// An ordered family of converged trajectories over one swept parameter,
/// with the provenance needed to reproduce it. Failed grid points are kept
/// as gaps rather than silently dropped.
struct TrajectoryLibrary {
  std::string parameter;    // swept parameter name
  std::string config_hash;  // provenance of the producing config, "0" if none
  SolveOptions options;     // solver options the sweep ran with
  std::vector<LibraryEntry> entries;  // ascending, every status Converged
  std::vector<double> gaps;           // grid values that failed both attempts

  void validate() const {
    for (const auto& e : entries)
      if (e.trajectory.status != SolveStatus::Converged)
        throw UsageError("library entry " + detail::format_double(e.parameter) +
                         " is not Converged");
    for (size_t i = 1; i < entries.size(); ++i)
      if (!(entries[i - 1].parameter < entries[i].parameter))
        throw UsageError("library entries must be strictly ascending");
  }

  /// Entry whose parameter is nearest to `value`; ties take the lower one.
  const LibraryEntry& nearest(double value) const {
    if (entries.empty()) throw UsageError("library is empty");
    const auto it = std::lower_bound(
        entries.begin(), entries.end(), value,
        [](const LibraryEntry& e, double v) { return e.parameter < v; });
    if (it == entries.begin()) return *it;
    if (it == entries.end()) return entries.back();
    const auto prev = std::prev(it);
    return (value - prev->parameter) <= (it->parameter - value) ? *prev : *it;
  }
};

/// Iteration diary of one sweep, for logs and the warm-vs-cold soft check.
struct SweepReportRow {
  double parameter = 0.0;
  bool converged = false;
  bool warm_started = false;
  bool retried_cold = false;
  int inner_iterations = 0;
  double objective = 0.0;
};

/// Runs the sweep: the first grid point solves from the cold-start guess,
/// each later point warm-starts from the previous converged solution (same
/// structure, so durations, states, forces and feet carry over while the
/// targets move). A failed solve is retried once from the cold-start guess;
/// if both attempts fail the value is recorded as a gap. Only converged
/// entries are stored, sorted ascending regardless of sweep direction.
inline TrajectoryLibrary sweep(const SweepPlan& plan,
                               const SolveOptions& options = SolveOptions{},
                               const std::string& backend = "builtin",
                               std::vector<SweepReportRow>* report = nullptr) {
  plan.validate();
  options.validate();
  std::vector<double> values = plan.grid();
  if (plan.descending) std::reverse(values.begin(), values.end());

  TrajectoryLibrary library;
  library.parameter = plan.parameter;
  library.config_hash = "0";
  library.options = options;

  bool have_previous = false;
  Eigen::VectorXd previous;
  for (size_t i = 0; i < values.size(); ++i) {
    const ManeuverSpec spec = plan.spec_at(values[i]);
    const NLPProblem nlp = assemble(spec);
    const Eigen::VectorXd cold = initial_guess(spec, plan.nominal_height);

    SweepReportRow row;
    row.parameter = values[i];
    row.warm_started = have_previous;

    SolveResult result = solve(nlp, have_previous ? previous : cold, options, backend);
    if (result.status != SolveStatus::Converged) {
      row.retried_cold = true;
      result = solve(nlp, cold, options, backend);
    }
    row.converged = result.status == SolveStatus::Converged;
    row.inner_iterations = result.inner_iterations;
    row.objective = result.objective;
    if (report) report->push_back(row);

    if (!row.converged) {
      if (i == 0)
        throw UsageError("sweep: first solve at " + detail::format_double(values[i]) +
                         " failed both attempts (" + result.message +
                         "); nothing to chain from");
      library.gaps.push_back(values[i]);
      continue;
    }
    previous = result.z;
    have_previous = true;
    library.entries.push_back({values[i], make_trajectory(spec, result)});
  }

  std::sort(library.entries.begin(), library.entries.end(),
            [](const LibraryEntry& a, const LibraryEntry& b) {
              return a.parameter < b.parameter;
            });
  std::sort(library.gaps.begin(), library.gaps.end());
  library.validate();
  return library;
}

/// Largest normalized state discontinuity between two adjacent entries.
struct SmoothnessRow {
  double parameter_lo = 0.0;
  double parameter_hi = 0.0;
  double max_discontinuity = 0.0;  // max over knots of normalized distance
};

/// Knot-by-knot comparison of adjacent entries. Same mode structure means
/// equal knot indices sit at equal normalized phase within each mode, so
/// the per-knot normalized state distance measures how abruptly the family
/// changes from one parameter value to the next. Reported, never asserted:
/// a library can be perfectly valid and still change quickly somewhere.
inline std::vector<SmoothnessRow> smoothness_report(const TrajectoryLibrary& library) {
  library.validate();
  if (library.entries.size() < 2)
    throw UsageError("smoothness report needs at least 2 entries, library has " +
                     std::to_string(library.entries.size()));
  std::vector<SmoothnessRow> rows;
  for (size_t i = 1; i < library.entries.size(); ++i) {
    const Trajectory& a = library.entries[i - 1].trajectory;
    const Trajectory& b = library.entries[i].trajectory;
    if (a.mode_count() != b.mode_count())
      throw UsageError("smoothness report: adjacent entries have different mode counts");
    SmoothnessRow row;
    row.parameter_lo = library.entries[i - 1].parameter;
    row.parameter_hi = library.entries[i].parameter;
    for (int m = 0; m < a.mode_count(); ++m) {
      if (a.modes[m].knots() != b.modes[m].knots())
        throw UsageError("smoothness report: adjacent entries have different knot counts");
      for (int k = 0; k < a.modes[m].knots(); ++k)
        row.max_discontinuity =
            std::max(row.max_discontinuity,
                     normalized_state_distance(a.modes[m].states[k], b.modes[m].states[k]));
    }
    rows.push_back(row);
  }
  return rows;
}

// --- Library file format ------------------------------------------------------
//
//   srbmtraj library 1
//   parameter <name>
//   config_hash <hex>
//   options <feas tol> <opt tol> <max outer> <max inner> <rho0> <growth> <cap>
//           <fd step> <history>                                (one line)
//   gaps <count> [values…]
//   entries <count>
//   entry <parameter value>
//   <trajectory block>                                          (× entries)
//   end library

inline void write_library(std::ostream& out, const TrajectoryLibrary& library) {
  library.validate();
  auto g = detail::format_double;
  out << "srbmtraj library 1\n";
  out << "parameter " << library.parameter << "\n";
  out << "config_hash " << (library.config_hash.empty() ? "0" : library.config_hash)
      << "\n";
  const SolveOptions& o = library.options;
  out << "options " << g(o.feasibility_tol) << " " << g(o.optimality_tol) << " "
      << o.max_outer_iterations << " " << o.max_inner_iterations << " "
      << g(o.initial_penalty) << " " << g(o.penalty_growth) << " " << g(o.penalty_max)
      << " " << g(o.fd_step) << " " << o.lbfgs_history << "\n";
  out << "gaps " << library.gaps.size();
  for (double v : library.gaps) out << " " << g(v);
  out << "\n";
  out << "entries " << library.entries.size() << "\n";
  for (const auto& e : library.entries) {
    out << "entry " << g(e.parameter) << "\n";
    write_trajectory(out, e.trajectory);
  }
  out << "end library\n";
}

inline TrajectoryLibrary read_library(std::istream& in, const std::string& context = "library") {
  detail::LineReader reader(in, context);
  TrajectoryLibrary library;
  {
    const std::string header = reader.next("'srbmtraj library 1'");
    const auto toks = detail::tokens(header);
    if (toks.size() != 3 || toks[0] != "srbmtraj" || toks[1] != "library")
      throw ParseError(context + ": not a library file (header '" + header + "')");
    if (toks[2] != "1")
      throw ParseError(context + ": unsupported library format version " + toks[2] +
                       " (this reader handles version 1)");
  }
  library.parameter = reader.expect("parameter", 1)[0];
  library.config_hash = reader.expect("config_hash", 1)[0];
  {
    const auto o = reader.expect("options", 9);
    library.options.feasibility_tol = reader.to_double(o[0]);
    library.options.optimality_tol = reader.to_double(o[1]);
    library.options.max_outer_iterations = reader.to_int(o[2]);
    library.options.max_inner_iterations = reader.to_int(o[3]);
    library.options.initial_penalty = reader.to_double(o[4]);
    library.options.penalty_growth = reader.to_double(o[5]);
    library.options.penalty_max = reader.to_double(o[6]);
    library.options.fd_step = reader.to_double(o[7]);
    library.options.lbfgs_history = reader.to_int(o[8]);
  }
  {
    const auto toks = reader.expect("gaps");
    if (toks.empty()) throw ParseError(context + ": 'gaps' needs a count");
    const int count = reader.to_int(toks[0]);
    if (static_cast<int>(toks.size()) != count + 1)
      throw ParseError(context + ": 'gaps' announces " + std::to_string(count) +
                       " values, found " + std::to_string(toks.size() - 1));
    for (int i = 0; i < count; ++i) library.gaps.push_back(reader.to_double(toks[i + 1]));
  }
  const int entry_count = reader.to_int(reader.expect("entries", 1)[0]);
  for (int i = 0; i < entry_count; ++i) {
    LibraryEntry entry;
    entry.parameter = reader.to_double(reader.expect("entry", 1)[0]);
    entry.trajectory = read_trajectory(reader);
    library.entries.push_back(std::move(entry));
  }
  reader.expect("end", 1);
  library.validate();
  return library;
}

inline void save_library(const std::string& path, const TrajectoryLibrary& library) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  write_library(out, library);
  if (!out) throw UsageError("failed while writing '" + path + "'");
}

inline TrajectoryLibrary load_library(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "' for reading");
  return read_library(in, path);
}

}  // namespace srbmtraj
