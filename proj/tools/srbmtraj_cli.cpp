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

// srbmtraj command-line interface.
//
// Subcommands: solve one maneuver, sweep a family into a library, verify a
// stored trajectory against its constraints and an independent rollout,
// emit plot-ready columnar data, and score a robot log against a library
// entry. Exit codes: 0 success, 1 usage or input error, 2 solve or
// verification failure, 3 sweep completed with gaps.
//
// Every code path is deterministic: identical inputs produce identical
// output bytes. No wall-clock values are ever written to an output file.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "srbmtraj/config.hpp"
#include "srbmtraj/library.hpp"
#include "srbmtraj/maneuvers.hpp"
#include "srbmtraj/reward.hpp"
#include "srbmtraj/solver.hpp"
#include "srbmtraj/trajectory.hpp"
#include "srbmtraj/transcription.hpp"

namespace {

using namespace srbmtraj;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSolveFailure = 2;
constexpr int kExitPartialSweep = 3;

struct CommonOptions {
  std::string config_path;
  std::string out_path;
  std::string backend;
  std::optional<double> feasibility_tol;
  std::optional<double> optimality_tol;
  bool seedless = true;  // the built-in pipeline has no random source
  bool verbose = false;
};

/// Applies CLI overrides on top of the config's solver section.
SolveOptions solver_options(const Config& config, const CommonOptions& cli) {
  SolveOptions options = config.solver;
  if (cli.feasibility_tol) options.feasibility_tol = *cli.feasibility_tol;
  if (cli.optimality_tol) options.optimality_tol = *cli.optimality_tol;
  if (cli.verbose) options.verbose = true;
  options.validate();
  return options;
}

std::string backend_name(const Config& config, const CommonOptions& cli) {
  return cli.backend.empty() ? config.backend : cli.backend;
}

void print_feasibility(std::FILE* out, const FeasibilityReport& report, double tolerance) {
  std::fprintf(out, "feasibility: max violation %.6e (equalities %.6e, inequalities %.6e),"
               " tolerance %.1e\n", report.max_violation, report.max_equality_violation,
               report.max_inequality_violation, tolerance);
  for (const auto& entry : report.entries)
    std::fprintf(out, "  %-40s %.6e (row %d)\n", entry.name.c_str(), entry.violation,
                 entry.row);
}

int run_solve(const CommonOptions& cli) {
  const Config config = load_config(cli.config_path);
  const ManeuverSpec spec = build_maneuver(config);
  const SolveOptions options = solver_options(config, cli);
  const NLPProblem nlp = assemble(spec);
  const Eigen::VectorXd guess = initial_guess(spec, config.nominal_height);

  const SolveResult result = solve(nlp, guess, options, backend_name(config, cli));
  std::fprintf(stdout, "solve: %s after %d outer / %d inner iterations, objective %.9e\n",
               to_string(result.status), result.outer_iterations, result.inner_iterations,
               result.objective);
  if (result.status != SolveStatus::Converged) {
    std::fprintf(stderr, "solve failed: %s\n", result.message.c_str());
    return kExitSolveFailure;
  }

  const FeasibilityReport report =
      check_feasibility(nlp, result.z, options.feasibility_tol);
  print_feasibility(stdout, report, options.feasibility_tol);

  Trajectory traj = make_trajectory(spec, result);
  traj.config_json = canonical_config(config);
  save_trajectory(cli.out_path, traj);
  std::fprintf(stdout, "wrote %s\n", cli.out_path.c_str());
  return kExitOk;
}

int run_sweep(const CommonOptions& cli) {
  const Config config = load_config(cli.config_path);
  const SweepPlan plan = build_sweep_plan(config);
  const SolveOptions options = solver_options(config, cli);

  std::vector<SweepReportRow> rows;
  TrajectoryLibrary library = sweep(plan, options, backend_name(config, cli), &rows);
  library.config_hash = config_hash(config);
  const std::string config_json = canonical_config(config);
  for (auto& entry : library.entries) entry.trajectory.config_json = config_json;

  for (const auto& row : rows)
    std::fprintf(stdout, "sweep %s=%.6g: %s%s, %d inner iterations, objective %.9e\n",
                 plan.parameter.c_str(), row.parameter,
                 row.converged ? "Converged" : "failed",
                 row.retried_cold ? " (after cold retry)" : "", row.inner_iterations,
                 row.objective);

  std::filesystem::create_directories(cli.out_path);
  const std::string library_path =
      (std::filesystem::path(cli.out_path) / "library.txt").string();
  save_library(library_path, library);
  std::fprintf(stdout, "wrote %s (%zu entries, %zu gaps)\n", library_path.c_str(),
               library.entries.size(), library.gaps.size());

  if (library.entries.size() >= 2) {
    const std::string smooth_path =
        (std::filesystem::path(cli.out_path) / "smoothness.txt").string();
    std::ofstream out(smooth_path);
    if (!out) throw UsageError("cannot open '" + smooth_path + "' for writing");
    out << "srbmtraj smoothness 1\n";
    for (const auto& row : smoothness_report(library))
      out << "pair " << detail::format_double(row.parameter_lo) << " "
          << detail::format_double(row.parameter_hi) << " "
          << detail::format_double(row.max_discontinuity) << "\n";
    std::fprintf(stdout, "wrote %s\n", smooth_path.c_str());
  }

  if (!library.gaps.empty()) {
    for (double v : library.gaps)
      std::fprintf(stderr, "gap: %s=%.6g failed both attempts\n", plan.parameter.c_str(),
                   v);
    return kExitPartialSweep;
  }
  return kExitOk;
}

int run_verify(const std::string& trajectory_path, std::optional<double> feasibility_tol,
               double consistency_tol, double rollout_dt) {
  const Trajectory traj = load_trajectory(trajectory_path);
  const Config config = parse_config(traj.config_json);
  const double tolerance =
      feasibility_tol ? *feasibility_tol
                      : (config.has_solver ? config.solver.feasibility_tol : 1e-6);

  ManeuverSpec spec = build_maneuver(config);
  const Eigen::VectorXd z = decision_vector(traj);
  const NLPProblem nlp = assemble(spec);
  if (z.size() != nlp.dimension)
    throw UsageError("trajectory does not match its embedded config: decision vector has "
                     "length " + std::to_string(z.size()) + ", config assembles to " +
                     std::to_string(nlp.dimension));

  const FeasibilityReport report = check_feasibility(nlp, z, tolerance);
  print_feasibility(stdout, report, tolerance);

  const double consistency = rollout_consistency(traj, config.model, rollout_dt);
  std::fprintf(stdout, "rollout consistency: %.6e (threshold %.3g, dt %.1e)\n",
               consistency, consistency_tol, rollout_dt);

  const bool ok = report.max_violation <= tolerance && consistency <= consistency_tol;
  std::fprintf(stdout, "verify: %s\n", ok ? "ok" : "FAILED");
  return ok ? kExitOk : kExitSolveFailure;
}

int run_plotdata(const std::string& trajectory_path, const std::string& out_path) {
  const Trajectory traj = load_trajectory(trajectory_path);
  std::ofstream out(out_path);
  if (!out) throw UsageError("cannot open '" + out_path + "' for writing");
  double boundary = 0.0;
  for (int m = 0; m + 1 < traj.mode_count(); ++m) {
    boundary += traj.modes[m].duration;
    out << "# mode_boundary_s " << detail::format_double(boundary) << "\n";
  }
  write_columnar(out, traj);
  if (!out) throw UsageError("failed while writing '" + out_path + "'");
  std::fprintf(stdout, "wrote %s (%d rows, %d mode boundaries)\n", out_path.c_str(),
               traj.total_knots(), traj.mode_count() - 1);
  return kExitOk;
}

// Robot-log column order; kept in one place so reader and docs agree.
const char* kLogHeader =
    "time_s,qw,qx,qy,qz,vx_mps,vy_mps,vz_mps,lx_kgm2ps,ly_kgm2ps,lz_kgm2ps,"
    "foot1_rx_m,foot1_ry_m,foot1_z_m,foot1_qw,foot1_qx,foot1_qy,foot1_qz,"
    "foot2_rx_m,foot2_ry_m,foot2_z_m,foot2_qw,foot2_qx,foot2_qy,foot2_qz,"
    "py_m,hip_roll_radps,hip_yaw_radps,clock_penalty";
constexpr int kLogColumns = 29;

std::vector<double> parse_log_row(const std::string& line, int number) {
  std::vector<double> values;
  std::stringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0')
      throw ParseError("log line " + std::to_string(number) + ": not a number: '" +
                       cell + "'");
    values.push_back(v);
  }
  if (static_cast<int>(values.size()) != kLogColumns)
    throw ParseError("log line " + std::to_string(number) + ": expected " +
                     std::to_string(kLogColumns) + " columns, found " +
                     std::to_string(values.size()));
  return values;
}

int run_score(const std::string& library_path, const std::string& log_path,
              double parameter, const std::string& out_path) {
  const TrajectoryLibrary library = load_library(library_path);
  const LibraryEntry& entry = library.nearest(parameter);
  if (library.entries.front().parameter - parameter > 1e-12 ||
      parameter - library.entries.back().parameter > 1e-12)
    std::fprintf(stderr, "warning: %s=%.6g is outside the library grid [%.6g, %.6g]; "
                 "using nearest entry %.6g\n", library.parameter.c_str(), parameter,
                 library.entries.front().parameter, library.entries.back().parameter,
                 entry.parameter);
  std::fprintf(stdout, "scoring against %s=%.6g\n", library.parameter.c_str(),
               entry.parameter);

  const Config config = parse_config(entry.trajectory.config_json);
  if (!config.has_model)
    throw UsageError("library entry carries no model section; cannot form the "
                     "angular-momentum reference");
  const RewardConfig reward = config.reward;  // defaults when no reward section

  std::ifstream log(log_path);
  if (!log) throw UsageError("cannot open log '" + log_path + "'");
  std::string line;
  int number = 1;
  if (!std::getline(log, line)) throw ParseError("log is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kLogHeader)
    throw ParseError("log header does not match the documented column order:\n  expected "
                     + std::string(kLogHeader) + "\n  found    " + line);

  std::ofstream out(out_path);
  if (!out) throw UsageError("cannot open '" + out_path + "' for writing");
  out << "time_s,orientation,velocity_x,velocity_y,velocity_z,angular_momentum,"
         "foot_position_x,foot_position_y,clock,foot_orientation,foot_height,drift,"
         "hip_roll,hip_yaw,total\n";

  int rows = 0;
  while (std::getline(log, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<double> v = parse_log_row(line, number);

    RobotSummary robot;
    const double t = v[0];
    robot.orientation = Quat(v[1], v[2], v[3], v[4]);
    robot.velocity = Eigen::Vector3d(v[5], v[6], v[7]);
    robot.angular_momentum = Eigen::Vector3d(v[8], v[9], v[10]);
    robot.feet.resize(2);
    for (int f = 0; f < 2; ++f) {
      const int base = 11 + 7 * f;
      robot.feet[f].relative_position = Eigen::Vector2d(v[base], v[base + 1]);
      robot.feet[f].height = v[base + 2];
      robot.feet[f].orientation = Quat(v[base + 3], v[base + 4], v[base + 5], v[base + 6]);
    }
    robot.lateral_position = v[25];
    robot.hip_roll_rate = v[26];
    robot.hip_yaw_rate = v[27];
    robot.clock_penalty = v[28];

    const TrajectorySample point = sample(entry.trajectory, t, /*looping=*/true);
    const ReferenceSummary reference =
        reference_summary(point, entry.trajectory, config.model, 2);
    const RewardBreakdown r = evaluate(robot, reference, reward);

    auto g = detail::format_double;
    out << g(t) << "," << g(r.orientation) << "," << g(r.velocity_x) << ","
        << g(r.velocity_y) << "," << g(r.velocity_z) << "," << g(r.angular_momentum)
        << "," << g(r.foot_position_x) << "," << g(r.foot_position_y) << "," << g(r.clock)
        << "," << g(r.foot_orientation) << "," << g(r.foot_height) << "," << g(r.drift)
        << "," << g(r.hip_roll) << "," << g(r.hip_yaw) << "," << g(r.total) << "\n";
    ++rows;
  }
  if (rows == 0) throw ParseError("log has a header but no data rows");
  if (!out) throw UsageError("failed while writing '" + out_path + "'");
  std::fprintf(stdout, "wrote %s (%d rows)\n", out_path.c_str(), rows);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"srbmtraj: single rigid-body maneuver optimization toolkit"};
  app.require_subcommand(1);

  CommonOptions common;

  auto add_common = [&common](CLI::App* cmd, bool needs_out) {
    cmd->add_option("--config", common.config_path, "JSON configuration file")
        ->required();
    if (needs_out)
      cmd->add_option("--out", common.out_path, "output path")->required();
    cmd->add_option("--backend", common.backend, "solver backend (default from config)");
    cmd->add_option("--feasibility-tol", common.feasibility_tol,
                    "override the solver feasibility tolerance");
    cmd->add_option("--optimality-tol", common.optimality_tol,
                    "override the solver optimality tolerance");
    cmd->add_flag("--seedless", common.seedless,
                  "forbid any source of randomness (default; the built-in pipeline is "
                  "deterministic by construction)");
    cmd->add_flag("--verbose", common.verbose, "per-iteration solver trace on stderr");
  };

  CLI::App* solve_cmd =
      app.add_subcommand("solve", "solve one maneuver and write the trajectory");
  add_common(solve_cmd, true);

  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "sweep a target parameter into a warm-started trajectory library");
  add_common(sweep_cmd, true);

  std::string trajectory_path;
  std::optional<double> verify_feasibility_tol;
  double consistency_tol = 0.05;
  double rollout_dt = 1e-4;
  CLI::App* verify_cmd = app.add_subcommand(
      "verify", "re-check a stored trajectory: constraints and RK4 rollout consistency");
  verify_cmd->add_option("--trajectory", trajectory_path, "trajectory file")->required();
  verify_cmd->add_option("--feasibility-tol", verify_feasibility_tol,
                         "violation tolerance (default: the trajectory's own)");
  verify_cmd->add_option("--consistency-tol", consistency_tol,
                         "rollout consistency threshold, normalized state distance");
  verify_cmd->add_option("--rollout-dt", rollout_dt, "RK4 step for the rollout, s");

  std::string plot_out;
  CLI::App* plot_cmd = app.add_subcommand(
      "plotdata", "emit a columnar time series with mode-boundary timestamps");
  plot_cmd->add_option("--trajectory", trajectory_path, "trajectory file")->required();
  plot_cmd->add_option("--out", plot_out, "output CSV path")->required();

  std::string library_path, log_path, score_out;
  double score_parameter = 0.0;
  CLI::App* score_cmd = app.add_subcommand(
      "score", "score a robot log against the nearest library entry");
  score_cmd->add_option("--library", library_path, "library file")->required();
  score_cmd->add_option("--log", log_path, "robot summary log (CSV)")->required();
  score_cmd->add_option("--parameter", score_parameter, "commanded parameter value")
      ->required();
  score_cmd->add_option("--out", score_out, "per-row reward breakdown CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (solve_cmd->parsed()) return run_solve(common);
    if (sweep_cmd->parsed()) return run_sweep(common);
    if (verify_cmd->parsed())
      return run_verify(trajectory_path, verify_feasibility_tol, consistency_tol,
                        rollout_dt);
    if (plot_cmd->parsed()) return run_plotdata(trajectory_path, plot_out);
    if (score_cmd->parsed())
      return run_score(library_path, log_path, score_parameter, score_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
