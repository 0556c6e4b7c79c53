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

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "srbmtraj/errors.hpp"
#include "srbmtraj/library.hpp"
#include "srbmtraj/maneuvers.hpp"
#include "srbmtraj/reward.hpp"
#include "srbmtraj/solver.hpp"

namespace srbmtraj {

/// Parsed run configuration. Sections are independent and optional in the
/// file; each command checks that the sections it consumes are present.
/// Unknown sections or keys are rejected outright so a typo can never
/// silently fall back to a default.
struct Config {
  bool has_model = false;
  bool has_transferability = false;
  bool has_maneuver = false;
  bool has_solver = false;
  bool has_sweep = false;
  bool has_reward = false;

  SRBMParams model;
  TransferabilityConfig transfer;

  // maneuver
  std::string maneuver_kind = "running";
  ManeuverTargets targets;
  HybridMode stance;
  HybridMode flight{ModeKind::Flight, 8, 0.05, 0.5};
  double nominal_height = 0.8;  // m

  // solver
  SolveOptions solver;
  std::string backend = "builtin";

  // sweep
  std::string sweep_parameter = "v_des";
  double sweep_lo = 0.5;
  double sweep_hi = 1.5;
  double sweep_step = 0.25;
  bool sweep_descending = false;

  RewardConfig reward;
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& section, const std::string& section_name,
                                const std::set<std::string>& allowed) {
  for (const auto& item : section.items())
    if (!allowed.count(item.key()))
      throw ParseError("config: unknown key '" + section_name + "." + item.key() + "'");
}

template <typename T>
inline void read_key(const json& section, const std::string& section_name,
                     const std::string& key, T& out) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError("config: bad value for '" + section_name + "." + key +
                     "': " + e.what());
  }
}

inline void parse_model(const json& j, Config& config) {
  reject_unknown_keys(j, "model", {"mass_kg", "inertia_kgm2", "gravity_mps2"});
  read_key(j, "model", "mass_kg", config.model.mass);
  read_key(j, "model", "gravity_mps2", config.model.gravity);
  if (j.contains("inertia_kgm2")) {
    std::vector<double> values;
    read_key(j, "model", "inertia_kgm2", values);
    if (values.size() == 3) {
      config.model.inertia = Eigen::Vector3d(values[0], values[1], values[2]).asDiagonal();
    } else if (values.size() == 9) {
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) config.model.inertia(r, c) = values[3 * r + c];
    } else {
      throw ParseError("config: model.inertia_kgm2 needs 3 (diagonal) or 9 (row-major) "
                       "values, found " + std::to_string(values.size()));
    }
  }
}

inline void parse_transferability(const json& j, Config& config) {
  reject_unknown_keys(j, "transferability",
                      {"l_max_m", "psi_cos", "mu", "f_max_n", "fdot_max_nps",
                       "omega_max_radps", "delta_min_m"});
  read_key(j, "transferability", "l_max_m", config.transfer.l_max);
  read_key(j, "transferability", "psi_cos", config.transfer.psi);
  read_key(j, "transferability", "mu", config.transfer.mu);
  read_key(j, "transferability", "f_max_n", config.transfer.f_max);
  read_key(j, "transferability", "fdot_max_nps", config.transfer.fdot_max);
  read_key(j, "transferability", "omega_max_radps", config.transfer.omega_max);
  read_key(j, "transferability", "delta_min_m", config.transfer.delta_min);
}

inline void parse_maneuver(const json& j, Config& config) {
  reject_unknown_keys(
      j, "maneuver",
      {"kind", "v_des_mps", "heading_change_rad", "p_z_des_m", "step_count",
       "stance_knots", "stance_t_min_s", "stance_t_max_s", "flight_knots",
       "flight_t_min_s", "flight_t_max_s", "theta_tol_rad", "theta_mirror_rad",
       "theta_turn_rad", "theta_liftoff_rad", "theta_touchdown_initial_rad",
       "theta_touchdown_final_rad", "q_run_yaw_rad", "q_turn_yaw_rad",
       "q_liftoff_yaw_rad", "q_touchdown_yaw_rad", "nominal_height_m"});
  read_key(j, "maneuver", "kind", config.maneuver_kind);
  read_key(j, "maneuver", "v_des_mps", config.targets.v_des);
  read_key(j, "maneuver", "heading_change_rad", config.targets.heading_change);
  read_key(j, "maneuver", "p_z_des_m", config.targets.p_z_des);
  read_key(j, "maneuver", "step_count", config.targets.step_count);
  read_key(j, "maneuver", "stance_knots", config.stance.knots);
  read_key(j, "maneuver", "stance_t_min_s", config.stance.t_min);
  read_key(j, "maneuver", "stance_t_max_s", config.stance.t_max);
  read_key(j, "maneuver", "flight_knots", config.flight.knots);
  read_key(j, "maneuver", "flight_t_min_s", config.flight.t_min);
  read_key(j, "maneuver", "flight_t_max_s", config.flight.t_max);
  read_key(j, "maneuver", "theta_tol_rad", config.targets.theta_tol);
  read_key(j, "maneuver", "theta_mirror_rad", config.targets.theta_mirror);
  read_key(j, "maneuver", "theta_turn_rad", config.targets.theta_turn);
  read_key(j, "maneuver", "theta_liftoff_rad", config.targets.theta_liftoff);
  read_key(j, "maneuver", "theta_touchdown_initial_rad", config.targets.theta_touchdown_i);
  read_key(j, "maneuver", "theta_touchdown_final_rad", config.targets.theta_touchdown_f);
  read_key(j, "maneuver", "nominal_height_m", config.nominal_height);
  double yaw = 0.0;
  if (j.contains("q_run_yaw_rad")) {
    read_key(j, "maneuver", "q_run_yaw_rad", yaw);
    config.targets.q_run = Quat::from_yaw(yaw);
  }
  if (j.contains("q_turn_yaw_rad")) {
    read_key(j, "maneuver", "q_turn_yaw_rad", yaw);
    config.targets.q_turn = Quat::from_yaw(yaw);
  }
  if (j.contains("q_liftoff_yaw_rad")) {
    read_key(j, "maneuver", "q_liftoff_yaw_rad", yaw);
    config.targets.q_liftoff = Quat::from_yaw(yaw);
  }
  if (j.contains("q_touchdown_yaw_rad")) {
    read_key(j, "maneuver", "q_touchdown_yaw_rad", yaw);
    config.targets.q_touchdown = Quat::from_yaw(yaw);
  }
  if (config.maneuver_kind != "running" && config.maneuver_kind != "turning" &&
      config.maneuver_kind != "spin_jump")
    throw ParseError("config: maneuver.kind must be 'running', 'turning' or 'spin_jump', "
                     "found '" + config.maneuver_kind + "'");
  if (config.stance.t_max < config.stance.t_min)
    throw ParseError("config: maneuver.stance_t_max_s is below maneuver.stance_t_min_s");
  if (config.flight.t_max < config.flight.t_min)
    throw ParseError("config: maneuver.flight_t_max_s is below maneuver.flight_t_min_s");
}

inline void parse_solver(const json& j, Config& config) {
  reject_unknown_keys(j, "solver",
                      {"backend", "feasibility_tol", "optimality_tol",
                       "max_outer_iterations", "max_inner_iterations", "initial_penalty",
                       "penalty_growth", "penalty_max", "fd_step", "lbfgs_history",
                       "verbose"});
  read_key(j, "solver", "backend", config.backend);
  read_key(j, "solver", "feasibility_tol", config.solver.feasibility_tol);
  read_key(j, "solver", "optimality_tol", config.solver.optimality_tol);
  read_key(j, "solver", "max_outer_iterations", config.solver.max_outer_iterations);
  read_key(j, "solver", "max_inner_iterations", config.solver.max_inner_iterations);
  read_key(j, "solver", "initial_penalty", config.solver.initial_penalty);
  read_key(j, "solver", "penalty_growth", config.solver.penalty_growth);
  read_key(j, "solver", "penalty_max", config.solver.penalty_max);
  read_key(j, "solver", "fd_step", config.solver.fd_step);
  read_key(j, "solver", "lbfgs_history", config.solver.lbfgs_history);
  read_key(j, "solver", "verbose", config.solver.verbose);
}

inline void parse_sweep(const json& j, Config& config) {
  reject_unknown_keys(j, "sweep", {"parameter", "lo", "hi", "step", "descending"});
  read_key(j, "sweep", "parameter", config.sweep_parameter);
  read_key(j, "sweep", "lo", config.sweep_lo);
  read_key(j, "sweep", "hi", config.sweep_hi);
  read_key(j, "sweep", "step", config.sweep_step);
  read_key(j, "sweep", "descending", config.sweep_descending);
}

inline void parse_reward(const json& j, Config& config) {
  reject_unknown_keys(
      j, "reward",
      {"coeff_orientation", "coeff_velocity_x", "coeff_velocity_y", "coeff_velocity_z",
       "coeff_angular_momentum", "coeff_foot_position_x", "coeff_foot_position_y",
       "coeff_clock", "coeff_foot_orientation", "coeff_foot_height", "coeff_drift",
       "coeff_hip_roll", "coeff_hip_yaw", "foot_position_scale_per_m",
       "drift_threshold_m", "drift_scale_per_m", "z_foot_des_m", "average_foot_terms",
       "divisor"});
  RewardConfig& r = config.reward;
  read_key(j, "reward", "coeff_orientation", r.coeff_orientation);
  read_key(j, "reward", "coeff_velocity_x", r.coeff_velocity_x);
  read_key(j, "reward", "coeff_velocity_y", r.coeff_velocity_y);
  read_key(j, "reward", "coeff_velocity_z", r.coeff_velocity_z);
  read_key(j, "reward", "coeff_angular_momentum", r.coeff_angular_momentum);
  read_key(j, "reward", "coeff_foot_position_x", r.coeff_foot_position_x);
  read_key(j, "reward", "coeff_foot_position_y", r.coeff_foot_position_y);
  read_key(j, "reward", "coeff_clock", r.coeff_clock);
  read_key(j, "reward", "coeff_foot_orientation", r.coeff_foot_orientation);
  read_key(j, "reward", "coeff_foot_height", r.coeff_foot_height);
  read_key(j, "reward", "coeff_drift", r.coeff_drift);
  read_key(j, "reward", "coeff_hip_roll", r.coeff_hip_roll);
  read_key(j, "reward", "coeff_hip_yaw", r.coeff_hip_yaw);
  read_key(j, "reward", "foot_position_scale_per_m", r.foot_position_scale);
  read_key(j, "reward", "drift_threshold_m", r.drift_threshold);
  read_key(j, "reward", "drift_scale_per_m", r.drift_scale);
  read_key(j, "reward", "z_foot_des_m", r.z_foot_des);
  read_key(j, "reward", "average_foot_terms", r.average_foot_terms);
  if (j.contains("divisor")) {
    read_key(j, "reward", "divisor", r.divisor);
  } else {
    r.divisor = r.coefficient_sum();
  }
}

}  // namespace detail

/// Parses a JSON config. Unknown sections and keys throw ParseError naming
/// the offending key; values present override the documented defaults.
inline Config parse_config(const std::string& text) {
  detail::json j;
  try {
    j = detail::json::parse(text);
  } catch (const detail::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config: top level must be an object");
  detail::reject_unknown_keys(
      j, "config", {"model", "transferability", "maneuver", "solver", "sweep", "reward"});

  Config config;
  auto section = [&](const char* name, bool& flag, auto parser) {
    if (!j.contains(name)) return;
    if (!j.at(name).is_object())
      throw ParseError(std::string("config: section '") + name + "' must be an object");
    flag = true;
    parser(j.at(name), config);
  };
  section("model", config.has_model, detail::parse_model);
  section("transferability", config.has_transferability, detail::parse_transferability);
  section("maneuver", config.has_maneuver, detail::parse_maneuver);
  section("solver", config.has_solver, detail::parse_solver);
  section("sweep", config.has_sweep, detail::parse_sweep);
  section("reward", config.has_reward, detail::parse_reward);
  return config;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

/// Canonical one-line JSON of the present sections, keys sorted, values at
/// shortest round-trip precision. Equal configs always canonicalize to equal
/// bytes, so this string is the hashing and provenance form.
inline std::string canonical_config(const Config& config) {
  detail::json j = detail::json::object();
  if (config.has_model) {
    detail::json& m = j["model"];
    m["mass_kg"] = config.model.mass;
    m["gravity_mps2"] = config.model.gravity;
    const Eigen::Matrix3d& inertia = config.model.inertia;
    bool diagonal = true;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        if (r != c && inertia(r, c) != 0.0) diagonal = false;
    if (diagonal) {
      m["inertia_kgm2"] = {inertia(0, 0), inertia(1, 1), inertia(2, 2)};
    } else {
      std::vector<double> values;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) values.push_back(inertia(r, c));
      m["inertia_kgm2"] = values;
    }
  }
  if (config.has_transferability) {
    detail::json& t = j["transferability"];
    t["l_max_m"] = config.transfer.l_max;
    t["psi_cos"] = config.transfer.psi;
    t["mu"] = config.transfer.mu;
    t["f_max_n"] = config.transfer.f_max;
    t["fdot_max_nps"] = config.transfer.fdot_max;
    t["omega_max_radps"] = config.transfer.omega_max;
    t["delta_min_m"] = config.transfer.delta_min;
  }
  if (config.has_maneuver) {
    detail::json& m = j["maneuver"];
    m["kind"] = config.maneuver_kind;
    m["v_des_mps"] = config.targets.v_des;
    m["heading_change_rad"] = config.targets.heading_change;
    m["p_z_des_m"] = config.targets.p_z_des;
    m["step_count"] = config.targets.step_count;
    m["stance_knots"] = config.stance.knots;
    m["stance_t_min_s"] = config.stance.t_min;
    m["stance_t_max_s"] = config.stance.t_max;
    m["flight_knots"] = config.flight.knots;
    m["flight_t_min_s"] = config.flight.t_min;
    m["flight_t_max_s"] = config.flight.t_max;
    m["theta_tol_rad"] = config.targets.theta_tol;
    m["theta_mirror_rad"] = config.targets.theta_mirror;
    m["theta_turn_rad"] = config.targets.theta_turn;
    m["theta_liftoff_rad"] = config.targets.theta_liftoff;
    m["theta_touchdown_initial_rad"] = config.targets.theta_touchdown_i;
    m["theta_touchdown_final_rad"] = config.targets.theta_touchdown_f;
    m["q_run_yaw_rad"] = config.targets.q_run.yaw();
    m["q_turn_yaw_rad"] = config.targets.q_turn.yaw();
    m["q_liftoff_yaw_rad"] = config.targets.q_liftoff.yaw();
    m["q_touchdown_yaw_rad"] = config.targets.q_touchdown.yaw();
    m["nominal_height_m"] = config.nominal_height;
  }
  if (config.has_solver) {
    detail::json& s = j["solver"];
    s["backend"] = config.backend;
    s["feasibility_tol"] = config.solver.feasibility_tol;
    s["optimality_tol"] = config.solver.optimality_tol;
    s["max_outer_iterations"] = config.solver.max_outer_iterations;
    s["max_inner_iterations"] = config.solver.max_inner_iterations;
    s["initial_penalty"] = config.solver.initial_penalty;
    s["penalty_growth"] = config.solver.penalty_growth;
    s["penalty_max"] = config.solver.penalty_max;
    s["fd_step"] = config.solver.fd_step;
    s["lbfgs_history"] = config.solver.lbfgs_history;
    s["verbose"] = config.solver.verbose;
  }
  if (config.has_sweep) {
    detail::json& s = j["sweep"];
    s["parameter"] = config.sweep_parameter;
    s["lo"] = config.sweep_lo;
    s["hi"] = config.sweep_hi;
    s["step"] = config.sweep_step;
    s["descending"] = config.sweep_descending;
  }
  if (config.has_reward) {
    detail::json& r = j["reward"];
    r["coeff_orientation"] = config.reward.coeff_orientation;
    r["coeff_velocity_x"] = config.reward.coeff_velocity_x;
    r["coeff_velocity_y"] = config.reward.coeff_velocity_y;
    r["coeff_velocity_z"] = config.reward.coeff_velocity_z;
    r["coeff_angular_momentum"] = config.reward.coeff_angular_momentum;
    r["coeff_foot_position_x"] = config.reward.coeff_foot_position_x;
    r["coeff_foot_position_y"] = config.reward.coeff_foot_position_y;
    r["coeff_clock"] = config.reward.coeff_clock;
    r["coeff_foot_orientation"] = config.reward.coeff_foot_orientation;
    r["coeff_foot_height"] = config.reward.coeff_foot_height;
    r["coeff_drift"] = config.reward.coeff_drift;
    r["coeff_hip_roll"] = config.reward.coeff_hip_roll;
    r["coeff_hip_yaw"] = config.reward.coeff_hip_yaw;
    r["foot_position_scale_per_m"] = config.reward.foot_position_scale;
    r["drift_threshold_m"] = config.reward.drift_threshold;
    r["drift_scale_per_m"] = config.reward.drift_scale;
    r["z_foot_des_m"] = config.reward.z_foot_des;
    r["average_foot_terms"] = config.reward.average_foot_terms;
    r["divisor"] = config.reward.divisor;
  }
  return j.dump();
}

/// 64-bit FNV-1a over a byte string.
inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

/// Provenance hash of a config: FNV-1a of its canonical form, as 16 hex
/// digits. Stored in library headers so an artifact names the exact
/// configuration that produced it.
inline std::string config_hash(const Config& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical_config(config))));
  return buf;
}

inline void require_sections(const Config& config, bool model, bool transferability,
                             bool maneuver, bool solver, bool sweep, bool reward) {
  auto missing = [](const char* name) {
    throw UsageError(std::string("config is missing the '") + name +
                     "' section required by this command");
  };
  if (model && !config.has_model) missing("model");
  if (transferability && !config.has_transferability) missing("transferability");
  if (maneuver && !config.has_maneuver) missing("maneuver");
  if (solver && !config.has_solver) missing("solver");
  if (sweep && !config.has_sweep) missing("sweep");
  if (reward && !config.has_reward) missing("reward");
}

/// The maneuver a config describes (model, transferability and maneuver
/// sections required).
inline ManeuverSpec build_maneuver(const Config& config) {
  require_sections(config, true, true, true, false, false, false);
  if (config.maneuver_kind == "running")
    return build_running(config.targets, config.stance, config.model, config.transfer);
  if (config.maneuver_kind == "turning")
    return build_turning(config.targets, config.stance, config.model, config.transfer);
  return build_spin_jump(config.targets, config.stance, config.flight, config.model,
                         config.transfer);
}

/// The sweep a config describes (sweep section additionally required).
inline SweepPlan build_sweep_plan(const Config& config) {
  require_sections(config, true, true, true, false, true, false);
  SweepPlan plan;
  plan.kind = config.maneuver_kind;
  plan.targets = config.targets;
  plan.stance = config.stance;
  plan.flight = config.flight;
  plan.params = config.model;
  plan.transfer = config.transfer;
  plan.parameter = config.sweep_parameter;
  plan.lo = config.sweep_lo;
  plan.hi = config.sweep_hi;
  plan.step = config.sweep_step;
  plan.descending = config.sweep_descending;
  plan.nominal_height = config.nominal_height;
  plan.validate();
  return plan;
}

}  // namespace srbmtraj
