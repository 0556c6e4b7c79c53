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

#include "srbmtraj/solver.hpp"

#include <gtest/gtest.h>

#include <Eigen/Core>
#include <cmath>
#include <limits>

namespace srbmtraj {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

NLPProblem unconstrained_quadratic() {
  NLPProblem p;
  p.dimension = 1;
  p.objective = [](const Eigen::VectorXd& z) { return (z[0] - 3.0) * (z[0] - 3.0); };
  return p;
}

// min x^2 + y^2  s.t.  x + y = 1  ->  (0.5, 0.5)
NLPProblem equality_projection() {
  NLPProblem p;
  p.dimension = 2;
  p.objective = [](const Eigen::VectorXd& z) { return z.squaredNorm(); };
  p.equality_count = 1;
  p.equalities = [](const Eigen::VectorXd& z, Eigen::Ref<Eigen::VectorXd> c) {
    c[0] = z[0] + z[1] - 1.0;
  };
  p.equality_groups = {{"sum_to_one", 0, 1}};
  return p;
}

// min -x  s.t.  x <= 2,  x^2 <= 4  ->  x = 2 with both constraints active
NLPProblem active_inequalities() {
  NLPProblem p;
  p.dimension = 1;
  p.objective = [](const Eigen::VectorXd& z) { return -z[0]; };
  p.inequality_count = 2;
  p.inequalities = [](const Eigen::VectorXd& z, Eigen::Ref<Eigen::VectorXd> g) {
    g[0] = z[0] - 2.0;
    g[1] = z[0] * z[0] - 4.0;
  };
  p.inequality_groups = {{"cap", 0, 1}, {"quadratic_cap", 1, 1}};
  return p;
}

TEST(Solver, UnconstrainedQuadratic) {
  const NLPProblem p = unconstrained_quadratic();
  Eigen::VectorXd z0(1);
  z0 << 0.0;
  const SolveResult r = solve(p, z0);
  EXPECT_EQ(r.status, SolveStatus::Converged);
  EXPECT_NEAR(r.z[0], 3.0, 1e-6);
  EXPECT_LE(r.max_equality_violation, 1e-6);
  EXPECT_LE(r.max_inequality_violation, 1e-6);
  EXPECT_LE(r.inner_iterations, 200);
  EXPECT_GT(r.wall_time_s, 0.0);
}

TEST(Solver, EqualityProjection) {
  const NLPProblem p = equality_projection();
  Eigen::VectorXd z0(2);
  z0 << 0.0, 0.0;
  const SolveResult r = solve(p, z0);
  EXPECT_EQ(r.status, SolveStatus::Converged);
  EXPECT_NEAR(r.z[0], 0.5, 1e-6);
  EXPECT_NEAR(r.z[1], 0.5, 1e-6);
  EXPECT_LE(r.max_equality_violation, 1e-6);
  EXPECT_LE(r.inner_iterations, 200);
}

TEST(Solver, ActiveInequalities) {
  const NLPProblem p = active_inequalities();
  Eigen::VectorXd z0(1);
  z0 << 0.0;
  const SolveResult r = solve(p, z0);
  EXPECT_EQ(r.status, SolveStatus::Converged);
  EXPECT_NEAR(r.z[0], 2.0, 1e-6);
  EXPECT_LE(r.max_inequality_violation, 1e-6);
  EXPECT_LE(r.inner_iterations, 200);
}

TEST(Solver, RepeatSolveIsBitwiseIdentical) {
  const NLPProblem p = equality_projection();
  Eigen::VectorXd z0(2);
  z0 << -0.3, 0.7;
  const SolveResult a = solve(p, z0);
  const SolveResult b = solve(p, z0);
  ASSERT_EQ(a.status, b.status);
  ASSERT_EQ(a.z.size(), b.z.size());
  for (int i = 0; i < a.z.size(); ++i) EXPECT_EQ(a.z[i], b.z[i]);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.inner_iterations, b.inner_iterations);
  EXPECT_EQ(a.outer_iterations, b.outer_iterations);
}

TEST(Solver, RespectsVariableBounds) {
  // min (x - 3)^2 with x confined to [0, 2]: the box is the binding
  // restriction and the solution sits on its upper face.
  NLPProblem p = unconstrained_quadratic();
  p.lower = Eigen::VectorXd::Constant(1, 0.0);
  p.upper = Eigen::VectorXd::Constant(1, 2.0);
  Eigen::VectorXd z0(1);
  z0 << 1.0;
  const SolveResult r = solve(p, z0);
  EXPECT_EQ(r.status, SolveStatus::Converged);
  EXPECT_NEAR(r.z[0], 2.0, 1e-5);
  EXPECT_LE(r.z[0], 2.0 + 1e-6);
}

TEST(Solver, PinnedVariableNeverMoves) {
  // y is fixed by an equal-bound pair; the solver optimizes x only.
  NLPProblem p;
  p.dimension = 2;
  p.objective = [](const Eigen::VectorXd& z) {
    return (z[0] - 1.0) * (z[0] - 1.0) + z[1] * z[1];
  };
  p.lower = Eigen::VectorXd(2);
  p.upper = Eigen::VectorXd(2);
  p.lower << -kInf, 0.25;
  p.upper << kInf, 0.25;
  Eigen::VectorXd z0(2);
  z0 << 5.0, -7.0;  // deliberately off the pin; the solver must snap it
  const SolveResult r = solve(p, z0);
  EXPECT_EQ(r.status, SolveStatus::Converged);
  EXPECT_NEAR(r.z[0], 1.0, 1e-6);
  EXPECT_EQ(r.z[1], 0.25);
}

TEST(Solver, InfeasibleProblemIsDiagnosed) {
  // x^2 <= -1 has no solution; the penalty saturates and the status says so.
  NLPProblem p;
  p.dimension = 1;
  p.objective = [](const Eigen::VectorXd& z) { return z[0] * z[0]; };
  p.inequality_count = 1;
  p.inequalities = [](const Eigen::VectorXd& z, Eigen::Ref<Eigen::VectorXd> g) {
    g[0] = z[0] * z[0] + 1.0;
  };
  p.inequality_groups = {{"impossible", 0, 1}};
  Eigen::VectorXd z0(1);
  z0 << 0.5;
  SolveOptions opt;
  opt.max_outer_iterations = 25;
  const SolveResult r = solve(p, z0, opt);
  EXPECT_EQ(r.status, SolveStatus::Infeasible);
  EXPECT_GE(r.max_inequality_violation, 1.0 - 1e-6);
}

TEST(Solver, NumericalFailureNamesTheGroup) {
  NLPProblem p;
  p.dimension = 1;
  p.objective = [](const Eigen::VectorXd& z) { return z[0] * z[0]; };
  p.equality_count = 2;
  p.equalities = [](const Eigen::VectorXd& z, Eigen::Ref<Eigen::VectorXd> c) {
    c[0] = z[0] - 1.0;
    c[1] = std::sqrt(-1.0 - z[0] * z[0]);  // always NaN
  };
  p.equality_groups = {{"fine", 0, 1}, {"poisoned", 1, 1}};
  Eigen::VectorXd z0(1);
  z0 << 0.0;
  const SolveResult r = solve(p, z0);
  EXPECT_EQ(r.status, SolveStatus::NumericalFailure);
  EXPECT_NE(r.message.find("poisoned"), std::string::npos) << r.message;
}

TEST(Solver, ThrowingCallableIsReported) {
  NLPProblem p;
  p.dimension = 1;
  p.objective = [](const Eigen::VectorXd& z) { return z[0] * z[0]; };
  p.equality_count = 1;
  p.equalities = [](const Eigen::VectorXd&, Eigen::Ref<Eigen::VectorXd>) -> void {
    throw SingularGeometryError("leg length vanished");
  };
  p.equality_groups = {{"legs", 0, 1}};
  Eigen::VectorXd z0(1);
  z0 << 0.0;
  const SolveResult r = solve(p, z0);
  EXPECT_EQ(r.status, SolveStatus::NumericalFailure);
  EXPECT_NE(r.message.find("leg length vanished"), std::string::npos) << r.message;
}

TEST(Solver, DimensionMismatchThrows) {
  const NLPProblem p = equality_projection();
  Eigen::VectorXd z0(3);
  z0.setZero();
  EXPECT_THROW(solve(p, z0), UsageError);
}

TEST(Solver, UnknownBackendThrows) {
  const NLPProblem p = unconstrained_quadratic();
  Eigen::VectorXd z0(1);
  z0 << 0.0;
  try {
    solve(p, z0, SolveOptions{}, "pelican");
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("builtin"), std::string::npos) << e.what();
  }
}

TEST(Solver, RegisteredBackendIsDispatched) {
  register_solver_backend("echo", [](const NLPProblem&, const Eigen::VectorXd& z0,
                                     const SolveOptions&) {
    SolveResult r;
    r.status = SolveStatus::Converged;
    r.z = z0;
    r.message = "echo";
    return r;
  });
  const NLPProblem p = unconstrained_quadratic();
  Eigen::VectorXd z0(1);
  z0 << 42.0;
  const SolveResult r = solve(p, z0, SolveOptions{}, "echo");
  EXPECT_EQ(r.message, "echo");
  EXPECT_EQ(r.z[0], 42.0);
  solver_backends().erase("echo");
}

TEST(Solver, BadOptionsThrow) {
  const NLPProblem p = unconstrained_quadratic();
  Eigen::VectorXd z0(1);
  z0 << 0.0;
  SolveOptions opt;
  opt.feasibility_tol = 0.0;
  EXPECT_THROW(solve(p, z0, opt), UsageError);
  opt = SolveOptions{};
  opt.penalty_growth = 1.0;
  EXPECT_THROW(solve(p, z0, opt), UsageError);
}

TEST(CheckFeasibility, FeasiblePointHasNoEntries) {
  const NLPProblem p = active_inequalities();
  Eigen::VectorXd z(1);
  z << 1.0;
  const FeasibilityReport rep = check_feasibility(p, z, 1e-6);
  EXPECT_TRUE(rep.entries.empty());
  EXPECT_DOUBLE_EQ(rep.max_violation, 0.0);
}

TEST(CheckFeasibility, ReportsWorstGroupsSorted) {
  const NLPProblem p = active_inequalities();
  Eigen::VectorXd z(1);
  z << 2.5;  // cap violated by 0.5, quadratic cap by 2.25
  const FeasibilityReport rep = check_feasibility(p, z, 1e-6);
  ASSERT_EQ(rep.entries.size(), 2u);
  EXPECT_EQ(rep.entries[0].name, "quadratic_cap");
  EXPECT_NEAR(rep.entries[0].violation, 2.25, 1e-12);
  EXPECT_EQ(rep.entries[1].name, "cap");
  EXPECT_NEAR(rep.entries[1].violation, 0.5, 1e-12);
  EXPECT_NEAR(rep.max_violation, 2.25, 1e-12);
  EXPECT_NEAR(rep.max_inequality_violation, 2.25, 1e-12);
  EXPECT_DOUBLE_EQ(rep.max_equality_violation, 0.0);
}

TEST(CheckFeasibility, BoundViolationIsASingleEntry) {
  NLPProblem p = unconstrained_quadratic();
  p.lower = Eigen::VectorXd::Constant(1, -1.0);
  p.upper = Eigen::VectorXd::Constant(1, 1.0);
  Eigen::VectorXd z(1);
  z << 1.1;
  const FeasibilityReport rep = check_feasibility(p, z, 1e-6);
  ASSERT_EQ(rep.entries.size(), 1u);
  EXPECT_EQ(rep.entries[0].name, "bound[0]");
  EXPECT_NEAR(rep.entries[0].violation, 0.1, 1e-12);
}

TEST(CheckFeasibility, EqualityMagnitudeIsAbsolute) {
  const NLPProblem p = equality_projection();
  Eigen::VectorXd z(2);
  z << 0.2, 0.2;  // sum misses one by 0.6 on the low side
  const FeasibilityReport rep = check_feasibility(p, z, 1e-6);
  ASSERT_EQ(rep.entries.size(), 1u);
  EXPECT_EQ(rep.entries[0].name, "sum_to_one");
  EXPECT_NEAR(rep.entries[0].violation, 0.6, 1e-12);
}

TEST(CheckFeasibility, ConvergedSolutionPassesItsOwnTolerance) {
  const NLPProblem p = active_inequalities();
  Eigen::VectorXd z0(1);
  z0 << 0.0;
  SolveOptions opt;
  const SolveResult r = solve(p, z0, opt);
  ASSERT_EQ(r.status, SolveStatus::Converged);
  const FeasibilityReport rep = check_feasibility(p, r.z, opt.feasibility_tol);
  EXPECT_TRUE(rep.entries.empty());
  EXPECT_LE(rep.max_violation, opt.feasibility_tol);
}

TEST(CheckFeasibility, DimensionMismatchThrows) {
  const NLPProblem p = equality_projection();
  Eigen::VectorXd z(5);
  z.setZero();
  EXPECT_THROW(check_feasibility(p, z, 1e-6), UsageError);
}

}  // namespace
}  // namespace srbmtraj
