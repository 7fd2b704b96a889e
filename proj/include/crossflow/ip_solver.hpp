// Copyright 2026 The Crossflow Authors
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

// Primal-dual interior-point method for nlp::Problem.
//
// Inequality rows receive slacks, every finite bound on a variable or slack
// enters a log barrier, and each iteration takes a Newton step on the
// perturbed KKT conditions. The condensed system
//
//   [ W + Sigma_x + dw I    J^T ] [dx]      [ r_x ]
//   [ J                     -D  ] [dy]  = - [ r_c ]
//
// is factored with a sparse LDL^T; dw grows until the inertia is (n, m).
// Steps are cut back to the fraction-to-boundary rule and then by a filter
// line search on (constraint violation, barrier objective) with second-order
// corrections; when the filter search fails, an Armijo backtracking search on
// the l1 merit function phi_mu(x) + nu |c(x)|_1 takes over.

#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "crossflow/nlp.hpp"

namespace crossflow::solver {

struct SolverConfig {
  double kkt_tol = 1e-6;
  int max_iters = 3000;
  double initial_barrier = 0.1;
  double barrier_shrink = 0.2;
  double fraction_to_boundary = 0.995;
  // Static dual regularisation on the constraint block.
  double regularization_floor = 1e-8;
  // The barrier is reduced once the subproblem error is at most
  // barrier_tol_factor * mu.
  double barrier_tol_factor = 1.0;
  double bound_push = 1e-2;
  // Functions are scaled once at x0 so that gradient inf-norms are at most
  // this value. Non-positive disables scaling.
  double max_gradient = 100.0;
};

enum class SolveStatus { converged, max_iters, restoration_failed, singular_system };

const char* to_string(SolveStatus s);

struct KktResiduals {
  double stationarity = 0.0;
  double primal_feasibility = 0.0;
  double complementarity = 0.0;

  double max() const;
};

// Multipliers of the original problem, sign convention
//   L = f + y^T g - z_L^T (x - x_L) - z_U^T (x_U - x),
// so y_i >= 0 when the upper row bound is active and y_i <= 0 at the lower.
struct Multipliers {
  Eigen::VectorXd y;
  Eigen::VectorXd z_lower;
  Eigen::VectorXd z_upper;
};

// Scale factors applied to f and to each row of g.
struct Scaling {
  double objective = 1.0;
  Eigen::VectorXd rows;
};

struct IterationRecord {
  int iter = 0;
  double mu = 0.0;
  double objective = 0.0;
  double inf_pr = 0.0;
  double inf_du = 0.0;
  double compl_ = 0.0;
  double regularization = 0.0;
  double alpha_primal = 0.0;
  double alpha_dual = 0.0;
  int line_search_trials = 0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::max_iters;
  int iterations = 0;
  KktResiduals residuals;
  double objective = 0.0;
  double wall_time = 0.0;
  Eigen::VectorXd x;
  Multipliers multipliers;
  Scaling scaling;
  std::vector<IterationRecord> log;
  std::vector<std::string> warnings;
};

// Residuals on the problem scaled by `scaling` (identity when null).
// Stationarity is divided by s_d = max(1, (|y|_1 + |z|_1) / (100 (n + m)));
// complementarity is the largest |gap_i * z_i| over bounds and inequality
// rows, taking the row gap on the side selected by the sign of y_i.
KktResiduals kkt_residuals(const nlp::Problem& p, const Eigen::VectorXd& x,
                           const Multipliers& mult, const Scaling* scaling = nullptr);

// Never throws for numerical trouble; failures are reported through status.
SolveReport solve(const nlp::Problem& p, const Eigen::VectorXd& x0,
                  const SolverConfig& cfg = {});

// One header line, then one tab-separated line per iteration.
std::string iteration_log_tsv(const SolveReport& report);

}  // namespace crossflow::solver
