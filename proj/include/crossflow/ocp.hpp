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

// Direct-collocation transcription of the multi-vehicle crossing problem.
//
// Time is normalised to tau in [0, 1] with one shared free final time t_f.
// Each vehicle carries, per interval k, the interval-start state X_{k,0},
// the node states X_{k,1..d} and one piecewise-constant input u_k. At every
// collocation node each vehicle pair and each vehicle/boundary pair carries
// a dual certificate (lambda_ij, lambda_ji, s) whose six rows are
//
//   -b_i^T lambda_ij - b_j^T lambda_ji >= margin
//    A_i^T lambda_ij + s = 0          (2 rows)
//    A_j^T lambda_ji - s = 0          (2 rows)
//    s^T s <= 1
//
// with A_i, b_i the footprint transformed to the node pose. Optional link
// blocks require the direction s of each node to separate the pair at the
// next node as well (the first four rows with fresh multipliers), which rules
// out tunnelling between nodes. The r, beta and V limits are imposed on the
// Bernstein coefficients of each interval polynomial, so they hold between
// nodes too.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "crossflow/collocation.hpp"
#include "crossflow/geometry.hpp"
#include "crossflow/ip_solver.hpp"
#include "crossflow/nlp.hpp"
#include "crossflow/scenario.hpp"
#include "crossflow/trajectory.hpp"

namespace crossflow::ocp {

enum class VarKind {
  state,
  control,
  final_time,
  pair_lambda_ij,
  pair_lambda_ji,
  pair_s,
  boundary_lambda_ir,
  boundary_lambda_ri,
  boundary_s,
};

struct VarInfo {
  VarKind kind = VarKind::state;
  int vehicle = -1;
  int other = -1;  // second vehicle or boundary index
  int interval = -1;
  int node = -1;
  bool link = false;  // multipliers of a link block
  int component = -1;
};

// Variable base indices of one certificate block at collocation node
// 1..degree and its first row.
struct PairBlock {
  int i = 0;
  int j = 0;
  int interval = 0;
  int node = 0;
  int lambda_ij = 0;
  int lambda_ji = 0;
  int s = 0;
  int row = 0;
};

struct BoundaryBlock {
  int vehicle = 0;
  int boundary = 0;
  int interval = 0;
  int node = 0;
  int lambda_ir = 0;
  int lambda_ri = 0;
  int s = 0;
  int row = 0;
};

// Certificate at block `to` built on the direction s of block `from` (the
// preceding node of the same pair); `from` and `to` index the pair or
// boundary block list.
struct LinkBlock {
  int from = 0;
  int to = 0;
  int lambda_a = 0;
  int lambda_b = 0;
  int row = 0;
};

struct RowCounts {
  int dynamics = 0;
  int continuity = 0;
  int initial = 0;
  int terminal = 0;
  int limit = 0;
  int pair = 0;
  int pair_link = 0;
  int boundary = 0;
  int boundary_link = 0;

  int total() const {
    return dynamics + continuity + initial + terminal + limit + pair + pair_link + boundary +
           boundary_link;
  }
};

class DecisionLayout {
 public:
  DecisionLayout() = default;
  // Rows are ordered dynamics, continuity, initial, terminal, limits, pair
  // blocks, pair links, boundary blocks, boundary links. Blocks of one pair
  // are listed in time order.
  DecisionLayout(int n_vehicles, int intervals, int degree,
                 std::vector<std::pair<int, int>> vehicle_pairs, bool hard_terminal,
                 bool links = false);

  int n_vehicles() const { return n_vehicles_; }
  int intervals() const { return intervals_; }
  int degree() const { return degree_; }
  int n_vars() const { return n_vars_; }
  int final_time() const { return tf_; }

  // node in 0..degree (0 is the interval start).
  int state(int vehicle, int interval, int node, int component) const;
  int control(int vehicle, int interval, int component) const;

  const std::vector<std::pair<int, int>>& vehicle_pairs() const { return pairs_; }
  const std::vector<PairBlock>& pair_blocks() const { return pair_blocks_; }
  const std::vector<BoundaryBlock>& boundary_blocks() const { return boundary_blocks_; }
  const std::vector<LinkBlock>& pair_links() const { return pair_links_; }
  const std::vector<LinkBlock>& boundary_links() const { return boundary_links_; }
  const RowCounts& rows() const { return rows_; }

  VarInfo describe(int index) const;
  std::string name(int index) const;

 private:
  int n_vehicles_ = 0;
  int intervals_ = 0;
  int degree_ = 0;
  int per_vehicle_ = 0;
  int tf_ = 0;
  int pair_base_ = 0;
  int pair_link_base_ = 0;
  int boundary_base_ = 0;
  int boundary_link_base_ = 0;
  int n_vars_ = 0;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<PairBlock> pair_blocks_;
  std::vector<BoundaryBlock> boundary_blocks_;
  std::vector<LinkBlock> pair_links_;
  std::vector<LinkBlock> boundary_links_;
  RowCounts rows_;
};

struct Assembly {
  nlp::Problem problem;
  DecisionLayout layout;
  CollocationCoefficients coefficients;
  double t_lower = 0.0;
  double t_upper = 0.0;
};

// Reference horizon used for the t_f bounds and guess:
// max(theoretical_lower_bound, 0.1 s).
double reference_time(const scenario::Scenario& scn);

// Vehicle pairs kept by the transcription (all pairs unless pruning is on).
std::vector<std::pair<int, int>> active_pairs(const scenario::Scenario& scn);

Assembly assemble(const scenario::Scenario& scn);

// Adds the objective terms alpha t_f^2 + t_f sum_k h sum_j w_j
// [e^T Q e + gamma a^2] with e the pose error at node (k, j).
void build_objective(nlp::Problem& p, const DecisionLayout& layout,
                     const scenario::Scenario& scn, const CollocationCoefficients& coeffs);

// Route from the initial pose along the entry lane line to its crossing with
// the exit lane line, then on to the terminal pose.
std::vector<geometry::Vec2> guess_route(const scenario::VehicleSpec& v);

Eigen::VectorXd initial_guess(const scenario::Scenario& scn, const Assembly& a);

struct PairCertificate {
  int i = 0;
  int j = 0;
  double t = 0.0;
  geometry::DualCertificate certificate;
  double objective = 0.0;
};

struct BoundaryCertificate {
  int vehicle = 0;
  int boundary = 0;
  double t = 0.0;
  geometry::DualCertificate certificate;
  double objective = 0.0;
};

struct Solution {
  std::vector<Trajectory> trajectories;
  double t_f = 0.0;
  std::vector<PairCertificate> pair_certificates;
  std::vector<BoundaryCertificate> boundary_certificates;
};

// Samples every vehicle at t = 0 and at each collocation node.
Solution extract(const Eigen::VectorXd& x, const Assembly& a, const scenario::Scenario& scn);

struct OcpResult {
  solver::SolveReport report;
  Solution solution;
};

// assemble, initial_guess, solve, extract.
OcpResult solve_ocp(const scenario::Scenario& scn, const solver::SolverConfig& cfg = {});

}  // namespace crossflow::ocp
