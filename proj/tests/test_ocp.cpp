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

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "crossflow/errors.hpp"
#include "crossflow/ocp.hpp"
#include "crossflow/scenario.hpp"
#include "test_support.hpp"

namespace crossflow::ocp {
namespace {

scenario::Scenario one_vehicle(int intervals = 4, int degree = 3) {
  scenario::Scenario s;
  scenario::VehicleSpec v;
  v.id = "a";
  v.initial_pose = {-30.0, -2.5, 0.0};
  v.terminal_pose = {30.0, -2.5, 0.0};
  s.vehicles.push_back(v);
  s.transcription.intervals = intervals;
  s.transcription.degree = degree;
  scenario::validate(s);
  return s;
}

scenario::Scenario two_vehicles(int intervals = 4, int degree = 3) {
  scenario::Scenario s = one_vehicle(intervals, degree);
  scenario::VehicleSpec v;
  v.id = "b";
  v.initial_pose = {2.5, -25.0, std::numbers::pi / 2};
  v.terminal_pose = {-30.0, 2.5, std::numbers::pi};
  s.vehicles.push_back(v);
  scenario::validate(s);
  return s;
}

// States parked on the target pose, zero controls.
Eigen::VectorXd parked(const scenario::Scenario& s, const Assembly& a, double tf, double accel) {
  const DecisionLayout& L = a.layout;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(L.n_vars());
  for (int v = 0; v < L.n_vehicles(); ++v) {
    for (int k = 0; k < L.intervals(); ++k) {
      x(L.control(v, k, 0)) = accel;
      for (int j = 0; j <= L.degree(); ++j) {
        x(L.state(v, k, j, 2)) = 10.0;
        x(L.state(v, k, j, 3)) = s.vehicles[v].terminal_pose.x;
        x(L.state(v, k, j, 4)) = s.vehicles[v].terminal_pose.y;
        x(L.state(v, k, j, 5)) = s.vehicles[v].terminal_pose.theta;
      }
    }
  }
  x(L.final_time()) = tf;
  return x;
}

TEST(Objective, VanishesAtTargetWithZeroTime) {
  const auto s = one_vehicle();
  const Assembly a = assemble(s);
  EXPECT_NEAR(a.problem.objective(parked(s, a, 0.0, 0.0)), 0.0, 1e-15);
}

TEST(Objective, TimeTermOnly) {
  auto s = one_vehicle();
  s.weights.Q.setZero();
  const Assembly a = assemble(s);
  EXPECT_NEAR(a.problem.objective(parked(s, a, 4.57, 0.0)), 20.8849, 1e-12);
}

TEST(Objective, EnergyTermIntegral) {
  auto s = one_vehicle();
  s.weights.alpha = 0.0;
  s.weights.Q.setZero();
  s.weights.gamma = 1.0;
  const Assembly a = assemble(s);
  EXPECT_NEAR(a.problem.objective(parked(s, a, 2.0, 3.0)), 18.0, 1e-12);
}

TEST(Objective, TrackingTermIsQuadratureOfPoseError) {
  auto s = one_vehicle();
  s.weights.alpha = 0.0;
  s.weights.Q = Eigen::Vector3d(1.0, 2.0, 0.5).asDiagonal();
  const Assembly a = assemble(s);
  // Constant offset (1, -1, 0.2) from the target over tf = 3.
  Eigen::VectorXd x = parked(s, a, 3.0, 0.0);
  const DecisionLayout& L = a.layout;
  for (int k = 0; k < L.intervals(); ++k) {
    for (int j = 0; j <= L.degree(); ++j) {
      x(L.state(0, k, j, 3)) += 1.0;
      x(L.state(0, k, j, 4)) -= 1.0;
      x(L.state(0, k, j, 5)) += 0.2;
    }
  }
  EXPECT_NEAR(a.problem.objective(x), 3.0 * (1.0 + 2.0 + 0.5 * 0.04), 1e-12);
}

TEST(Layout, RowCountsForOneVehicle) {
  const int N = 4, d = 3;
  const Assembly a = assemble(one_vehicle(N, d));
  const RowCounts& r = a.layout.rows();
  EXPECT_EQ(r.dynamics, N * d * 6);
  EXPECT_EQ(r.continuity, (N - 1) * 6);
  EXPECT_EQ(r.initial, 6);
  EXPECT_EQ(r.terminal, 3);
  EXPECT_EQ(r.limit, N * 3 * (d - 1));
  EXPECT_EQ(r.pair, 0);
  EXPECT_EQ(r.boundary, 4 * N * d * 6);
  EXPECT_EQ(r.boundary_link, 4 * (N * d - 1) * 5);
  EXPECT_EQ(a.problem.n_rows(), r.total());
}

TEST(Layout, PairBlocksAtEveryNode) {
  const Assembly a = assemble(two_vehicles(15, 5));
  EXPECT_EQ(a.layout.pair_blocks().size(), 75u);
  EXPECT_EQ(a.layout.rows().pair, 75 * 6);
  EXPECT_EQ(a.layout.pair_links().size(), 74u);
  std::set<std::pair<int, int>> nodes;
  for (const PairBlock& b : a.layout.pair_blocks()) nodes.insert({b.interval, b.node});
  EXPECT_EQ(nodes.size(), 75u);
}

TEST(Layout, LinksCanBeDisabled) {
  auto s = two_vehicles();
  s.transcription.separation_links = false;
  const Assembly a = assemble(s);
  EXPECT_TRUE(a.layout.pair_links().empty());
  EXPECT_TRUE(a.layout.boundary_links().empty());
  EXPECT_EQ(a.layout.rows().pair_link, 0);
}

TEST(Layout, IndexRangesPartitionVariables) {
  const Assembly a = assemble(two_vehicles());
  const DecisionLayout& L = a.layout;
  std::vector<int> hits(L.n_vars(), 0);
  for (int v = 0; v < 2; ++v) {
    for (int k = 0; k < L.intervals(); ++k) {
      for (int j = 0; j <= L.degree(); ++j) {
        for (int c = 0; c < 6; ++c) ++hits[L.state(v, k, j, c)];
      }
      for (int c = 0; c < 2; ++c) ++hits[L.control(v, k, c)];
    }
  }
  ++hits[L.final_time()];
  for (const PairBlock& b : L.pair_blocks()) {
    for (int q = 0; q < 10; ++q) ++hits[b.lambda_ij + q];
  }
  for (const BoundaryBlock& b : L.boundary_blocks()) {
    for (int q = 0; q < 10; ++q) ++hits[b.lambda_ir + q];
  }
  for (const auto* links : {&L.pair_links(), &L.boundary_links()}) {
    for (const LinkBlock& l : *links) {
      for (int q = 0; q < 8; ++q) ++hits[l.lambda_a + q];
    }
  }
  for (int i = 0; i < L.n_vars(); ++i) ASSERT_EQ(hits[i], 1) << L.name(i);
  EXPECT_EQ(L.describe(L.final_time()).kind, VarKind::final_time);
  EXPECT_EQ(L.describe(L.pair_blocks()[3].s + 1).kind, VarKind::pair_s);
  EXPECT_TRUE(L.describe(L.boundary_links()[0].lambda_b).link);
  EXPECT_THROW(L.describe(L.n_vars()), InvalidArgument);
}

TEST(Layout, BoundsAreOrdered) {
  const Assembly a = assemble(two_vehicles());
  EXPECT_TRUE((a.problem.x_lower().array() <= a.problem.x_upper().array()).all());
  EXPECT_TRUE((a.problem.g_lower().array() <= a.problem.g_upper().array()).all());
  const int tf = a.layout.final_time();
  EXPECT_DOUBLE_EQ(a.problem.x_lower()(tf), 0.5 * reference_time(two_vehicles()));
}

TEST(Assemble, CollocationExactOnPolynomialTrajectory) {
  // Straight run at constant acceleration solves the model exactly with
  // polynomial states of degree 2.
  const auto s = one_vehicle(5, 4);
  const Assembly a = assemble(s);
  const DecisionLayout& L = a.layout;
  const double tf = 4.0, acc = 1.0;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(L.n_vars());
  x(L.final_time()) = tf;
  for (int k = 0; k < L.intervals(); ++k) {
    x(L.control(0, k, 0)) = acc;
    for (int j = 0; j <= L.degree(); ++j) {
      const double t = (k + a.coefficients.tau[j]) * tf / L.intervals();
      x(L.state(0, k, j, 2)) = 10.0 + acc * t;
      x(L.state(0, k, j, 3)) = -30.0 + 10.0 * t + 0.5 * acc * t * t;
      x(L.state(0, k, j, 4)) = -2.5;
    }
  }
  const Eigen::VectorXd g = a.problem.constraints(x);
  const int n = L.rows().dynamics + L.rows().continuity + L.rows().initial;
  const Eigen::VectorXd violation = (a.problem.g_lower() - g).cwiseMax(g - a.problem.g_upper());
  EXPECT_LT(violation.head(n).maxCoeff(), 1e-10);
}

TEST(Assemble, GradientsMatchFiniteDifferences) {
  const auto s = two_vehicles(3, 3);
  const Assembly a = assemble(s);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 3; ++trial) {
    const Eigen::VectorXd x = testing::random_interior_point(s, a, rng);
    const auto check = testing::check_gradients(a.problem, x, testing::trajectory_variables(a.layout));
    EXPECT_GT(check.entries, 1000);
    EXPECT_LE(check.max_rel_error, 1e-6);
  }
}

TEST(Assemble, HessianMatchesGradientDifferences) {
  const auto s = two_vehicles(2, 2);
  const Assembly a = assemble(s);
  std::mt19937_64 rng(23);
  const Eigen::VectorXd x = testing::random_interior_point(s, a, rng);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(a.problem.n_rows());
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < y.size(); ++i) y(i) = noise(rng);
  // Gradient of the Lagrangian f + y^T g.
  auto lagrangian_gradient = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd gl = a.problem.gradient(z);
    const Eigen::VectorXd vals = a.problem.jacobian_values(z);
    const auto& pat = a.problem.jacobian_pattern();
    for (std::size_t k = 0; k < pat.size(); ++k) gl(pat[k].col) += y(pat[k].row) * vals(k);
    return gl;
  };
  const Eigen::VectorXd h = a.problem.hessian_values(x, 1.0, y);
  const auto& hp = a.problem.hessian_pattern();
  const int n = a.problem.n_vars();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < hp.size(); ++k) {
    H(hp[k].row, hp[k].col) += h(k);
    if (hp[k].row != hp[k].col) H(hp[k].col, hp[k].row) += h(k);
  }
  double worst = 0.0;
  for (int j = 0; j < n; ++j) {
    const double step = 1e-6 * std::max(1.0, std::abs(x(j)));
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += step;
    xm(j) -= step;
    const Eigen::VectorXd col = (lagrangian_gradient(xp) - lagrangian_gradient(xm)) / (2 * step);
    for (int i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(col(i) - H(i, j)) / std::max(1.0, std::abs(H(i, j))));
    }
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Assemble, SwappingIdenticalVehiclesPermutesTheProblem) {
  scenario::Scenario s = two_vehicles(3, 3);
  scenario::Scenario t = s;
  std::swap(t.vehicles[0], t.vehicles[1]);
  const Assembly A = assemble(s);
  const Assembly B = assemble(t);
  const DecisionLayout& LA = A.layout;
  const DecisionLayout& LB = B.layout;
  ASSERT_EQ(LA.n_vars(), LB.n_vars());
  std::mt19937_64 rng(5);
  const Eigen::VectorXd xa = testing::random_interior_point(s, A, rng);
  Eigen::VectorXd xb = Eigen::VectorXd::Zero(LB.n_vars());
  for (int v = 0; v < 2; ++v) {
    for (int k = 0; k < LA.intervals(); ++k) {
      for (int j = 0; j <= LA.degree(); ++j) {
        for (int c = 0; c < 6; ++c) xb(LB.state(1 - v, k, j, c)) = xa(LA.state(v, k, j, c));
      }
      for (int c = 0; c < 2; ++c) xb(LB.control(1 - v, k, c)) = xa(LA.control(v, k, c));
    }
  }
  xb(LB.final_time()) = xa(LA.final_time());
  // The pair's roles swap: lambda_ij <-> lambda_ji and s -> -s.
  for (std::size_t b = 0; b < LA.pair_blocks().size(); ++b) {
    const PairBlock& pa = LA.pair_blocks()[b];
    const PairBlock& pb = LB.pair_blocks()[b];
    xb.segment(pb.lambda_ij, 4) = xa.segment(pa.lambda_ji, 4);
    xb.segment(pb.lambda_ji, 4) = xa.segment(pa.lambda_ij, 4);
    xb.segment(pb.s, 2) = -xa.segment(pa.s, 2);
  }
  for (std::size_t l = 0; l < LA.pair_links().size(); ++l) {
    xb.segment(LB.pair_links()[l].lambda_a, 4) = xa.segment(LA.pair_links()[l].lambda_b, 4);
    xb.segment(LB.pair_links()[l].lambda_b, 4) = xa.segment(LA.pair_links()[l].lambda_a, 4);
  }
  std::map<std::tuple<int, int, int, int>, int> where;
  for (std::size_t b = 0; b < LB.boundary_blocks().size(); ++b) {
    const BoundaryBlock& bb = LB.boundary_blocks()[b];
    where[{bb.vehicle, bb.boundary, bb.interval, bb.node}] = static_cast<int>(b);
  }
  std::vector<int> image(LA.boundary_blocks().size());
  for (std::size_t b = 0; b < LA.boundary_blocks().size(); ++b) {
    const BoundaryBlock& ba = LA.boundary_blocks()[b];
    image[b] = where.at({1 - ba.vehicle, ba.boundary, ba.interval, ba.node});
    xb.segment(LB.boundary_blocks()[image[b]].lambda_ir, 10) = xa.segment(ba.lambda_ir, 10);
  }
  for (const LinkBlock& la : LA.boundary_links()) {
    const auto it = std::find_if(LB.boundary_links().begin(), LB.boundary_links().end(),
                                 [&](const LinkBlock& lb) { return lb.to == image[la.to]; });
    ASSERT_NE(it, LB.boundary_links().end());
    xb.segment(it->lambda_a, 8) = xa.segment(la.lambda_a, 8);
  }

  EXPECT_NEAR(A.problem.objective(xa), B.problem.objective(xb), 1e-9);
  Eigen::VectorXd ga = A.problem.constraints(xa);
  Eigen::VectorXd gb = B.problem.constraints(xb);
  std::sort(ga.begin(), ga.end());
  std::sort(gb.begin(), gb.end());
  EXPECT_LT((ga - gb).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(InitialGuess, WithinBoundsAndTimedFromReference) {
  const auto s = two_vehicles();
  const Assembly a = assemble(s);
  const Eigen::VectorXd x = initial_guess(s, a);
  EXPECT_TRUE((x.array() >= a.problem.x_lower().array()).all());
  EXPECT_TRUE((x.array() <= a.problem.x_upper().array()).all());
  EXPECT_NEAR(x(a.layout.final_time()), 1.2 * reference_time(s), 1e-12);
}

TEST(InitialGuess, ParkedVehicleStaysPut) {
  auto s = one_vehicle();
  s.vehicles[0].terminal_pose = s.vehicles[0].initial_pose;
  const Assembly a = assemble(s);
  const Eigen::VectorXd x = initial_guess(s, a);
  const DecisionLayout& L = a.layout;
  for (int k = 0; k < L.intervals(); ++k) {
    for (int j = 0; j <= L.degree(); ++j) {
      EXPECT_DOUBLE_EQ(x(L.state(0, k, j, 3)), -30.0);
      EXPECT_DOUBLE_EQ(x(L.state(0, k, j, 4)), -2.5);
    }
  }
}

TEST(InitialGuess, SeparatedVehiclesSatisfyPairMargin) {
  scenario::Scenario s = one_vehicle(5, 3);
  scenario::VehicleSpec b;
  b.id = "b";
  b.initial_pose = {30.0, 2.5, std::numbers::pi};
  b.terminal_pose = {-30.0, 2.5, std::numbers::pi};
  // Opposite lanes with 5 m between centre lines: 3 m between bodies.
  s.vehicles.push_back(b);
  const Assembly a = assemble(s);
  const Eigen::VectorXd g = a.problem.constraints(initial_guess(s, a));
  for (const PairBlock& blk : a.layout.pair_blocks()) EXPECT_GE(g(blk.row), s.d_min - 1e-9);
}

TEST(Extract, RoundTripsTheGuess) {
  const auto s = two_vehicles(4, 3);
  const Assembly a = assemble(s);
  const Eigen::VectorXd x = initial_guess(s, a);
  const Solution sol = extract(x, a, s);
  const DecisionLayout& L = a.layout;
  ASSERT_EQ(sol.trajectories.size(), 2u);
  EXPECT_EQ(sol.t_f, x(L.final_time()));
  for (int v = 0; v < 2; ++v) {
    const Trajectory& t = sol.trajectories[v];
    EXPECT_EQ(t.vehicle_id, s.vehicles[v].id);
    ASSERT_EQ(t.times.size(), static_cast<std::size_t>(L.intervals() * L.degree() + 1));
    EXPECT_EQ(t.times.front(), 0.0);
    EXPECT_EQ(t.times.back(), sol.t_f);
    for (std::size_t i = 1; i < t.times.size(); ++i) EXPECT_GT(t.times[i], t.times[i - 1]);
    EXPECT_EQ(t.interval_controls.size(), static_cast<std::size_t>(L.intervals()));
    EXPECT_EQ(t.states[5].x, x(L.state(v, 1, 2, 3)));
    EXPECT_EQ(t.states[5].theta, x(L.state(v, 1, 2, 5)));
  }
  EXPECT_EQ(sol.pair_certificates.size(), L.pair_blocks().size());
  EXPECT_THROW(extract(x.head(10), a, s), InvalidArgument);
}

TEST(SolveOcp, CertificatesImplyClearance) {
  const auto s = two_vehicles(6, 3);
  solver::SolverConfig cfg;
  cfg.max_iters = 1500;
  const OcpResult r = solve_ocp(s, cfg);
  ASSERT_EQ(r.report.status, solver::SolveStatus::converged);
  const Solution& sol = r.solution;
  const double eps = 1e-5;
  for (const PairCertificate& c : sol.pair_certificates) {
    // Locate the node the certificate belongs to.
    const auto& ti = sol.trajectories[c.i];
    const auto it = std::find_if(ti.times.begin(), ti.times.end(),
                                 [&](double t) { return std::abs(t - c.t) < 1e-12; });
    ASSERT_NE(it, ti.times.end());
    const std::size_t n = it - ti.times.begin();
    const auto& a = ti.states[n];
    const auto& b = sol.trajectories[c.j].states[n];
    const double d = geometry::primal_distance(scenario::footprint(s, {a.x, a.y, a.theta}),
                                               scenario::footprint(s, {b.x, b.y, b.theta}));
    EXPECT_GE(c.objective, s.d_min - eps);
    EXPECT_GE(d, c.objective - eps);
  }
}

}  // namespace
}  // namespace crossflow::ocp
