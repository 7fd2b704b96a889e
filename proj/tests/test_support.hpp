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

// Shared helpers for the unit tests and the acceptance runner.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "crossflow/geometry.hpp"
#include "crossflow/nlp.hpp"
#include "crossflow/ocp.hpp"

namespace crossflow::testing {

#ifndef CROSSFLOW_SOURCE_DIR
#error "CROSSFLOW_SOURCE_DIR must be defined by the build"
#endif

inline std::string source_path(const std::string& relative) {
  return std::string(CROSSFLOW_SOURCE_DIR) + "/" + relative;
}

struct RectanglePair {
  geometry::Polytope p;
  geometry::Polytope q;
  double theta_p;
  double theta_q;
};

inline RectanglePair random_rectangle_pair(std::mt19937_64& rng, double spread) {
  std::uniform_real_distribution<double> size(0.5, 5.0);
  std::uniform_real_distribution<double> pos(-spread, spread);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  const geometry::Pose pp{pos(rng), pos(rng), ang(rng)};
  const geometry::Pose pq{pos(rng), pos(rng), ang(rng)};
  const double lp = size(rng), wp = size(rng), lq = size(rng), wq = size(rng);
  return {geometry::transform_polytope(geometry::base_polytope(lp, wp), pp),
          geometry::transform_polytope(geometry::base_polytope(lq, wq), pq), pp.theta, pq.theta};
}

// Multipliers on a transformed rectangle's four rows reproducing a given
// vector: A^T lambda = v with lambda >= 0. Exact because the rows are the
// signed axes of an orthonormal frame.
inline Eigen::Vector4d rectangle_multipliers(double theta, const geometry::Vec2& v) {
  const geometry::Vec2 u(std::cos(theta), std::sin(theta));
  const geometry::Vec2 w(-std::sin(theta), std::cos(theta));
  const double a = u.dot(v);
  const double b = w.dot(v);
  // Row order of base_polytope: +x, -x, -y, +y in the body frame.
  return {std::max(a, 0.0), std::max(-a, 0.0), std::max(-b, 0.0), std::max(b, 0.0)};
}

// Random certificate satisfying the dual constraints exactly: s with
// ||s|| <= 1, multipliers projected onto A^T lambda = -s and A^T lambda = s.
inline geometry::DualCertificate random_feasible_certificate(std::mt19937_64& rng,
                                                             const RectanglePair& pair) {
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double phi = ang(rng);
  const double r = std::sqrt(unit(rng));
  const geometry::Vec2 s(r * std::cos(phi), r * std::sin(phi));
  geometry::DualCertificate cert;
  cert.s = s;
  cert.lambda_pq = rectangle_multipliers(pair.theta_p, -s);
  cert.lambda_qp = rectangle_multipliers(pair.theta_q, s);
  return cert;
}

struct GradientCheck {
  double max_rel_error = 0.0;
  long entries = 0;
};

// Compares the exact objective gradient and every stored Jacobian entry with
// central differences. Columns that share no row are perturbed together, so
// each Jacobian entry still gets its own difference quotient. The error is
// |exact - fd| / max(1, |exact|).
inline GradientCheck check_gradients(const nlp::Problem& p, const Eigen::VectorXd& x,
                                     const std::vector<int>& objective_vars) {
  GradientCheck out;
  auto step = [&](int j) { return 1e-6 * std::max(1.0, std::abs(x(j))); };
  auto record = [&](double exact, double fd) {
    out.max_rel_error = std::max(out.max_rel_error, std::abs(exact - fd) / std::max(1.0, std::abs(exact)));
    ++out.entries;
  };

  const Eigen::VectorXd grad = p.gradient(x);
  for (int j : objective_vars) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += step(j);
    xm(j) -= step(j);
    record(grad(j), (p.objective(xp) - p.objective(xm)) / (xp(j) - xm(j)));
  }

  const auto& pattern = p.jacobian_pattern();
  const Eigen::VectorXd values = p.jacobian_values(x);
  const int n = p.n_vars();
  std::vector<std::vector<int>> col_rows(n);
  for (const auto& t : pattern) col_rows[t.col].push_back(t.row);
  // Greedy column colouring: a colour never holds two columns with a common row.
  std::vector<int> colour(n, -1);
  std::vector<std::vector<int>> row_colours(p.n_rows());
  int n_colours = 0;
  for (int j = 0; j < n; ++j) {
    if (col_rows[j].empty()) continue;
    std::vector<char> taken(n_colours + 1, 0);
    for (int r : col_rows[j]) {
      for (int c : row_colours[r]) taken[c] = 1;
    }
    int c = 0;
    while (taken[c]) ++c;
    colour[j] = c;
    n_colours = std::max(n_colours, c + 1);
    for (int r : col_rows[j]) row_colours[r].push_back(c);
  }
  // Row -> column owning that row within each colour.
  for (int c = 0; c < n_colours; ++c) {
    Eigen::VectorXd xp = x, xm = x;
    std::vector<int> owner(p.n_rows(), -1);
    for (int j = 0; j < n; ++j) {
      if (colour[j] != c) continue;
      xp(j) += step(j);
      xm(j) -= step(j);
      for (int r : col_rows[j]) owner[r] = j;
    }
    const Eigen::VectorXd gp = p.constraints(xp);
    const Eigen::VectorXd gm = p.constraints(xm);
    for (std::size_t k = 0; k < pattern.size(); ++k) {
      const int j = pattern[k].col;
      if (colour[j] != c || owner[pattern[k].row] != j) continue;
      const int r = pattern[k].row;
      record(values(static_cast<int>(k)), (gp(r) - gm(r)) / (xp(j) - xm(j)));
    }
  }
  return out;
}

// The initial guess perturbed by relative noise and kept strictly inside the
// variable bounds.
inline Eigen::VectorXd random_interior_point(const scenario::Scenario& scn, const ocp::Assembly& a,
                                             std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::VectorXd x = ocp::initial_guess(scn, a);
  const auto& lo = a.problem.x_lower();
  const auto& hi = a.problem.x_upper();
  for (int j = 0; j < x.size(); ++j) {
    x(j) += 0.05 * std::max(1.0, std::abs(x(j))) * noise(rng);
    const double width = std::isfinite(hi(j) - lo(j)) ? hi(j) - lo(j) : 1.0;
    if (std::isfinite(lo(j))) x(j) = std::max(x(j), lo(j) + 0.01 * width);
    if (std::isfinite(hi(j))) x(j) = std::min(x(j), hi(j) - 0.01 * width);
  }
  return x;
}

// Variables the objective can depend on: states, controls and t_f.
inline std::vector<int> trajectory_variables(const ocp::DecisionLayout& L) {
  std::vector<int> vars(L.final_time() + 1);
  for (int j = 0; j <= L.final_time(); ++j) vars[j] = j;
  return vars;
}

}  // namespace crossflow::testing
