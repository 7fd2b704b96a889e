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

// Planar convex polytopes in half-space form {X : A X <= b}, the primal
// distance between two of them, and the dual certificates whose objective
// -b_P^T lambda_pq - b_Q^T lambda_qp lower-bounds that distance.

#pragma once

#include <vector>

#include <Eigen/Core>

namespace crossflow::geometry {

using Vec2 = Eigen::Vector2d;

inline constexpr double kDefaultFeasibilityTol = 1e-8;

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

// Rows of `A` are outward normals (not necessarily unit length); `b` holds
// one offset per row. Construction rejects empty or unbounded sets.
class Polytope {
 public:
  Polytope(Eigen::MatrixX2d A, Eigen::VectorXd b);

  const Eigen::MatrixX2d& A() const { return A_; }
  const Eigen::VectorXd& b() const { return b_; }
  int rows() const { return static_cast<int>(b_.size()); }

  bool contains(const Vec2& p, double tol = 0.0) const;

  // Counter-clockwise vertex loop (one vertex for a degenerate point set).
  const std::vector<Vec2>& vertices() const { return vertices_; }

 private:
  Eigen::MatrixX2d A_;
  Eigen::VectorXd b_;
  std::vector<Vec2> vertices_;
};

struct DualCertificate {
  Eigen::VectorXd lambda_pq;  // one entry per row of the first polytope
  Eigen::VectorXd lambda_qp;  // one entry per row of the second polytope
  Vec2 s = Vec2::Zero();
};

// Line {X : normal . X = offset}; the first polytope lies on the side where
// normal . X < offset.
struct Hyperplane {
  Vec2 normal = Vec2::UnitX();
  double offset = 0.0;

  double signed_distance(const Vec2& p) const { return normal.dot(p) - offset; }
};

struct DualSolution {
  DualCertificate certificate;
  double objective = 0.0;
};

// Axis-aligned rectangle centred at the origin with rows
// (1,0), (-1,0), (0,-1), (0,1).
Polytope base_polytope(double length, double width);

// Axis-aligned box [x_min, x_max] x [y_min, y_max] with the same row order
// as base_polytope.
Polytope box_polytope(double x_min, double x_max, double y_min, double y_max);

// A' = A R(theta), b' = b + A R(theta) [x, y]^T with
// R(theta) = [[cos, sin], [-sin, cos]].
Polytope transform_polytope(const Polytope& base, const Pose& pose);

// Exact Euclidean distance by vertex/edge enumeration; 0 when the sets meet.
double primal_distance(const Polytope& p, const Polytope& q);

double dual_objective(const Polytope& p, const Polytope& q,
                      const DualCertificate& cert);

bool dual_feasible(const Polytope& p, const Polytope& q,
                   const DualCertificate& cert,
                   double tol = kDefaultFeasibilityTol);

// Closed-form dual maximiser. For disjoint sets the objective equals the
// primal distance; for intersecting sets it returns the certificate along the
// axis of least penetration, whose objective is <= 0.
DualSolution solve_dual(const Polytope& p, const Polytope& q);

// Hyperplane with unit normal -s/|s| placed midway between the two sets.
// Throws InvalidArgument unless `cert` is feasible (within `tol`) with a
// positive objective.
Hyperplane separating_hyperplane(const Polytope& p, const Polytope& q,
                                 const DualCertificate& cert,
                                 double tol = 1e-6);

}  // namespace crossflow::geometry
