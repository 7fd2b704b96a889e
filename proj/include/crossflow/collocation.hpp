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

#pragma once

#include <vector>

#include <Eigen/Core>

namespace crossflow::ocp {

enum class CollocationScheme { radau };

// Lagrange collocation on the unit interval with interpolation points
// tau_0 = 0 < tau_1 < ... < tau_d = 1, where tau_1..tau_d are the Radau IIA
// nodes (roots of P_d(2t - 1) - P_{d-1}(2t - 1)).
struct CollocationCoefficients {
  int degree = 0;
  // d + 1 interpolation points, starting with 0.
  std::vector<double> tau;
  // d x (d + 1): row j - 1 holds l_k'(tau_j) for k = 0..d, so the
  // interpolant's derivative at node j is sum_k D(j - 1, k) X_k.
  Eigen::MatrixXd D;
  // d + 1 weights with X(1) = sum_k end[k] X_k.
  Eigen::VectorXd end;
  // d weights over tau_1..tau_d; exact for polynomials of degree 2d - 2.
  Eigen::VectorXd quadrature;
  // (d + 1) x (d + 1): row i maps the values at tau_0..tau_d to the i-th
  // Bernstein coefficient of the interpolant on [0, 1]. The interpolant lies
  // in the convex hull of these coefficients.
  Eigen::MatrixXd bernstein;
};

// Throws InvalidArgument for degree outside [1, 9].
CollocationCoefficients collocation_coefficients(int degree,
                                                 CollocationScheme scheme = CollocationScheme::radau);

// Value at t of the Lagrange interpolant through (nodes[k], values[k]).
double lagrange_interpolate(const std::vector<double>& nodes, const std::vector<double>& values,
                            double t);

}  // namespace crossflow::ocp
