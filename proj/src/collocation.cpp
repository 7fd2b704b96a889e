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

#include "crossflow/collocation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "crossflow/errors.hpp"

namespace crossflow::ocp {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 1; k < n; ++k) {
    const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
    p0 = p1;
    p1 = p2;
  }
  // (x^2 - 1) P_n' = n (x P_n - P_{n-1}); only used away from x = +-1.
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

// Monomial coefficients (ascending) of P_n.
Eigen::VectorXd legendre_coeffs(int n) {
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(n + 1);
  Eigen::VectorXd p1 = Eigen::VectorXd::Zero(n + 1);
  p0(0) = 1.0;
  if (n == 0) return p0;
  p1(1) = 1.0;
  for (int k = 1; k < n; ++k) {
    Eigen::VectorXd p2 = Eigen::VectorXd::Zero(n + 1);
    for (int i = 0; i < n; ++i) p2(i + 1) += (2.0 * k + 1.0) * p1(i);
    p2 -= k * p0;
    p2 /= (k + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// Interior roots x in (-1, 1) of P_d(x) - P_{d-1}(x); the remaining root is
// x = 1.
std::vector<double> radau_interior_roots(int d) {
  std::vector<double> roots;
  if (d == 1) return roots;
  Eigen::VectorXd c = legendre_coeffs(d);
  c.head(d) -= legendre_coeffs(d - 1);
  // Divide out (x - 1) by synthetic division.
  Eigen::VectorXd q(d);
  double carry = 0.0;
  for (int i = d; i >= 1; --i) {
    carry = c(i) + carry;
    q(i - 1) = carry;
  }
  const int deg = d - 1;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 0; i < deg; ++i) companion(0, i) = -q(deg - 1 - i) / q(deg);
  for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
  const Eigen::VectorXcd ev = companion.eigenvalues();
  for (int i = 0; i < deg; ++i) {
    double x = ev(i).real();
    for (int it = 0; it < 50; ++it) {
      const auto [pd, dpd] = legendre(d, x);
      const auto [pm, dpm] = legendre(d - 1, x);
      const double step = (pd - pm) / (dpd - dpm);
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

// Gauss-Legendre rule on [0, 1] by Golub-Welsch.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    x[i] = 0.5 * (es.eigenvalues()(i) + 1.0);
    const double v = es.eigenvectors()(0, i);
    w[i] = v * v;  // 2 v^2 on [-1, 1], halved for [0, 1]
  }
}

double lagrange_basis(const std::vector<double>& nodes, int k, double t) {
  double v = 1.0;
  for (int j = 0; j < static_cast<int>(nodes.size()); ++j) {
    if (j != k) v *= (t - nodes[j]) / (nodes[k] - nodes[j]);
  }
  return v;
}

}  // namespace

CollocationCoefficients collocation_coefficients(int degree, CollocationScheme scheme) {
  if (scheme != CollocationScheme::radau) throw InvalidArgument("unsupported collocation scheme");
  if (degree < 1 || degree > 9) {
    throw InvalidArgument("collocation degree must lie in [1, 9], got " + std::to_string(degree));
  }
  const int d = degree;
  CollocationCoefficients c;
  c.degree = d;
  c.tau.push_back(0.0);
  for (double x : radau_interior_roots(d)) c.tau.push_back(0.5 * (x + 1.0));
  c.tau.push_back(1.0);

  // Barycentric weights over all d + 1 points.
  std::vector<double> bw(d + 1, 1.0);
  for (int k = 0; k <= d; ++k) {
    for (int j = 0; j <= d; ++j) {
      if (j != k) bw[k] /= (c.tau[k] - c.tau[j]);
    }
  }
  c.D = Eigen::MatrixXd::Zero(d, d + 1);
  for (int j = 1; j <= d; ++j) {
    double diag = 0.0;
    for (int k = 0; k <= d; ++k) {
      if (k == j) continue;
      const double v = (bw[k] / bw[j]) / (c.tau[j] - c.tau[k]);
      c.D(j - 1, k) = v;
      diag -= v;
    }
    c.D(j - 1, j) = diag;
  }
  c.end = Eigen::VectorXd::Zero(d + 1);
  c.end(d) = 1.0;

  const std::vector<double> nodes(c.tau.begin() + 1, c.tau.end());
  std::vector<double> gx;
  std::vector<double> gw;
  gauss_legendre(d, gx, gw);
  c.quadrature = Eigen::VectorXd::Zero(d);
  for (int k = 0; k < d; ++k) {
    for (int i = 0; i < d; ++i) c.quadrature(k) += gw[i] * lagrange_basis(nodes, k, gx[i]);
  }

  // Values to monomial coefficients, then monomial to Bernstein:
  // b_i = sum_{j <= i} C(i, j) / C(d, j) a_j.
  Eigen::MatrixXd V(d + 1, d + 1);
  for (int k = 0; k <= d; ++k) {
    for (int j = 0; j <= d; ++j) V(k, j) = std::pow(c.tau[k], j);
  }
  const Eigen::MatrixXd to_monomial = V.fullPivLu().inverse();
  auto binom = [](int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  };
  Eigen::MatrixXd to_bernstein = Eigen::MatrixXd::Zero(d + 1, d + 1);
  for (int i = 0; i <= d; ++i) {
    for (int j = 0; j <= i; ++j) to_bernstein(i, j) = binom(i, j) / binom(d, j);
  }
  c.bernstein = to_bernstein * to_monomial;
  return c;
}

double lagrange_interpolate(const std::vector<double>& nodes, const std::vector<double>& values,
                            double t) {
  if (nodes.size() != values.size() || nodes.empty()) {
    throw InvalidArgument("interpolation nodes and values must be nonempty and equally long");
  }
  double v = 0.0;
  for (int k = 0; k < static_cast<int>(nodes.size()); ++k) {
    v += values[k] * lagrange_basis(nodes, k, t);
  }
  return v;
}

}  // namespace crossflow::ocp
