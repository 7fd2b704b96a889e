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

#include "crossflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include "crossflow/errors.hpp"

namespace crossflow::geometry {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double scale_of(const Eigen::VectorXd& b) {
  return std::max(1.0, b.cwiseAbs().maxCoeff());
}

// Normals positively span the plane iff no angular gap between consecutive
// normals reaches pi.
bool normals_bounded(const Eigen::MatrixX2d& A) {
  std::vector<double> angles;
  angles.reserve(A.rows());
  for (int i = 0; i < A.rows(); ++i) angles.push_back(std::atan2(A(i, 1), A(i, 0)));
  std::sort(angles.begin(), angles.end());
  if (angles.size() < 3) return false;
  double max_gap = angles.front() + 2.0 * std::numbers::pi - angles.back();
  for (size_t i = 1; i < angles.size(); ++i) {
    max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
  }
  return max_gap < std::numbers::pi - 1e-12;
}

std::vector<Vec2> enumerate_vertices(const Eigen::MatrixX2d& A,
                                     const Eigen::VectorXd& b) {
  const double tol = 1e-9 * scale_of(b);
  std::vector<Vec2> pts;
  const int m = static_cast<int>(A.rows());
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const Vec2 ai = A.row(i).transpose();
      const Vec2 aj = A.row(j).transpose();
      const double det = cross(ai, aj);
      if (std::abs(det) < 1e-14 * ai.norm() * aj.norm()) continue;
      const Vec2 p((b(i) * aj.y() - b(j) * ai.y()) / det,
                   (ai.x() * b(j) - aj.x() * b(i)) / det);
      if (((A * p - b).array() <= tol).all()) pts.push_back(p);
    }
  }
  if (pts.empty()) return pts;

  // Deduplicate, then order counter-clockwise about the centroid.
  std::vector<Vec2> unique;
  for (const Vec2& p : pts) {
    const bool seen = std::any_of(unique.begin(), unique.end(), [&](const Vec2& q) {
      return (p - q).norm() <= 1e-9 * scale_of(b);
    });
    if (!seen) unique.push_back(p);
  }
  Vec2 centroid = Vec2::Zero();
  for (const Vec2& p : unique) centroid += p;
  centroid /= static_cast<double>(unique.size());
  std::sort(unique.begin(), unique.end(), [&](const Vec2& a, const Vec2& c) {
    return std::atan2(a.y() - centroid.y(), a.x() - centroid.x()) <
           std::atan2(c.y() - centroid.y(), c.x() - centroid.x());
  });
  return unique;
}

struct ClosestPair {
  double distance = kInf;
  Vec2 on_p = Vec2::Zero();
  Vec2 on_q = Vec2::Zero();
};

Vec2 closest_on_segment(const Vec2& p, const Vec2& a, const Vec2& c) {
  const Vec2 ab = c - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

// Minimum over vertex-to-edge distances in both directions; exact for
// disjoint convex polygons.
ClosestPair closest_points(const std::vector<Vec2>& vp, const std::vector<Vec2>& vq) {
  ClosestPair best;
  auto scan = [&best](const std::vector<Vec2>& from, const std::vector<Vec2>& to,
                      bool from_is_p) {
    const size_t n = to.size();
    for (const Vec2& v : from) {
      for (size_t k = 0; k < n; ++k) {
        const Vec2 c = closest_on_segment(v, to[k], to[(k + 1) % n]);
        const double d = (v - c).norm();
        if (d < best.distance) {
          best.distance = d;
          best.on_p = from_is_p ? v : c;
          best.on_q = from_is_p ? c : v;
        }
      }
    }
  };
  scan(vp, vq, true);
  scan(vq, vp, false);
  return best;
}

// Separating-axis gap along unit direction u pointing from P towards Q.
double axis_gap(const Vec2& u, const std::vector<Vec2>& vp, const std::vector<Vec2>& vq) {
  double max_p = -kInf;
  double min_q = kInf;
  for (const Vec2& v : vp) max_p = std::max(max_p, u.dot(v));
  for (const Vec2& v : vq) min_q = std::min(min_q, u.dot(v));
  return min_q - max_p;
}

struct AxisGap {
  Vec2 axis = Vec2::UnitX();
  double gap = -kInf;
};

// Largest separating-axis gap over all edge normals of both polygons.
AxisGap best_axis(const Polytope& p, const Polytope& q) {
  AxisGap best;
  auto consider = [&](const Eigen::MatrixX2d& A, double sign) {
    for (int i = 0; i < A.rows(); ++i) {
      const Vec2 u = sign * A.row(i).transpose().normalized();
      const double g = axis_gap(u, p.vertices(), q.vertices());
      if (g > best.gap) best = {u, g};
    }
  };
  consider(p.A(), 1.0);    // outward normals of P point towards Q
  consider(q.A(), -1.0);   // inward normals of Q point from P to Q
  return best;
}

// max -b^T lambda  s.t.  A^T lambda = target, lambda >= 0.
// Optimal basic solutions have at most two nonzeros, so enumerating supports
// of size one and two is exact for the planar case.
std::optional<std::pair<Eigen::VectorXd, double>> support_lp(
    const Eigen::MatrixX2d& A, const Eigen::VectorXd& b, const Vec2& target) {
  const int m = static_cast<int>(A.rows());
  const double tnorm = target.norm();
  std::optional<std::pair<Eigen::VectorXd, double>> best;
  auto offer = [&](Eigen::VectorXd lambda) {
    const double residual = (A.transpose() * lambda - target).norm();
    if (residual > 1e-10 * std::max(1.0, tnorm)) return;
    const double obj = -b.dot(lambda);
    if (!best || obj > best->second) best.emplace(std::move(lambda), obj);
  };
  if (tnorm == 0.0) {
    offer(Eigen::VectorXd::Zero(m));
    return best;
  }
  for (int i = 0; i < m; ++i) {
    const Vec2 ai = A.row(i).transpose();
    if (ai.dot(target) <= 0.0) continue;
    if (std::abs(cross(ai, target)) > 1e-12 * ai.norm() * tnorm) continue;
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
    lambda(i) = tnorm / ai.norm();
    offer(std::move(lambda));
  }
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const Vec2 ai = A.row(i).transpose();
      const Vec2 aj = A.row(j).transpose();
      const double det = cross(ai, aj);
      if (std::abs(det) < 1e-14 * ai.norm() * aj.norm()) continue;
      // [ai aj] [li; lj] = target
      double li = cross(target, aj) / det;
      double lj = cross(ai, target) / det;
      if (li < -1e-12 * tnorm || lj < -1e-12 * tnorm) continue;
      Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
      lambda(i) = std::max(li, 0.0);
      lambda(j) = std::max(lj, 0.0);
      offer(std::move(lambda));
    }
  }
  return best;
}

void check_dims(const Polytope& p, const Polytope& q, const DualCertificate& cert) {
  if (cert.lambda_pq.size() != p.rows() || cert.lambda_qp.size() != q.rows()) {
    throw InvalidArgument("dual certificate dimensions (" +
                          std::to_string(cert.lambda_pq.size()) + ", " +
                          std::to_string(cert.lambda_qp.size()) +
                          ") do not match polytope rows (" +
                          std::to_string(p.rows()) + ", " + std::to_string(q.rows()) + ")");
  }
}

}  // namespace

Polytope::Polytope(Eigen::MatrixX2d A, Eigen::VectorXd b) : A_(std::move(A)), b_(std::move(b)) {
  if (A_.rows() != b_.size()) {
    throw InvalidArgument("polytope has " + std::to_string(A_.rows()) + " rows in A but " +
                          std::to_string(b_.size()) + " offsets");
  }
  if (!A_.allFinite() || !b_.allFinite()) throw InvalidArgument("polytope data must be finite");
  for (int i = 0; i < A_.rows(); ++i) {
    if (A_.row(i).norm() == 0.0) throw InvalidArgument("polytope row " + std::to_string(i) + " has a zero normal");
  }
  if (!normals_bounded(A_)) throw InvalidArgument("polytope is unbounded");
  vertices_ = enumerate_vertices(A_, b_);
  if (vertices_.empty()) throw InvalidArgument("polytope is empty");
}

bool Polytope::contains(const Vec2& p, double tol) const {
  return ((A_ * p - b_).array() <= tol).all();
}

Polytope base_polytope(double length, double width) {
  if (!(length > 0.0) || !(width > 0.0)) {
    throw InvalidArgument("footprint dimensions must be positive");
  }
  Eigen::MatrixX2d A(4, 2);
  A << 1, 0, -1, 0, 0, -1, 0, 1;
  Eigen::VectorXd b(4);
  b << length / 2, length / 2, width / 2, width / 2;
  return {std::move(A), std::move(b)};
}

Polytope box_polytope(double x_min, double x_max, double y_min, double y_max) {
  if (!(x_max > x_min) || !(y_max > y_min)) throw InvalidArgument("box extents must be increasing");
  Eigen::MatrixX2d A(4, 2);
  A << 1, 0, -1, 0, 0, -1, 0, 1;
  Eigen::VectorXd b(4);
  b << x_max, -x_min, -y_min, y_max;
  return {std::move(A), std::move(b)};
}

Polytope transform_polytope(const Polytope& base, const Pose& pose) {
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  Eigen::Matrix2d R;
  R << c, s, -s, c;
  Eigen::MatrixX2d A = base.A() * R;
  Eigen::VectorXd b = base.b() + A * Vec2(pose.x, pose.y);
  return {std::move(A), std::move(b)};
}

double primal_distance(const Polytope& p, const Polytope& q) {
  if (best_axis(p, q).gap <= 0.0) return 0.0;
  return closest_points(p.vertices(), q.vertices()).distance;
}

double dual_objective(const Polytope& p, const Polytope& q, const DualCertificate& cert) {
  check_dims(p, q, cert);
  return -p.b().dot(cert.lambda_pq) - q.b().dot(cert.lambda_qp);
}

bool dual_feasible(const Polytope& p, const Polytope& q, const DualCertificate& cert, double tol) {
  if (tol < 0.0) throw InvalidArgument("feasibility tolerance must be non-negative");
  check_dims(p, q, cert);
  const Vec2 rp = p.A().transpose() * cert.lambda_pq + cert.s;
  const Vec2 rq = q.A().transpose() * cert.lambda_qp - cert.s;
  if (rp.cwiseAbs().maxCoeff() > tol || rq.cwiseAbs().maxCoeff() > tol) return false;
  if (cert.s.norm() > 1.0 + tol) return false;
  if (cert.lambda_pq.size() > 0 && cert.lambda_pq.minCoeff() < -tol) return false;
  if (cert.lambda_qp.size() > 0 && cert.lambda_qp.minCoeff() < -tol) return false;
  return true;
}

DualSolution solve_dual(const Polytope& p, const Polytope& q) {
  Vec2 s;
  const AxisGap axis = best_axis(p, q);
  if (axis.gap > 0.0) {
    const ClosestPair cp = closest_points(p.vertices(), q.vertices());
    s = (cp.on_p - cp.on_q) / cp.distance;
  } else {
    s = -axis.axis;
  }
  auto lp = support_lp(p.A(), p.b(), -s);
  auto lq = support_lp(q.A(), q.b(), s);
  if (!lp || !lq) {
    throw SolverError("dual support problem has no feasible basis");
  }
  DualSolution out;
  out.certificate.lambda_pq = std::move(lp->first);
  out.certificate.lambda_qp = std::move(lq->first);
  out.certificate.s = s;
  out.objective = lp->second + lq->second;
  return out;
}

Hyperplane separating_hyperplane(const Polytope& p, const Polytope& q,
                                 const DualCertificate& cert, double tol) {
  if (!dual_feasible(p, q, cert, tol)) {
    throw InvalidArgument("certificate is not dual feasible");
  }
  if (!(dual_objective(p, q, cert) > 0.0)) {
    throw InvalidArgument("certificate objective is not positive; no separation is certified");
  }
  const double sn = cert.s.norm();
  if (sn == 0.0) throw InvalidArgument("certificate has s = 0");
  Hyperplane h;
  h.normal = -cert.s / sn;
  double max_p = -kInf;
  double min_q = kInf;
  for (const Vec2& v : p.vertices()) max_p = std::max(max_p, h.normal.dot(v));
  for (const Vec2& v : q.vertices()) min_q = std::min(min_q, h.normal.dot(v));
  if (!(min_q > max_p)) {
    throw InvalidArgument("certificate direction does not separate the polytopes");
  }
  h.offset = 0.5 * (max_p + min_q);
  return h;
}

}  // namespace crossflow::geometry
