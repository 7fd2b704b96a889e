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

#include "crossflow/ip_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "crossflow/errors.hpp"

namespace crossflow::solver {

namespace {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

constexpr double kSMax = 100.0;
constexpr double kKappaSigma = 1e10;
constexpr double kArmijo = 1e-4;
constexpr double kRho = 0.1;
constexpr double kAlphaMin = 1e-12;
constexpr int kMaxRefinement = 3;
// Filter line search constants.
constexpr double kGammaTheta = 1e-5;
constexpr double kGammaPhi = 1e-8;
constexpr double kSTheta = 1.1;
constexpr double kSPhi = 2.3;
constexpr double kDelta = 1.0;
constexpr double kGammaAlpha = 0.05;
constexpr int kMaxSoc = 4;

bool finite(double v) { return std::isfinite(v); }

double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Scaled view of the problem data at a point.
struct Eval {
  double f = 0.0;
  VectorXd grad;  // n
  VectorXd g;     // m
  VectorXd jac;   // pattern order
};

class ScaledProblem {
 public:
  ScaledProblem(const nlp::Problem& p, Scaling s) : p_(p), s_(std::move(s)) {
    gl_ = p.g_lower().cwiseProduct(s_.rows);
    gu_ = p.g_upper().cwiseProduct(s_.rows);
    const auto& pat = p.jacobian_pattern();
    jac_row_scale_.resize(static_cast<Eigen::Index>(pat.size()));
    for (size_t k = 0; k < pat.size(); ++k) jac_row_scale_(k) = s_.rows(pat[k].row);
  }

  double f(const VectorXd& x) const { return s_.objective * p_.objective(x); }
  VectorXd g(const VectorXd& x) const { return p_.constraints(x).cwiseProduct(s_.rows); }
  Eval full(const VectorXd& x) const {
    Eval e;
    e.f = f(x);
    e.grad = s_.objective * p_.gradient(x);
    e.g = g(x);
    e.jac = p_.jacobian_values(x).cwiseProduct(jac_row_scale_);
    return e;
  }
  VectorXd hessian(const VectorXd& x, const VectorXd& y) const {
    return p_.hessian_values(x, s_.objective, y.cwiseProduct(s_.rows));
  }
  const VectorXd& gl() const { return gl_; }
  const VectorXd& gu() const { return gu_; }
  const Scaling& scaling() const { return s_; }
  const nlp::Problem& problem() const { return p_; }

 private:
  const nlp::Problem& p_;
  Scaling s_;
  VectorXd gl_, gu_;
  VectorXd jac_row_scale_;
};

// J^T y over the pattern.
VectorXd jt_times(const nlp::Problem& p, const VectorXd& jac, const VectorXd& y) {
  VectorXd out = VectorXd::Zero(p.n_vars());
  const auto& pat = p.jacobian_pattern();
  for (size_t k = 0; k < pat.size(); ++k) out(pat[k].col) += jac(k) * y(pat[k].row);
  return out;
}

KktResiduals residuals_scaled(const nlp::Problem& p, const VectorXd& x, const VectorXd& grad,
                              const VectorXd& jac, const VectorXd& g, const VectorXd& gl,
                              const VectorXd& gu, const VectorXd& y, const VectorXd& zl,
                              const VectorXd& zu) {
  const int n = p.n_vars();
  const int m = p.n_rows();
  const VectorXd& xl = p.x_lower();
  const VectorXd& xu = p.x_upper();
  KktResiduals r;
  VectorXd lag = grad + jt_times(p, jac, y) - zl + zu;
  double stat = inf_norm(lag);
  double feas = 0.0;
  double comp = 0.0;
  for (int i = 0; i < n; ++i) {
    if (finite(xl(i))) {
      feas = std::max(feas, xl(i) - x(i));
      comp = std::max(comp, std::abs((x(i) - xl(i)) * zl(i)));
    }
    if (finite(xu(i))) {
      feas = std::max(feas, x(i) - xu(i));
      comp = std::max(comp, std::abs((xu(i) - x(i)) * zu(i)));
    }
  }
  for (int i = 0; i < m; ++i) {
    if (finite(gl(i))) feas = std::max(feas, gl(i) - g(i));
    if (finite(gu(i))) feas = std::max(feas, g(i) - gu(i));
    if (gl(i) == gu(i)) continue;
    if (y(i) > 0.0) {
      if (finite(gu(i))) comp = std::max(comp, y(i) * std::abs(gu(i) - g(i)));
      else stat = std::max(stat, y(i));
    } else if (y(i) < 0.0) {
      if (finite(gl(i))) comp = std::max(comp, -y(i) * std::abs(g(i) - gl(i)));
      else stat = std::max(stat, -y(i));
    }
  }
  const double mult_sum = y.lpNorm<1>() + zl.lpNorm<1>() + zu.lpNorm<1>();
  const double sd = std::max(1.0, mult_sum / (kSMax * std::max(1, n + m)));
  r.stationarity = stat / sd;
  r.primal_feasibility = std::max(0.0, feas);
  r.complementarity = comp;
  return r;
}

Scaling compute_scaling(const nlp::Problem& p, const VectorXd& x0, double max_grad) {
  Scaling s;
  s.rows = VectorXd::Ones(p.n_rows());
  if (!(max_grad > 0.0)) return s;
  const double gnorm = inf_norm(p.gradient(x0));
  if (gnorm > max_grad) s.objective = std::max(1e-8, max_grad / gnorm);
  const VectorXd jac = p.jacobian_values(x0);
  VectorXd row_max = VectorXd::Zero(p.n_rows());
  const auto& pat = p.jacobian_pattern();
  for (size_t k = 0; k < pat.size(); ++k) {
    row_max(pat[k].row) = std::max(row_max(pat[k].row), std::abs(jac(k)));
  }
  for (int i = 0; i < p.n_rows(); ++i) {
    if (row_max(i) > max_grad) s.rows(i) = std::max(1e-8, max_grad / row_max(i));
  }
  return s;
}

// Interior-point iteration on w = [x; s], where s holds one slack per
// inequality row.
class Solver {
 public:
  Solver(const nlp::Problem& p, const SolverConfig& cfg, Scaling scaling);
  SolveReport run(const VectorXd& x0);

 private:
  struct Point {
    VectorXd w;
    VectorXd y;
    VectorXd zl, zu;
    Eval ev;
    VectorXd c;
  };
  struct Direction {
    VectorXd dw, dy, dzl, dzu;
  };

  void build_kkt_pattern();
  VectorXd residual_c(const VectorXd& w, const VectorXd& g) const;
  double barrier_value(const VectorXd& w, double f, double mu) const;
  VectorXd barrier_grad(const VectorXd& w, const VectorXd& grad, double mu) const;
  VectorXd lagrangian_grad(const Point& pt) const;
  double subproblem_error(const Point& pt, double mu) const;
  KktResiduals overall_residuals(const Point& pt) const;
  bool factorize(const Point& pt, const VectorXd& hess, double min_dw);
  Direction solve_direction(const Point& pt, double mu, const VectorXd& c) const;
  double step_to_boundary(const VectorXd& w, const VectorXd& dw, double tau) const;
  double dual_step_to_boundary(const Point& pt, const Direction& d, double tau) const;
  void safeguard(Point& pt, double mu) const;
  VectorXd hess_times(const VectorXd& hess, const VectorXd& v) const;
  Point evaluate(VectorXd w) const;
  bool line_search(Point& pt, const Direction& d, const VectorXd& hess, double mu, double& nu,
                   IterationRecord& rec);
  bool filter_search(Point& pt, const Direction& d, double mu, IterationRecord& rec);
  bool filter_accepts(double theta, double phi) const;
  void accept_step(Point& pt, const Direction& d, double alpha, double mu, IterationRecord& rec) const;
  SolveReport finish(const Point& pt, SolveStatus status, int iters,
                     std::vector<IterationRecord> log,
                     std::chrono::steady_clock::time_point t0,
                     std::vector<std::string> warnings) const;

  ScaledProblem sp_;
  const nlp::Problem& p_;
  SolverConfig cfg_;
  int n_ = 0, m_ = 0, ni_ = 0, N_ = 0;
  std::vector<int> ineq_rows_;
  std::vector<int> slack_of_row_;
  VectorXd lw_, uw_;
  std::vector<char> has_l_, has_u_;

  SpMat K_;
  std::vector<int> hess_slot_, jac_slot_, diag_x_slot_, diag_c_slot_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  bool analyzed_ = false;
  double last_dw_ = 0.0;
  double cur_dw_ = 0.0;
  VectorXd sigma_hat_;  // condensed diagonal per w entry, including dw
  std::vector<std::pair<double, double>> filter_;  // (theta, phi) pairs
  double theta_max_ = 0.0;
  double theta_min_ = 0.0;
};

Solver::Solver(const nlp::Problem& p, const SolverConfig& cfg, Scaling scaling)
    : sp_(p, std::move(scaling)), p_(p), cfg_(cfg) {
  n_ = p.n_vars();
  m_ = p.n_rows();
  for (int i = 0; i < m_; ++i) {
    if (sp_.gl()(i) == sp_.gu()(i)) {
      slack_of_row_.push_back(-1);
    } else {
      slack_of_row_.push_back(static_cast<int>(ineq_rows_.size()));
      ineq_rows_.push_back(i);
    }
  }
  ni_ = static_cast<int>(ineq_rows_.size());
  N_ = n_ + ni_;
  lw_.resize(N_);
  uw_.resize(N_);
  lw_.head(n_) = p.x_lower();
  uw_.head(n_) = p.x_upper();
  for (int k = 0; k < ni_; ++k) {
    lw_(n_ + k) = sp_.gl()(ineq_rows_[k]);
    uw_(n_ + k) = sp_.gu()(ineq_rows_[k]);
  }
  // Fixed variables get a sliver of interior so the barrier is defined.
  for (int i = 0; i < N_; ++i) {
    if (finite(lw_(i)) && finite(uw_(i)) &&
        uw_(i) - lw_(i) < 1e-10 * std::max(1.0, std::abs(lw_(i)))) {
      const double r = 1e-8 * std::max(1.0, std::abs(lw_(i)));
      lw_(i) -= r;
      uw_(i) += r;
    }
  }
  has_l_.resize(N_);
  has_u_.resize(N_);
  for (int i = 0; i < N_; ++i) {
    has_l_[i] = finite(lw_(i));
    has_u_[i] = finite(uw_(i));
  }
  build_kkt_pattern();
}

void Solver::build_kkt_pattern() {
  const int dim = n_ + m_;
  std::vector<Eigen::Triplet<double, int>> trips;
  const auto& hp = p_.hessian_pattern();
  const auto& jp = p_.jacobian_pattern();
  trips.reserve(hp.size() + jp.size() + dim);
  for (const auto& t : hp) trips.emplace_back(t.row, t.col, 1.0);
  for (const auto& t : jp) trips.emplace_back(n_ + t.row, t.col, 1.0);
  for (int i = 0; i < dim; ++i) trips.emplace_back(i, i, 1.0);
  K_.resize(dim, dim);
  K_.setFromTriplets(trips.begin(), trips.end());
  K_.makeCompressed();
  auto slot = [this](int r, int c) {
    const int* inner = K_.innerIndexPtr();
    const int* outer = K_.outerIndexPtr();
    const int* it = std::lower_bound(inner + outer[c], inner + outer[c + 1], r);
    return static_cast<int>(it - inner);
  };
  for (const auto& t : hp) hess_slot_.push_back(slot(t.row, t.col));
  for (const auto& t : jp) jac_slot_.push_back(slot(n_ + t.row, t.col));
  for (int i = 0; i < n_; ++i) diag_x_slot_.push_back(slot(i, i));
  for (int i = 0; i < m_; ++i) diag_c_slot_.push_back(slot(n_ + i, n_ + i));
}

VectorXd Solver::residual_c(const VectorXd& w, const VectorXd& g) const {
  VectorXd c(m_);
  for (int i = 0; i < m_; ++i) {
    const int k = slack_of_row_[i];
    c(i) = k < 0 ? g(i) - sp_.gl()(i) : g(i) - w(n_ + k);
  }
  return c;
}

double Solver::barrier_value(const VectorXd& w, double f, double mu) const {
  double phi = f;
  for (int i = 0; i < N_; ++i) {
    if (has_l_[i]) phi -= mu * std::log(w(i) - lw_(i));
    if (has_u_[i]) phi -= mu * std::log(uw_(i) - w(i));
  }
  return phi;
}

VectorXd Solver::barrier_grad(const VectorXd& w, const VectorXd& grad, double mu) const {
  VectorXd b = VectorXd::Zero(N_);
  b.head(n_) = grad;
  for (int i = 0; i < N_; ++i) {
    if (has_l_[i]) b(i) -= mu / (w(i) - lw_(i));
    if (has_u_[i]) b(i) += mu / (uw_(i) - w(i));
  }
  return b;
}

VectorXd Solver::lagrangian_grad(const Point& pt) const {
  VectorXd r(N_);
  r.head(n_) = pt.ev.grad + jt_times(p_, pt.ev.jac, pt.y);
  for (int k = 0; k < ni_; ++k) r(n_ + k) = -pt.y(ineq_rows_[k]);
  return r - pt.zl + pt.zu;
}

double Solver::subproblem_error(const Point& pt, double mu) const {
  const double zsum = pt.zl.lpNorm<1>() + pt.zu.lpNorm<1>();
  const double sd = std::max(kSMax, (pt.y.lpNorm<1>() + zsum) / std::max(1, m_ + 2 * N_)) / kSMax;
  const double sc = std::max(kSMax, zsum / std::max(1, 2 * N_)) / kSMax;
  double comp = 0.0;
  for (int i = 0; i < N_; ++i) {
    if (has_l_[i]) comp = std::max(comp, std::abs((pt.w(i) - lw_(i)) * pt.zl(i) - mu));
    if (has_u_[i]) comp = std::max(comp, std::abs((uw_(i) - pt.w(i)) * pt.zu(i) - mu));
  }
  return std::max({inf_norm(lagrangian_grad(pt)) / sd, inf_norm(pt.c), comp / sc});
}

KktResiduals Solver::overall_residuals(const Point& pt) const {
  const VectorXd x = pt.w.head(n_);
  return residuals_scaled(p_, x, pt.ev.grad, pt.ev.jac, pt.ev.g, sp_.gl(), sp_.gu(), pt.y,
                          pt.zl.head(n_), pt.zu.head(n_));
}

bool Solver::factorize(const Point& pt, const VectorXd& hess, double min_dw) {
  sigma_hat_ = VectorXd::Zero(N_);
  for (int i = 0; i < N_; ++i) {
    if (has_l_[i]) sigma_hat_(i) += pt.zl(i) / (pt.w(i) - lw_(i));
    if (has_u_[i]) sigma_hat_(i) += pt.zu(i) / (uw_(i) - pt.w(i));
  }
  const double dc = cfg_.regularization_floor;
  auto assemble = [&](double dw) {
    double* v = K_.valuePtr();
    std::fill(v, v + K_.nonZeros(), 0.0);
    for (size_t k = 0; k < hess_slot_.size(); ++k) v[hess_slot_[k]] += hess(k);
    for (size_t k = 0; k < jac_slot_.size(); ++k) v[jac_slot_[k]] += pt.ev.jac(k);
    for (int i = 0; i < n_; ++i) v[diag_x_slot_[i]] += sigma_hat_(i) + dw;
    for (int i = 0; i < m_; ++i) {
      const int k = slack_of_row_[i];
      double d = dc;
      if (k >= 0) d += 1.0 / std::max(sigma_hat_(n_ + k) + dw, 1e-20);
      v[diag_c_slot_[i]] -= d;
    }
  };
  auto inertia_ok = [&]() {
    if (ldlt_.info() != Eigen::Success) return false;
    const VectorXd& D = ldlt_.vectorD();
    int pos = 0;
    int neg = 0;
    for (Eigen::Index i = 0; i < D.size(); ++i) {
      if (D(i) > 0.0) ++pos;
      else if (D(i) < 0.0) ++neg;
      else return false;
    }
    return pos == n_ && neg == m_;
  };
  auto attempt = [&](double dw) {
    assemble(dw);
    if (!analyzed_) {
      ldlt_.analyzePattern(K_);
      analyzed_ = true;
    }
    ldlt_.factorize(K_);
    return inertia_ok();
  };

  double dw = min_dw;
  if (attempt(dw)) {
    cur_dw_ = dw;
    return true;
  }
  dw = std::max(min_dw, last_dw_ == 0.0 ? 1e-4 : std::max(1e-20, last_dw_ / 3.0));
  const double grow = last_dw_ == 0.0 ? 100.0 : 8.0;
  while (dw <= 1e40) {
    if (attempt(dw)) {
      last_dw_ = dw;
      cur_dw_ = dw;
      return true;
    }
    dw *= grow;
  }
  return false;
}

Solver::Direction Solver::solve_direction(const Point& pt, double mu, const VectorXd& c) const {
  const VectorXd bg = barrier_grad(pt.w, pt.ev.grad, mu);
  VectorXd rhs(n_ + m_);
  rhs.head(n_) = -(bg.head(n_) + jt_times(p_, pt.ev.jac, pt.y));
  VectorXd rs(ni_);
  for (int k = 0; k < ni_; ++k) rs(k) = bg(n_ + k) - pt.y(ineq_rows_[k]);
  for (int i = 0; i < m_; ++i) {
    const int k = slack_of_row_[i];
    rhs(n_ + i) = k < 0 ? -c(i) : -(c(i) + rs(k) / std::max(sigma_hat_(n_ + k) + cur_dw_, 1e-20));
  }
  VectorXd sol = ldlt_.solve(rhs);
  const auto Ksym = K_.selfadjointView<Eigen::Lower>();
  const double bnorm = std::max(1.0, inf_norm(rhs));
  for (int it = 0; it < kMaxRefinement; ++it) {
    const VectorXd r = rhs - Ksym * sol;
    if (inf_norm(r) <= 1e-14 * bnorm) break;
    sol += ldlt_.solve(r);
  }
  Direction d;
  d.dw.resize(N_);
  d.dw.head(n_) = sol.head(n_);
  d.dy = sol.tail(m_);
  for (int k = 0; k < ni_; ++k) {
    d.dw(n_ + k) =
        (-rs(k) + d.dy(ineq_rows_[k])) / std::max(sigma_hat_(n_ + k) + cur_dw_, 1e-20);
  }
  d.dzl = VectorXd::Zero(N_);
  d.dzu = VectorXd::Zero(N_);
  for (int i = 0; i < N_; ++i) {
    if (has_l_[i]) {
      const double gap = pt.w(i) - lw_(i);
      d.dzl(i) = mu / gap - pt.zl(i) - pt.zl(i) / gap * d.dw(i);
    }
    if (has_u_[i]) {
      const double gap = uw_(i) - pt.w(i);
      d.dzu(i) = mu / gap - pt.zu(i) + pt.zu(i) / gap * d.dw(i);
    }
  }
  return d;
}

double Solver::step_to_boundary(const VectorXd& w, const VectorXd& dw, double tau) const {
  double a = 1.0;
  for (int i = 0; i < N_; ++i) {
    if (has_l_[i] && dw(i) < 0.0) a = std::min(a, -tau * (w(i) - lw_(i)) / dw(i));
    if (has_u_[i] && dw(i) > 0.0) a = std::min(a, tau * (uw_(i) - w(i)) / dw(i));
  }
  return a;
}

double Solver::dual_step_to_boundary(const Point& pt, const Direction& d, double tau) const {
  double a = 1.0;
  for (int i = 0; i < N_; ++i) {
    if (has_l_[i] && d.dzl(i) < 0.0) a = std::min(a, -tau * pt.zl(i) / d.dzl(i));
    if (has_u_[i] && d.dzu(i) < 0.0) a = std::min(a, -tau * pt.zu(i) / d.dzu(i));
  }
  return a;
}

void Solver::safeguard(Point& pt, double mu) const {
  for (int i = 0; i < N_; ++i) {
    if (has_l_[i]) {
      const double gap = pt.w(i) - lw_(i);
      pt.zl(i) = std::clamp(pt.zl(i), mu / (kKappaSigma * gap), kKappaSigma * mu / gap);
    }
    if (has_u_[i]) {
      const double gap = uw_(i) - pt.w(i);
      pt.zu(i) = std::clamp(pt.zu(i), mu / (kKappaSigma * gap), kKappaSigma * mu / gap);
    }
  }
}

VectorXd Solver::hess_times(const VectorXd& hess, const VectorXd& v) const {
  VectorXd out = VectorXd::Zero(n_);
  const auto& hp = p_.hessian_pattern();
  for (size_t k = 0; k < hp.size(); ++k) {
    out(hp[k].row) += hess(k) * v(hp[k].col);
    if (hp[k].row != hp[k].col) out(hp[k].col) += hess(k) * v(hp[k].row);
  }
  return out;
}

Solver::Point Solver::evaluate(VectorXd w) const {
  Point pt;
  pt.w = std::move(w);
  pt.ev = sp_.full(pt.w.head(n_));
  pt.c = residual_c(pt.w, pt.ev.g);
  return pt;
}

void Solver::accept_step(Point& pt, const Direction& d, double alpha, double mu,
                         IterationRecord& rec) const {
  const double tau = std::max(cfg_.fraction_to_boundary, 1.0 - mu);
  const double alpha_z = dual_step_to_boundary(pt, d, tau);
  Point next = evaluate(pt.w + alpha * d.dw);
  next.y = pt.y + alpha * d.dy;
  next.zl = pt.zl + alpha_z * d.dzl;
  next.zu = pt.zu + alpha_z * d.dzu;
  safeguard(next, mu);
  pt = std::move(next);
  rec.alpha_primal = alpha;
  rec.alpha_dual = alpha_z;
}

bool Solver::filter_accepts(double theta, double phi) const {
  if (theta > theta_max_) return false;
  for (const auto& [ft, fp] : filter_) {
    if (theta >= ft && phi >= fp) return false;
  }
  return true;
}

// Backtracking filter line search on (theta, phi) = (|c|_1, barrier function)
// with second-order corrections.
bool Solver::filter_search(Point& pt, const Direction& d, double mu, IterationRecord& rec) {
  const double tau = std::max(cfg_.fraction_to_boundary, 1.0 - mu);
  const double alpha_max = step_to_boundary(pt.w, d.dw, tau);
  const double dphi = barrier_grad(pt.w, pt.ev.grad, mu).dot(d.dw);
  const double theta = pt.c.lpNorm<1>();
  const double phi = barrier_value(pt.w, pt.ev.f, mu);

  double alpha_min = kGammaTheta;
  if (dphi < 0.0) {
    alpha_min = std::min({kGammaTheta, kGammaPhi * theta / -dphi,
                          kDelta * std::pow(theta, kSTheta) / std::pow(-dphi, kSPhi)});
  }
  alpha_min *= kGammaAlpha;

  auto measure = [&](const VectorXd& w, double& th, double& ph) {
    try {
      const VectorXd x = w.head(n_);
      const VectorXd g = sp_.g(x);
      th = residual_c(w, g).lpNorm<1>();
      ph = barrier_value(w, sp_.f(x), mu);
      return std::isfinite(th) && std::isfinite(ph);
    } catch (const std::exception&) {
      return false;
    }
  };
  // Returns 1 for an f-type step, 2 for a h-type step, 0 for rejection.
  auto acceptable = [&](double alpha, double th, double ph) {
    if (!filter_accepts(th, ph)) return 0;
    const bool switching =
        dphi < 0.0 && alpha * std::pow(-dphi, kSPhi) > kDelta * std::pow(theta, kSTheta);
    if (switching && theta <= theta_min_) {
      return ph <= phi + kArmijo * alpha * dphi ? 1 : 0;
    }
    return (th <= (1.0 - kGammaTheta) * theta || ph <= phi - kGammaPhi * theta) ? 2 : 0;
  };
  auto augment = [&](int kind) {
    if (kind == 2) filter_.emplace_back((1.0 - kGammaTheta) * theta, phi - kGammaPhi * theta);
  };

  double alpha = alpha_max;
  for (int trial = 0; alpha >= alpha_min; ++trial) {
    rec.line_search_trials = trial + 1;
    double th = 0.0;
    double ph = 0.0;
    const bool ok = measure(pt.w + alpha * d.dw, th, ph);
    if (ok) {
      if (const int kind = acceptable(alpha, th, ph)) {
        augment(kind);
        accept_step(pt, d, alpha, mu, rec);
        return true;
      }
    }
    if (trial == 0 && ok && th >= theta) {
      // Second-order corrections for the constraint curvature.
      VectorXd c_soc = alpha * pt.c;
      double th_prev = theta;
      double th_soc = th;
      VectorXd w_trial = pt.w + alpha * d.dw;
      for (int q = 0; q < kMaxSoc; ++q) {
        if (q > 0 && th_soc > 0.99 * th_prev) break;
        try {
          c_soc += residual_c(w_trial, sp_.g(w_trial.head(n_)));
          const Direction ds = solve_direction(pt, mu, c_soc);
          const double a_soc = step_to_boundary(pt.w, ds.dw, tau);
          w_trial = pt.w + a_soc * ds.dw;
          double ph_soc = 0.0;
          th_prev = th_soc;
          if (!measure(w_trial, th_soc, ph_soc)) break;
          if (const int kind = acceptable(alpha, th_soc, ph_soc)) {
            augment(kind);
            accept_step(pt, ds, a_soc, mu, rec);
            return true;
          }
          c_soc = a_soc * c_soc;
        } catch (const std::exception&) {
          break;
        }
      }
    }
    alpha *= 0.5;
  }
  return false;
}

bool Solver::line_search(Point& pt, const Direction& d, const VectorXd& hess, double mu,
                         double& nu, IterationRecord& rec) {
  const double tau = std::max(cfg_.fraction_to_boundary, 1.0 - mu);
  const double alpha_max = step_to_boundary(pt.w, d.dw, tau);
  const VectorXd bg = barrier_grad(pt.w, pt.ev.grad, mu);
  const double dphi = bg.dot(d.dw);
  const double theta = pt.c.lpNorm<1>();
  const VectorXd dx = d.dw.head(n_);
  const double dhd = dx.dot(hess_times(hess, dx)) + (sigma_hat_.array() * d.dw.array().square()).sum() +
                     cur_dw_ * dx.squaredNorm();
  if (theta > 0.0) {
    const double req = (dphi + 0.5 * std::max(0.0, dhd)) / ((1.0 - kRho) * theta);
    if (nu < req) nu = req + 1.0;
  }
  const double slope = dphi - nu * theta;
  const double merit0 = barrier_value(pt.w, pt.ev.f, mu) + nu * theta;

  auto merit_at = [&](const VectorXd& w, double* theta_out) -> double {
    try {
      const double f = sp_.f(w.head(n_));
      const VectorXd c = residual_c(w, sp_.g(w.head(n_)));
      const double th = c.lpNorm<1>();
      if (theta_out) *theta_out = th;
      const double m = barrier_value(w, f, mu) + nu * th;
      return std::isfinite(m) ? m : std::numeric_limits<double>::infinity();
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  auto accept = [&](const Direction& dd, double alpha) {
    const double alpha_z = dual_step_to_boundary(pt, dd, tau);
    VectorXd w = pt.w + alpha * dd.dw;
    Point next = evaluate(std::move(w));
    next.y = pt.y + alpha * dd.dy;
    next.zl = pt.zl + alpha_z * dd.dzl;
    next.zu = pt.zu + alpha_z * dd.dzu;
    safeguard(next, mu);
    pt = std::move(next);
    rec.alpha_primal = alpha;
    rec.alpha_dual = alpha_z;
  };

  double tiny = 0.0;
  for (int i = 0; i < N_; ++i) tiny = std::max(tiny, std::abs(d.dw(i)) / (1.0 + std::abs(pt.w(i))));
  if (tiny < 10.0 * std::numeric_limits<double>::epsilon()) {
    accept(d, alpha_max);
    return true;
  }

  double alpha = alpha_max;
  for (int trial = 0; alpha >= kAlphaMin; ++trial) {
    rec.line_search_trials = trial + 1;
    const VectorXd wt = pt.w + alpha * d.dw;
    double theta_t = 0.0;
    const double mt = merit_at(wt, &theta_t);
    if (mt <= merit0 + kArmijo * alpha * slope) {
      accept(d, alpha);
      return true;
    }
    if (trial == 0 && std::isfinite(mt) && theta_t >= theta) {
      // Second-order correction for the constraint curvature.
      try {
        const VectorXd c_soc = alpha * pt.c + residual_c(wt, sp_.g(wt.head(n_)));
        const Direction ds = solve_direction(pt, mu, c_soc);
        const double a_soc = step_to_boundary(pt.w, ds.dw, tau);
        const VectorXd ws = pt.w + a_soc * ds.dw;
        if (merit_at(ws, nullptr) <= merit0 + kArmijo * alpha * slope) {
          accept(ds, a_soc);
          return true;
        }
      } catch (const std::exception&) {
      }
    }
    alpha *= 0.5;
  }
  return false;
}

SolveReport Solver::finish(const Point& pt, SolveStatus status, int iters,
                           std::vector<IterationRecord> log,
                           std::chrono::steady_clock::time_point t0,
                           std::vector<std::string> warnings) const {
  SolveReport r;
  r.status = status;
  r.iterations = iters;
  r.residuals = overall_residuals(pt);
  r.x = pt.w.head(n_);
  r.objective = p_.objective(r.x);
  r.scaling = sp_.scaling();
  const double os = r.scaling.objective;
  r.multipliers.y = pt.y.cwiseProduct(r.scaling.rows) / os;
  r.multipliers.z_lower = pt.zl.head(n_) / os;
  r.multipliers.z_upper = pt.zu.head(n_) / os;
  r.log = std::move(log);
  r.warnings = std::move(warnings);
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

SolveReport Solver::run(const VectorXd& x0) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> warnings;
  std::vector<IterationRecord> log;

  auto push_into = [&](double v, double lo, double hi) {
    const double k1 = cfg_.bound_push;
    if (finite(lo) && finite(hi)) {
      const double pl = std::min(k1 * std::max(1.0, std::abs(lo)), k1 * (hi - lo));
      const double pu = std::min(k1 * std::max(1.0, std::abs(hi)), k1 * (hi - lo));
      return std::clamp(v, lo + pl, hi - pu);
    }
    if (finite(lo)) return std::max(v, lo + k1 * std::max(1.0, std::abs(lo)));
    if (finite(hi)) return std::min(v, hi - k1 * std::max(1.0, std::abs(hi)));
    return v;
  };

  VectorXd w(N_);
  bool projected = false;
  for (int i = 0; i < n_; ++i) {
    if ((finite(lw_(i)) && x0(i) < lw_(i)) || (finite(uw_(i)) && x0(i) > uw_(i))) projected = true;
    w(i) = push_into(x0(i), lw_(i), uw_(i));
  }
  if (projected) warnings.emplace_back("initial point was projected into the variable bounds");
  {
    const VectorXd g0 = sp_.g(w.head(n_));
    for (int k = 0; k < ni_; ++k) w(n_ + k) = push_into(g0(ineq_rows_[k]), lw_(n_ + k), uw_(n_ + k));
  }
  Point pt = evaluate(std::move(w));
  pt.y = VectorXd::Zero(m_);
  pt.zl = VectorXd::Zero(N_);
  pt.zu = VectorXd::Zero(N_);
  for (int i = 0; i < N_; ++i) {
    if (has_l_[i]) pt.zl(i) = 1.0;
    if (has_u_[i]) pt.zu(i) = 1.0;
  }

  const double theta0 = pt.c.lpNorm<1>();
  theta_max_ = 1e4 * std::max(1.0, theta0);
  theta_min_ = 1e-4 * std::max(1.0, theta0);
  double mu = cfg_.initial_barrier;
  const double mu_min = cfg_.kkt_tol / 10.0;
  double nu = 1.0;
  int iter = 0;
  for (;; ++iter) {
    IterationRecord rec;
    rec.iter = iter;
    const KktResiduals res = overall_residuals(pt);
    rec.objective = pt.ev.f / sp_.scaling().objective;
    rec.inf_pr = inf_norm(pt.c);
    rec.inf_du = res.stationarity;
    rec.compl_ = res.complementarity;
    if (res.max() <= cfg_.kkt_tol) {
      rec.mu = mu;
      log.push_back(rec);
      return finish(pt, SolveStatus::converged, iter, std::move(log), t0, std::move(warnings));
    }
    if (iter >= cfg_.max_iters) {
      rec.mu = mu;
      log.push_back(rec);
      return finish(pt, SolveStatus::max_iters, iter, std::move(log), t0, std::move(warnings));
    }
    while (mu > mu_min && subproblem_error(pt, mu) <= cfg_.barrier_tol_factor * mu) {
      mu = std::max(mu_min, std::min(cfg_.barrier_shrink * mu, std::pow(mu, 1.5)));
      filter_.clear();
    }
    rec.mu = mu;

    const VectorXd hess = sp_.hessian(pt.w.head(n_), pt.y);
    bool stepped = false;
    double min_dw = 0.0;
    for (int attempt = 0; attempt < 5 && !stepped; ++attempt) {
      if (!factorize(pt, hess, min_dw)) {
        log.push_back(rec);
        return finish(pt, SolveStatus::singular_system, iter, std::move(log), t0,
                      std::move(warnings));
      }
      rec.regularization = cur_dw_;
      const Direction d = solve_direction(pt, mu, pt.c);
      if (!d.dw.allFinite() || !d.dy.allFinite()) {
        log.push_back(rec);
        return finish(pt, SolveStatus::singular_system, iter, std::move(log), t0,
                      std::move(warnings));
      }
      stepped = filter_search(pt, d, mu, rec) || line_search(pt, d, hess, mu, nu, rec);
      // Heavier primal regularisation shortens and rotates the step towards
      // the barrier gradient.
      min_dw = std::max({1e-2, 100.0 * cur_dw_, 100.0 * min_dw});
    }
    log.push_back(rec);
    if (!stepped) {
      return finish(pt, SolveStatus::restoration_failed, iter, std::move(log), t0,
                    std::move(warnings));
    }
  }
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::restoration_failed: return "restoration_failed";
    case SolveStatus::singular_system: return "singular_system";
  }
  return "unknown";
}

double KktResiduals::max() const {
  return std::max({stationarity, primal_feasibility, complementarity});
}

KktResiduals kkt_residuals(const nlp::Problem& p, const Eigen::VectorXd& x,
                           const Multipliers& mult, const Scaling* scaling) {
  if (x.size() != p.n_vars() || mult.y.size() != p.n_rows() ||
      mult.z_lower.size() != p.n_vars() || mult.z_upper.size() != p.n_vars()) {
    throw InvalidArgument("kkt_residuals: dimension mismatch");
  }
  Scaling s;
  if (scaling) {
    s = *scaling;
  } else {
    s.rows = VectorXd::Ones(p.n_rows());
  }
  const ScaledProblem sp(p, s);
  const Eval ev = sp.full(x);
  const VectorXd y = mult.y.cwiseQuotient(s.rows) * s.objective;
  return residuals_scaled(p, x, ev.grad, ev.jac, ev.g, sp.gl(), sp.gu(), y,
                          mult.z_lower * s.objective, mult.z_upper * s.objective);
}

SolveReport solve(const nlp::Problem& p, const Eigen::VectorXd& x0, const SolverConfig& cfg) {
  if (!p.finalized()) throw InvalidArgument("problem must be finalized");
  if (x0.size() != p.n_vars()) throw InvalidArgument("initial point has wrong dimension");
  if (!(cfg.kkt_tol > 0.0) || cfg.max_iters < 0 || !(cfg.initial_barrier > 0.0) ||
      !(cfg.barrier_shrink > 0.0 && cfg.barrier_shrink < 1.0) ||
      !(cfg.fraction_to_boundary > 0.0 && cfg.fraction_to_boundary < 1.0) ||
      !(cfg.regularization_floor >= 0.0) || !(cfg.barrier_tol_factor > 0.0) ||
      !(cfg.bound_push > 0.0)) {
    throw InvalidArgument("invalid solver configuration");
  }
  VectorXd xs = x0;
  for (int i = 0; i < p.n_vars(); ++i) {
    xs(i) = std::clamp(xs(i), p.x_lower()(i), p.x_upper()(i));
  }
  Solver solver(p, cfg, compute_scaling(p, xs, cfg.max_gradient));
  return solver.run(x0);
}

std::string iteration_log_tsv(const SolveReport& report) {
  std::string out = "iter\tmu\tobjective\tinf_pr\tinf_du\tcompl\tregularization\talpha_pr\talpha_du\tls\n";
  char buf[512];
  for (const IterationRecord& r : report.log) {
    std::snprintf(buf, sizeof(buf), "%d\t%.6e\t%.9e\t%.6e\t%.6e\t%.6e\t%.3e\t%.6e\t%.6e\t%d\n",
                  r.iter, r.mu, r.objective, r.inf_pr, r.inf_du, r.compl_, r.regularization,
                  r.alpha_primal, r.alpha_dual, r.line_search_trials);
    out += buf;
  }
  return out;
}

}  // namespace crossflow::solver
