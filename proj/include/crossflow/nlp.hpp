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

// Sparse NLP in standard form
//
//   min f(x)  s.t.  g_L <= g(x) <= g_U,  x_L <= x <= x_U.
//
// f and every row of g are sums of linear terms and outputs of small dense
// elements. An element is a smooth map R^NIn -> R^NOut over a handful of
// decision variables; its Jacobian and weighted Hessians come from
// forward-mode dual numbers, so sparsity is known by construction.

#pragma once

#include <array>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "crossflow/ad.hpp"

namespace crossflow::nlp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Row index used to route an element output or linear term to the objective.
inline constexpr int kObjective = -1;

class Element {
 public:
  virtual ~Element() = default;
  virtual int n_in() const = 0;
  virtual int n_out() const = 0;
  virtual void eval(const double* in, double* out) const = 0;
  // `jac` is row-major n_out x n_in.
  virtual void eval_jacobian(const double* in, double* out, double* jac) const = 0;
  // Adds the lower triangle (row-major, i >= j, packed) of
  // sum_k w[k] * Hessian(out_k) into `hess`.
  virtual void add_hessian(const double* in, const double* w, double* hess) const = 0;
};

// Wraps a functor F with a member template
//   template <typename T>
//   void operator()(const std::array<T, NIn>&, std::array<T, NOut>&) const;
template <int NIn, int NOut, typename F>
class AutoDiffElement final : public Element {
 public:
  explicit AutoDiffElement(F f) : f_(std::move(f)) {}

  int n_in() const override { return NIn; }
  int n_out() const override { return NOut; }

  void eval(const double* in, double* out) const override {
    std::array<double, NIn> x;
    std::array<double, NOut> y;
    for (int i = 0; i < NIn; ++i) x[i] = in[i];
    f_(x, y);
    for (int k = 0; k < NOut; ++k) out[k] = y[k];
  }

  void eval_jacobian(const double* in, double* out, double* jac) const override {
    using D = ad::Dual<double, NIn>;
    std::array<D, NIn> x;
    for (int i = 0; i < NIn; ++i) {
      x[i].v = in[i];
      x[i].d[i] = 1.0;
    }
    std::array<D, NOut> y;
    f_(x, y);
    for (int k = 0; k < NOut; ++k) {
      out[k] = y[k].v;
      for (int i = 0; i < NIn; ++i) jac[k * NIn + i] = y[k].d[i];
    }
  }

  void add_hessian(const double* in, const double* w, double* hess) const override {
    using Inner = ad::Dual<double, NIn>;
    using Outer = ad::Dual<Inner, NIn>;
    std::array<Outer, NIn> x;
    for (int i = 0; i < NIn; ++i) {
      x[i].v.v = in[i];
      x[i].v.d[i] = 1.0;
      x[i].d[i].v = 1.0;
    }
    std::array<Outer, NOut> y;
    f_(x, y);
    int p = 0;
    for (int i = 0; i < NIn; ++i) {
      for (int j = 0; j <= i; ++j, ++p) {
        double h = 0.0;
        for (int k = 0; k < NOut; ++k) h += w[k] * y[k].d[i].d[j];
        hess[p] += h;
      }
    }
  }

 private:
  F f_;
};

template <int NIn, int NOut, typename F>
std::shared_ptr<const Element> make_element(F f) {
  return std::make_shared<AutoDiffElement<NIn, NOut, F>>(std::move(f));
}

struct Triplet {
  int row = 0;
  int col = 0;
};

class Problem {
 public:
  int add_variable(double lower, double upper, std::string name = {});
  int add_row(double lower, double upper);
  // `row` may be kObjective.
  void add_linear(int row, int var, double coef);
  // out_rows[k] receives output k (kObjective allowed).
  void add_element(std::shared_ptr<const Element> element, std::vector<int> inputs,
                   std::vector<int> out_rows);
  // Freezes the structure and builds the Jacobian and Hessian patterns.
  void finalize();

  int n_vars() const { return static_cast<int>(xl_build_.size()); }
  int n_rows() const { return static_cast<int>(gl_build_.size()); }
  bool finalized() const { return finalized_; }

  const Eigen::VectorXd& x_lower() const { return x_lower_; }
  const Eigen::VectorXd& x_upper() const { return x_upper_; }
  const Eigen::VectorXd& g_lower() const { return g_lower_; }
  const Eigen::VectorXd& g_upper() const { return g_upper_; }
  const std::string& variable_name(int i) const { return names_.at(i); }

  // Evaluation is const and keeps no shared state, so it is reentrant.
  double objective(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  Eigen::VectorXd constraints(const Eigen::VectorXd& x) const;
  // Values in jacobian_pattern() order.
  Eigen::VectorXd jacobian_values(const Eigen::VectorXd& x) const;
  // Lower triangle of obj_factor * H_f + sum_i y_i H_{g_i}, in
  // hessian_pattern() order.
  Eigen::VectorXd hessian_values(const Eigen::VectorXd& x, double obj_factor,
                                 const Eigen::VectorXd& y) const;

  // Row-major (sorted by row, then column).
  const std::vector<Triplet>& jacobian_pattern() const { return jac_pattern_; }
  // Entries with row >= col, sorted by column, then row.
  const std::vector<Triplet>& hessian_pattern() const { return hess_pattern_; }

  // Dense Jacobian for tests and diagnostics.
  Eigen::MatrixXd dense_jacobian(const Eigen::VectorXd& x) const;

 private:
  struct LinearTerm {
    int row;
    int var;
    double coef;
  };
  struct ElementUse {
    std::shared_ptr<const Element> element;
    std::vector<int> inputs;
    std::vector<int> out_rows;
    std::vector<int> jac_slots;   // n_out * n_in, -1 for objective outputs
    std::vector<int> hess_slots;  // packed lower triangle
  };

  void require_finalized() const;
  void check_size(const Eigen::VectorXd& x) const;
  std::vector<double> gather(const ElementUse& e, const Eigen::VectorXd& x) const;

  std::vector<double> xl_build_, xu_build_, gl_build_, gu_build_;
  Eigen::VectorXd x_lower_, x_upper_, g_lower_, g_upper_;
  std::vector<std::string> names_;
  std::vector<LinearTerm> linear_;
  std::vector<ElementUse> elements_;
  std::vector<Triplet> jac_pattern_;
  std::vector<int> linear_slots_;  // per linear term, -1 for objective
  std::vector<Triplet> hess_pattern_;
  bool finalized_ = false;
};

}  // namespace crossflow::nlp
