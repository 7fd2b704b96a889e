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

#include "crossflow/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "crossflow/errors.hpp"

namespace crossflow::nlp {

namespace {

int find_slot(const std::vector<Triplet>& pattern, int row, int col, bool by_row) {
  auto less = [by_row](const Triplet& a, const Triplet& b) {
    return by_row ? std::pair(a.row, a.col) < std::pair(b.row, b.col)
                  : std::pair(a.col, a.row) < std::pair(b.col, b.row);
  };
  const Triplet key{row, col};
  auto it = std::lower_bound(pattern.begin(), pattern.end(), key, less);
  if (it == pattern.end() || it->row != row || it->col != col) return -1;
  return static_cast<int>(it - pattern.begin());
}

}  // namespace

int Problem::add_variable(double lower, double upper, std::string name) {
  if (finalized_) throw InvalidArgument("problem is finalized");
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw InvalidArgument("variable '" + name + "' has inconsistent bounds");
  }
  xl_build_.push_back(lower);
  xu_build_.push_back(upper);
  names_.push_back(std::move(name));
  return n_vars() - 1;
}

int Problem::add_row(double lower, double upper) {
  if (finalized_) throw InvalidArgument("problem is finalized");
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw InvalidArgument("row " + std::to_string(n_rows()) + " has inconsistent bounds");
  }
  gl_build_.push_back(lower);
  gu_build_.push_back(upper);
  return n_rows() - 1;
}

void Problem::add_linear(int row, int var, double coef) {
  if (finalized_) throw InvalidArgument("problem is finalized");
  if (row < kObjective || row >= n_rows() || var < 0 || var >= n_vars()) {
    throw InvalidArgument("linear term index out of range");
  }
  linear_.push_back({row, var, coef});
}

void Problem::add_element(std::shared_ptr<const Element> element, std::vector<int> inputs,
                          std::vector<int> out_rows) {
  if (finalized_) throw InvalidArgument("problem is finalized");
  if (!element) throw InvalidArgument("null element");
  if (static_cast<int>(inputs.size()) != element->n_in() ||
      static_cast<int>(out_rows.size()) != element->n_out()) {
    throw InvalidArgument("element arity mismatch");
  }
  for (int v : inputs) {
    if (v < 0 || v >= n_vars()) throw InvalidArgument("element input out of range");
  }
  std::vector<int> sorted = inputs;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidArgument("element inputs must be distinct");
  }
  for (int r : out_rows) {
    if (r < kObjective || r >= n_rows()) throw InvalidArgument("element output row out of range");
  }
  elements_.push_back({std::move(element), std::move(inputs), std::move(out_rows), {}, {}});
}

void Problem::finalize() {
  if (finalized_) return;
  auto to_eigen = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))
        .eval();
  };
  x_lower_ = to_eigen(xl_build_);
  x_upper_ = to_eigen(xu_build_);
  g_lower_ = to_eigen(gl_build_);
  g_upper_ = to_eigen(gu_build_);

  std::vector<Triplet> jac;
  std::vector<Triplet> hess;
  for (const LinearTerm& t : linear_) {
    if (t.row != kObjective) jac.push_back({t.row, t.var});
  }
  for (const ElementUse& e : elements_) {
    const int ni = e.element->n_in();
    for (int r : e.out_rows) {
      if (r == kObjective) continue;
      for (int v : e.inputs) jac.push_back({r, v});
    }
    for (int i = 0; i < ni; ++i) {
      for (int j = 0; j <= i; ++j) {
        const int a = e.inputs[i];
        const int b = e.inputs[j];
        hess.push_back({std::max(a, b), std::min(a, b)});
      }
    }
  }
  auto by_row = [](const Triplet& a, const Triplet& b) {
    return std::pair(a.row, a.col) < std::pair(b.row, b.col);
  };
  auto by_col = [](const Triplet& a, const Triplet& b) {
    return std::pair(a.col, a.row) < std::pair(b.col, b.row);
  };
  auto same = [](const Triplet& a, const Triplet& b) { return a.row == b.row && a.col == b.col; };
  std::sort(jac.begin(), jac.end(), by_row);
  jac.erase(std::unique(jac.begin(), jac.end(), same), jac.end());
  std::sort(hess.begin(), hess.end(), by_col);
  hess.erase(std::unique(hess.begin(), hess.end(), same), hess.end());
  jac_pattern_ = std::move(jac);
  hess_pattern_ = std::move(hess);

  linear_slots_.clear();
  for (const LinearTerm& t : linear_) {
    linear_slots_.push_back(t.row == kObjective ? -1
                                                : find_slot(jac_pattern_, t.row, t.var, true));
  }
  for (ElementUse& e : elements_) {
    const int ni = e.element->n_in();
    const int no = e.element->n_out();
    e.jac_slots.assign(static_cast<size_t>(ni * no), -1);
    for (int k = 0; k < no; ++k) {
      if (e.out_rows[k] == kObjective) continue;
      for (int i = 0; i < ni; ++i) {
        e.jac_slots[k * ni + i] = find_slot(jac_pattern_, e.out_rows[k], e.inputs[i], true);
      }
    }
    e.hess_slots.clear();
    for (int i = 0; i < ni; ++i) {
      for (int j = 0; j <= i; ++j) {
        const int a = e.inputs[i];
        const int b = e.inputs[j];
        e.hess_slots.push_back(find_slot(hess_pattern_, std::max(a, b), std::min(a, b), false));
      }
    }
  }
  finalized_ = true;
}

void Problem::require_finalized() const {
  if (!finalized_) throw InvalidArgument("problem must be finalized before evaluation");
}

void Problem::check_size(const Eigen::VectorXd& x) const {
  require_finalized();
  if (x.size() != n_vars()) {
    throw InvalidArgument("decision vector has " + std::to_string(x.size()) +
                          " entries, expected " + std::to_string(n_vars()));
  }
}

std::vector<double> Problem::gather(const ElementUse& e, const Eigen::VectorXd& x) const {
  std::vector<double> in(e.inputs.size());
  for (size_t i = 0; i < e.inputs.size(); ++i) in[i] = x(e.inputs[i]);
  return in;
}

double Problem::objective(const Eigen::VectorXd& x) const {
  check_size(x);
  double f = 0.0;
  for (const LinearTerm& t : linear_) {
    if (t.row == kObjective) f += t.coef * x(t.var);
  }
  std::vector<double> out;
  for (const ElementUse& e : elements_) {
    if (std::none_of(e.out_rows.begin(), e.out_rows.end(),
                     [](int r) { return r == kObjective; })) {
      continue;
    }
    const std::vector<double> in = gather(e, x);
    out.assign(e.out_rows.size(), 0.0);
    e.element->eval(in.data(), out.data());
    for (size_t k = 0; k < out.size(); ++k) {
      if (e.out_rows[k] == kObjective) f += out[k];
    }
  }
  return f;
}

Eigen::VectorXd Problem::gradient(const Eigen::VectorXd& x) const {
  check_size(x);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n_vars());
  for (const LinearTerm& t : linear_) {
    if (t.row == kObjective) g(t.var) += t.coef;
  }
  std::vector<double> out;
  std::vector<double> jac;
  for (const ElementUse& e : elements_) {
    if (std::none_of(e.out_rows.begin(), e.out_rows.end(),
                     [](int r) { return r == kObjective; })) {
      continue;
    }
    const std::vector<double> in = gather(e, x);
    const int ni = e.element->n_in();
    out.assign(e.out_rows.size(), 0.0);
    jac.assign(out.size() * ni, 0.0);
    e.element->eval_jacobian(in.data(), out.data(), jac.data());
    for (size_t k = 0; k < out.size(); ++k) {
      if (e.out_rows[k] != kObjective) continue;
      for (int i = 0; i < ni; ++i) g(e.inputs[i]) += jac[k * ni + i];
    }
  }
  return g;
}

Eigen::VectorXd Problem::constraints(const Eigen::VectorXd& x) const {
  check_size(x);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n_rows());
  for (const LinearTerm& t : linear_) {
    if (t.row != kObjective) c(t.row) += t.coef * x(t.var);
  }
  std::vector<double> out;
  for (const ElementUse& e : elements_) {
    const std::vector<double> in = gather(e, x);
    out.assign(e.out_rows.size(), 0.0);
    e.element->eval(in.data(), out.data());
    for (size_t k = 0; k < out.size(); ++k) {
      if (e.out_rows[k] != kObjective) c(e.out_rows[k]) += out[k];
    }
  }
  return c;
}

Eigen::VectorXd Problem::jacobian_values(const Eigen::VectorXd& x) const {
  check_size(x);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(jac_pattern_.size()));
  for (size_t t = 0; t < linear_.size(); ++t) {
    if (linear_slots_[t] >= 0) v(linear_slots_[t]) += linear_[t].coef;
  }
  std::vector<double> out;
  std::vector<double> jac;
  for (const ElementUse& e : elements_) {
    if (std::all_of(e.out_rows.begin(), e.out_rows.end(),
                    [](int r) { return r == kObjective; })) {
      continue;
    }
    const std::vector<double> in = gather(e, x);
    out.assign(e.out_rows.size(), 0.0);
    jac.assign(e.jac_slots.size(), 0.0);
    e.element->eval_jacobian(in.data(), out.data(), jac.data());
    for (size_t p = 0; p < jac.size(); ++p) {
      if (e.jac_slots[p] >= 0) v(e.jac_slots[p]) += jac[p];
    }
  }
  return v;
}

Eigen::VectorXd Problem::hessian_values(const Eigen::VectorXd& x, double obj_factor,
                                        const Eigen::VectorXd& y) const {
  check_size(x);
  if (y.size() != n_rows()) throw InvalidArgument("multiplier vector has wrong size");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hess_pattern_.size()));
  std::vector<double> w;
  std::vector<double> h;
  for (const ElementUse& e : elements_) {
    w.assign(e.out_rows.size(), 0.0);
    bool any = false;
    for (size_t k = 0; k < w.size(); ++k) {
      w[k] = e.out_rows[k] == kObjective ? obj_factor : y(e.out_rows[k]);
      any = any || w[k] != 0.0;
    }
    if (!any) continue;
    const std::vector<double> in = gather(e, x);
    h.assign(e.hess_slots.size(), 0.0);
    e.element->add_hessian(in.data(), w.data(), h.data());
    for (size_t p = 0; p < h.size(); ++p) v(e.hess_slots[p]) += h[p];
  }
  return v;
}

Eigen::MatrixXd Problem::dense_jacobian(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd v = jacobian_values(x);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n_rows(), n_vars());
  for (size_t p = 0; p < jac_pattern_.size(); ++p) {
    J(jac_pattern_[p].row, jac_pattern_[p].col) += v(static_cast<Eigen::Index>(p));
  }
  return J;
}

}  // namespace crossflow::nlp
