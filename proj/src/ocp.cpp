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

#include "crossflow/ocp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "crossflow/errors.hpp"

namespace crossflow::ocp {

namespace {

constexpr int kNx = vehicle::kStateDim;
constexpr int kNu = vehicle::kControlDim;
constexpr int kRows = 4;                   // rows of every footprint and boundary block
constexpr int kBlockVars = 2 * kRows + 2;  // lambda, lambda, s
constexpr int kBlockRows = 6;
constexpr int kLinkRows = 5;  // a block without the norm row
constexpr int kBoundaries = scenario::IntersectionLayout::n_boundaries;
constexpr double kDualFloor = 1e-4;

// Base footprint rows (1,0), (-1,0), (0,-1), (0,1) rotated by R(theta):
// row (a1, a2) becomes (a1 c - a2 s, a1 s + a2 c).
constexpr double kBaseA[kRows][2] = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, -1.0}, {0.0, 1.0}};

template <typename T>
void transformed_rows(const T& x, const T& y, const T& theta, const std::array<double, kRows>& b0,
                      std::array<std::array<T, 2>, kRows>& A, std::array<T, kRows>& b) {
  using std::cos;
  using std::sin;
  const T c = cos(theta);
  const T s = sin(theta);
  for (int r = 0; r < kRows; ++r) {
    A[r][0] = kBaseA[r][0] * c - kBaseA[r][1] * s;
    A[r][1] = kBaseA[r][0] * s + kBaseA[r][1] * c;
    b[r] = b0[r] + A[r][0] * x + A[r][1] * y;
  }
}

struct DynamicsDefect {
  vehicle::VehicleParams params;
  vehicle::DerivedParams derived;
  double h;

  // in: X (6), u (2), t_f; out: -h t_f f(X, u).
  template <typename T>
  void operator()(const std::array<T, kNx + kNu + 1>& in, std::array<T, kNx>& out) const {
    std::array<T, kNx> s;
    for (int i = 0; i < kNx; ++i) s[i] = in[i];
    const std::array<T, kNx> f = vehicle::dynamics_t<T>(s, in[kNx], in[kNx + 1], params, derived);
    const T scale = -h * in[kNx + kNu];
    for (int i = 0; i < kNx; ++i) out[i] = scale * f[i];
  }
};

// Rows: dual objective, A_i^T lambda_ij + s, A_j^T lambda_ji - s and, for a
// full block, s.s.
template <int NOut>
struct PairSeparation {
  std::array<double, kRows> b0;

  // in: (x, y, theta)_i, (x, y, theta)_j, lambda_ij, lambda_ji, s.
  template <typename T>
  void operator()(const std::array<T, 6 + kBlockVars>& in, std::array<T, NOut>& out) const {
    std::array<std::array<T, 2>, kRows> Ai, Aj;
    std::array<T, kRows> bi, bj;
    transformed_rows(in[0], in[1], in[2], b0, Ai, bi);
    transformed_rows(in[3], in[4], in[5], b0, Aj, bj);
    const T* lij = &in[6];
    const T* lji = &in[6 + kRows];
    const T& s0 = in[6 + 2 * kRows];
    const T& s1 = in[7 + 2 * kRows];
    out[0] = T(0.0);
    out[1] = s0;
    out[2] = s1;
    out[3] = -s0;
    out[4] = -s1;
    for (int r = 0; r < kRows; ++r) {
      out[0] -= bi[r] * lij[r] + bj[r] * lji[r];
      out[1] += Ai[r][0] * lij[r];
      out[2] += Ai[r][1] * lij[r];
      out[3] += Aj[r][0] * lji[r];
      out[4] += Aj[r][1] * lji[r];
    }
    if constexpr (NOut > 5) out[5] = s0 * s0 + s1 * s1;
  }
};

template <int NOut>
struct BoundarySeparation {
  std::array<double, kRows> b0;
  std::array<std::array<double, 2>, kRows> Ar;
  std::array<double, kRows> br;

  // in: (x, y, theta), lambda_ir, lambda_ri, s.
  template <typename T>
  void operator()(const std::array<T, 3 + kBlockVars>& in, std::array<T, NOut>& out) const {
    std::array<std::array<T, 2>, kRows> Ai;
    std::array<T, kRows> bi;
    transformed_rows(in[0], in[1], in[2], b0, Ai, bi);
    const T* lir = &in[3];
    const T* lri = &in[3 + kRows];
    const T& s0 = in[3 + 2 * kRows];
    const T& s1 = in[4 + 2 * kRows];
    out[0] = T(0.0);
    out[1] = s0;
    out[2] = s1;
    out[3] = -s0;
    out[4] = -s1;
    for (int r = 0; r < kRows; ++r) {
      out[0] -= bi[r] * lir[r] + br[r] * lri[r];
      out[1] += Ai[r][0] * lir[r];
      out[2] += Ai[r][1] * lir[r];
      out[3] += Ar[r][0] * lri[r];
      out[4] += Ar[r][1] * lri[r];
    }
    if constexpr (NOut > 5) out[5] = s0 * s0 + s1 * s1;
  }
};

struct TimeCost {
  double alpha;

  template <typename T>
  void operator()(const std::array<T, 1>& in, std::array<T, 1>& out) const {
    out[0] = alpha * in[0] * in[0];
  }
};

struct NodeCost {
  double weight;  // h * w_j
  Eigen::Matrix3d Q;
  std::array<double, 3> target;
  double gamma;

  // in: x, y, theta, a, t_f.
  template <typename T>
  void operator()(const std::array<T, 5>& in, std::array<T, 1>& out) const {
    std::array<T, 3> e;
    for (int i = 0; i < 3; ++i) e[i] = in[i] - target[i];
    T q = T(0.0);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (Q(i, j) != 0.0) q += Q(i, j) * e[i] * e[j];
      }
    }
    if (gamma != 0.0) q += gamma * in[3] * in[3];
    out[0] = weight * in[4] * q;
  }
};

std::array<double, kRows> base_offsets(const scenario::Scenario& scn) {
  const geometry::Polytope base =
      geometry::base_polytope(scn.params.body_length, scn.params.body_width);
  std::array<double, kRows> b0;
  for (int r = 0; r < kRows; ++r) b0[r] = base.b()(r);
  return b0;
}

double segment_distance(const geometry::Vec2& p0, const geometry::Vec2& p1,
                        const geometry::Vec2& q0, const geometry::Vec2& q1) {
  auto point_segment = [](const geometry::Vec2& p, const geometry::Vec2& a,
                          const geometry::Vec2& b) {
    const geometry::Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (a + t * ab - p).norm();
  };
  auto cross = [](const geometry::Vec2& u, const geometry::Vec2& v) {
    return u.x() * v.y() - u.y() * v.x();
  };
  const double d1 = cross(p1 - p0, q0 - p0);
  const double d2 = cross(p1 - p0, q1 - p0);
  const double d3 = cross(q1 - q0, p0 - q0);
  const double d4 = cross(q1 - q0, p1 - q0);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return 0.0;
  }
  return std::min({point_segment(p0, q0, q1), point_segment(p1, q0, q1),
                   point_segment(q0, p0, p1), point_segment(q1, p0, p1)});
}

geometry::Vec2 position(const geometry::Pose& p) { return {p.x, p.y}; }

}  // namespace

DecisionLayout::DecisionLayout(int n_vehicles, int intervals, int degree,
                               std::vector<std::pair<int, int>> vehicle_pairs, bool hard_terminal,
                               bool links)
    : n_vehicles_(n_vehicles), intervals_(intervals), degree_(degree),
      pairs_(std::move(vehicle_pairs)) {
  if (n_vehicles < 1 || intervals < 1 || degree < 1) {
    throw InvalidArgument("layout needs at least one vehicle, interval and node");
  }
  for (const auto& [i, j] : pairs_) {
    if (i < 0 || j <= i || j >= n_vehicles) throw InvalidArgument("invalid vehicle pair");
  }
  per_vehicle_ = intervals_ * ((degree_ + 1) * kNx + kNu);
  tf_ = n_vehicles_ * per_vehicle_;
  pair_base_ = tf_ + 1;
  const int points = intervals_ * degree_;
  const int chain_links = links ? points - 1 : 0;
  const int n_pairs = static_cast<int>(pairs_.size());
  const int n_bounds = n_vehicles_ * kBoundaries;
  pair_link_base_ = pair_base_ + n_pairs * points * kBlockVars;
  boundary_base_ = pair_link_base_ + n_pairs * chain_links * 2 * kRows;
  boundary_link_base_ = boundary_base_ + n_bounds * points * kBlockVars;
  n_vars_ = boundary_link_base_ + n_bounds * chain_links * 2 * kRows;

  rows_.dynamics = n_vehicles_ * intervals_ * degree_ * kNx;
  rows_.continuity = n_vehicles_ * (intervals_ - 1) * kNx;
  rows_.initial = n_vehicles_ * kNx;
  rows_.terminal = hard_terminal ? n_vehicles_ * 3 : 0;
  rows_.limit = n_vehicles_ * intervals_ * 3 * (degree_ - 1);
  rows_.pair = n_pairs * points * kBlockRows;
  rows_.pair_link = n_pairs * chain_links * kLinkRows;
  rows_.boundary = n_bounds * points * kBlockRows;
  rows_.boundary_link = n_bounds * chain_links * kLinkRows;

  auto for_points = [&](auto&& emit) {
    for (int k = 0; k < intervals_; ++k) {
      for (int n = 1; n <= degree_; ++n) emit(k, n);
    }
  };
  int var = pair_base_;
  int link_var = pair_link_base_;
  int row = rows_.dynamics + rows_.continuity + rows_.initial + rows_.terminal + rows_.limit;
  int link_row = row + rows_.pair;
  for (const auto& [i, j] : pairs_) {
    for_points([&](int k, int n) {
      pair_blocks_.push_back({i, j, k, n, var, var + kRows, var + 2 * kRows, row});
      var += kBlockVars;
      row += kBlockRows;
    });
    for (int p = 0; p < chain_links; ++p) {
      const int to = static_cast<int>(pair_blocks_.size()) - points + p + 1;
      pair_links_.push_back({to - 1, to, link_var, link_var + kRows, link_row});
      link_var += 2 * kRows;
      link_row += kLinkRows;
    }
  }
  var = boundary_base_;
  link_var = boundary_link_base_;
  row = link_row;
  link_row = row + rows_.boundary;
  for (int v = 0; v < n_vehicles_; ++v) {
    for (int r = 0; r < kBoundaries; ++r) {
      for_points([&](int k, int n) {
        boundary_blocks_.push_back({v, r, k, n, var, var + kRows, var + 2 * kRows, row});
        var += kBlockVars;
        row += kBlockRows;
      });
      for (int p = 0; p < chain_links; ++p) {
        const int to = static_cast<int>(boundary_blocks_.size()) - points + p + 1;
        boundary_links_.push_back({to - 1, to, link_var, link_var + kRows, link_row});
        link_var += 2 * kRows;
        link_row += kLinkRows;
      }
    }
  }
}

int DecisionLayout::state(int vehicle, int interval, int node, int component) const {
  return vehicle * per_vehicle_ + interval * ((degree_ + 1) * kNx + kNu) + node * kNx + component;
}

int DecisionLayout::control(int vehicle, int interval, int component) const {
  return vehicle * per_vehicle_ + interval * ((degree_ + 1) * kNx + kNu) + (degree_ + 1) * kNx +
         component;
}

VarInfo DecisionLayout::describe(int index) const {
  if (index < 0 || index >= n_vars_) throw InvalidArgument("variable index out of range");
  VarInfo info;
  if (index < tf_) {
    const int per_interval = (degree_ + 1) * kNx + kNu;
    info.vehicle = index / per_vehicle_;
    const int rem = index % per_vehicle_;
    info.interval = rem / per_interval;
    const int off = rem % per_interval;
    if (off < (degree_ + 1) * kNx) {
      info.kind = VarKind::state;
      info.node = off / kNx;
      info.component = off % kNx;
    } else {
      info.kind = VarKind::control;
      info.component = off - (degree_ + 1) * kNx;
    }
    return info;
  }
  if (index == tf_) {
    info.kind = VarKind::final_time;
    return info;
  }
  const bool is_pair = index < boundary_base_;
  const bool is_link =
      (index >= pair_link_base_ && index < boundary_base_) || index >= boundary_link_base_;
  int block = 0;
  int off = 0;
  if (is_link) {
    const int rel = index - (is_pair ? pair_link_base_ : boundary_link_base_);
    const auto& link = (is_pair ? pair_links_ : boundary_links_)[rel / (2 * kRows)];
    block = link.to;
    off = rel % (2 * kRows);
    info.link = true;
  } else {
    const int rel = index - (is_pair ? pair_base_ : boundary_base_);
    block = rel / kBlockVars;
    off = rel % kBlockVars;
  }
  info.interval = is_pair ? pair_blocks_[block].interval : boundary_blocks_[block].interval;
  info.node = is_pair ? pair_blocks_[block].node : boundary_blocks_[block].node;
  if (is_pair) {
    info.vehicle = pair_blocks_[block].i;
    info.other = pair_blocks_[block].j;
  } else {
    info.vehicle = boundary_blocks_[block].vehicle;
    info.other = boundary_blocks_[block].boundary;
  }
  if (off < kRows) {
    info.kind = is_pair ? VarKind::pair_lambda_ij : VarKind::boundary_lambda_ir;
    info.component = off;
  } else if (off < 2 * kRows) {
    info.kind = is_pair ? VarKind::pair_lambda_ji : VarKind::boundary_lambda_ri;
    info.component = off - kRows;
  } else {
    info.kind = is_pair ? VarKind::pair_s : VarKind::boundary_s;
    info.component = off - 2 * kRows;
  }
  return info;
}

std::string DecisionLayout::name(int index) const {
  static constexpr const char* kStateNames[kNx] = {"r", "beta", "V", "x", "y", "theta"};
  static constexpr const char* kControlNames[kNu] = {"a", "delta"};
  const VarInfo v = describe(index);
  const std::string where = "k=" + std::to_string(v.interval) + ",j=" + std::to_string(v.node);
  switch (v.kind) {
    case VarKind::state:
      return std::string(kStateNames[v.component]) + "[v" + std::to_string(v.vehicle) + ",k=" +
             std::to_string(v.interval) + ",j=" + std::to_string(v.node) + "]";
    case VarKind::control:
      return std::string(kControlNames[v.component]) + "[v" + std::to_string(v.vehicle) + ",k=" +
             std::to_string(v.interval) + "]";
    case VarKind::final_time:
      return "t_f";
    case VarKind::pair_lambda_ij:
    case VarKind::pair_lambda_ji:
    case VarKind::pair_s: {
      const char* tag = v.kind == VarKind::pair_lambda_ij   ? "lambda_ij"
                        : v.kind == VarKind::pair_lambda_ji ? "lambda_ji"
                                                            : "s_ij";
      return std::string(tag) + (v.link ? "'" : "") + "[v" + std::to_string(v.vehicle) + ",v" +
             std::to_string(v.other) +
             "," + where + "," + std::to_string(v.component) + "]";
    }
    default: {
      const char* tag = v.kind == VarKind::boundary_lambda_ir   ? "lambda_ir"
                        : v.kind == VarKind::boundary_lambda_ri ? "lambda_ri"
                                                                : "s_ir";
      return std::string(tag) + (v.link ? "'" : "") + "[v" + std::to_string(v.vehicle) + ",o" +
             std::to_string(v.other) +
             "," + where + "," + std::to_string(v.component) + "]";
    }
  }
}

double reference_time(const scenario::Scenario& scn) {
  return std::max(scenario::theoretical_lower_bound(scn), 0.1);
}

std::vector<std::pair<int, int>> active_pairs(const scenario::Scenario& scn) {
  std::vector<std::pair<int, int>> pairs;
  const int n = static_cast<int>(scn.vehicles.size());
  const double radius = std::hypot(scn.params.body_length, scn.params.body_width) + scn.d_min;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (scn.transcription.prune_pairs) {
        const auto& a = scn.vehicles[i];
        const auto& b = scn.vehicles[j];
        const double gap = segment_distance(position(a.initial_pose), position(a.terminal_pose),
                                            position(b.initial_pose), position(b.terminal_pose)) -
                           2.0 * radius;
        if (gap > 2.0) continue;
      }
      pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

void build_objective(nlp::Problem& p, const DecisionLayout& layout, const scenario::Scenario& scn,
                     const CollocationCoefficients& coeffs) {
  const auto& w = scn.weights;
  if (w.alpha != 0.0) {
    p.add_element(nlp::make_element<1, 1>(TimeCost{w.alpha}), {layout.final_time()},
                  {nlp::kObjective});
  }
  if (w.Q.isZero(0.0) && w.gamma == 0.0) return;
  const double h = 1.0 / layout.intervals();
  for (int v = 0; v < layout.n_vehicles(); ++v) {
    const geometry::Pose& tp = scn.vehicles[v].terminal_pose;
    for (int k = 0; k < layout.intervals(); ++k) {
      for (int j = 1; j <= layout.degree(); ++j) {
        NodeCost cost{h * coeffs.quadrature(j - 1), w.Q, {tp.x, tp.y, tp.theta}, w.gamma};
        p.add_element(nlp::make_element<5, 1>(cost),
                      {layout.state(v, k, j, 3), layout.state(v, k, j, 4),
                       layout.state(v, k, j, 5), layout.control(v, k, 0), layout.final_time()},
                      {nlp::kObjective});
      }
    }
  }
}

Assembly assemble(const scenario::Scenario& scn) {
  scenario::validate(scn);
  const auto& tc = scn.transcription;
  const bool hard = tc.terminal == scenario::TerminalMode::hard;
  Assembly a;
  a.coefficients = collocation_coefficients(tc.degree);
  a.layout = DecisionLayout(static_cast<int>(scn.vehicles.size()), tc.intervals, tc.degree,
                            active_pairs(scn), hard, tc.separation_links);
  const DecisionLayout& L = a.layout;
  const CollocationCoefficients& C = a.coefficients;
  const double ref = reference_time(scn);
  a.t_lower = 0.5 * ref;
  a.t_upper = 4.0 * ref;
  const vehicle::Limits& lim = scn.limits;
  nlp::Problem& p = a.problem;

  for (int idx = 0; idx < L.n_vars(); ++idx) {
    const VarInfo info = L.describe(idx);
    double lo = -nlp::kInf;
    double hi = nlp::kInf;
    switch (info.kind) {
      case VarKind::state:
        if (info.component == 0) lo = -lim.r_max, hi = lim.r_max;
        if (info.component == 1) lo = -lim.beta_max, hi = lim.beta_max;
        if (info.component == 2) lo = lim.V_min, hi = lim.V_max;
        break;
      case VarKind::control:
        if (info.component == 0) lo = -lim.a_max, hi = lim.a_max;
        else lo = -lim.delta_max, hi = lim.delta_max;
        break;
      case VarKind::final_time:
        lo = a.t_lower;
        hi = a.t_upper;
        break;
      case VarKind::pair_s:
      case VarKind::boundary_s:
        break;
      default:
        lo = 0.0;
        break;
    }
    p.add_variable(lo, hi, L.name(idx));
  }

  const int nv = L.n_vehicles();
  const int N = L.intervals();
  const int d = L.degree();
  const double h = 1.0 / N;
  const vehicle::DerivedParams dp = vehicle::derived_params(scn.params);
  const auto defect = nlp::make_element<kNx + kNu + 1, kNx>(DynamicsDefect{scn.params, dp, h});

  // Dynamics defects.
  for (int v = 0; v < nv; ++v) {
    for (int k = 0; k < N; ++k) {
      for (int j = 1; j <= d; ++j) {
        std::vector<int> inputs;
        std::vector<int> rows;
        for (int c = 0; c < kNx; ++c) {
          const int row = p.add_row(0.0, 0.0);
          rows.push_back(row);
          inputs.push_back(L.state(v, k, j, c));
          for (int m = 0; m <= d; ++m) {
            if (C.D(j - 1, m) != 0.0) p.add_linear(row, L.state(v, k, m, c), C.D(j - 1, m));
          }
        }
        inputs.push_back(L.control(v, k, 0));
        inputs.push_back(L.control(v, k, 1));
        inputs.push_back(L.final_time());
        p.add_element(defect, inputs, rows);
      }
    }
  }
  // Continuity.
  for (int v = 0; v < nv; ++v) {
    for (int k = 0; k + 1 < N; ++k) {
      for (int c = 0; c < kNx; ++c) {
        const int row = p.add_row(0.0, 0.0);
        p.add_linear(row, L.state(v, k + 1, 0, c), 1.0);
        for (int m = 0; m <= d; ++m) {
          if (C.end(m) != 0.0) p.add_linear(row, L.state(v, k, m, c), -C.end(m));
        }
      }
    }
  }
  // Initial state.
  for (int v = 0; v < nv; ++v) {
    const auto& spec = scn.vehicles[v];
    const std::array<double, kNx> x0 = {0.0, 0.0, spec.initial_speed, spec.initial_pose.x,
                                        spec.initial_pose.y, spec.initial_pose.theta};
    for (int c = 0; c < kNx; ++c) {
      const int row = p.add_row(x0[c], x0[c]);
      p.add_linear(row, L.state(v, 0, 0, c), 1.0);
    }
  }
  // Terminal pose.
  if (hard) {
    for (int v = 0; v < nv; ++v) {
      const auto& tp = scn.vehicles[v].terminal_pose;
      const std::array<double, 3> target = {tp.x, tp.y, tp.theta};
      for (int c = 0; c < 3; ++c) {
        const int row = p.add_row(target[c], target[c]);
        for (int m = 0; m <= d; ++m) {
          if (C.end(m) != 0.0) p.add_linear(row, L.state(v, N - 1, m, 3 + c), C.end(m));
        }
      }
    }
  }

  // r, beta and V limits on the interior Bernstein coefficients; the end
  // coefficients are node values, bounded directly.
  const std::array<std::pair<double, double>, 3> limits = {
      std::pair{-lim.r_max, lim.r_max}, std::pair{-lim.beta_max, lim.beta_max},
      std::pair{lim.V_min, lim.V_max}};
  for (int v = 0; v < nv; ++v) {
    for (int k = 0; k < N; ++k) {
      for (int c = 0; c < 3; ++c) {
        for (int i = 1; i < d; ++i) {
          const int row = p.add_row(limits[c].first, limits[c].second);
          for (int m = 0; m <= d; ++m) {
            if (C.bernstein(i, m) != 0.0) p.add_linear(row, L.state(v, k, m, c), C.bernstein(i, m));
          }
        }
      }
    }
  }

  const std::array<double, kRows> b0 = base_offsets(scn);
  auto add_block_rows = [&p](double margin, bool norm) {
    std::vector<int> rows;
    rows.push_back(p.add_row(margin, nlp::kInf));
    for (int r = 0; r < 4; ++r) rows.push_back(p.add_row(0.0, 0.0));
    if (norm) rows.push_back(p.add_row(-nlp::kInf, 1.0));
    return rows;
  };
  auto pose_inputs = [&L](std::vector<int>& inputs, int v, int k, int node) {
    for (int c = 0; c < 3; ++c) inputs.push_back(L.state(v, k, node, 3 + c));
  };

  const auto pair_elem = nlp::make_element<6 + kBlockVars, kBlockRows>(PairSeparation<kBlockRows>{b0});
  for (const PairBlock& blk : L.pair_blocks()) {
    const std::vector<int> rows = add_block_rows(scn.d_min, true);
    if (rows.front() != blk.row) throw InvalidArgument("pair block row mismatch");
    std::vector<int> inputs;
    pose_inputs(inputs, blk.i, blk.interval, blk.node);
    pose_inputs(inputs, blk.j, blk.interval, blk.node);
    for (int q = 0; q < kBlockVars; ++q) inputs.push_back(blk.lambda_ij + q);
    p.add_element(pair_elem, inputs, rows);
  }
  const auto pair_link_elem =
      nlp::make_element<6 + kBlockVars, kLinkRows>(PairSeparation<kLinkRows>{b0});
  for (const LinkBlock& link : L.pair_links()) {
    const std::vector<int> rows = add_block_rows(scn.d_min, false);
    if (rows.front() != link.row) throw InvalidArgument("pair link row mismatch");
    const PairBlock& to = L.pair_blocks()[link.to];
    std::vector<int> inputs;
    pose_inputs(inputs, to.i, to.interval, to.node);
    pose_inputs(inputs, to.j, to.interval, to.node);
    for (int q = 0; q < 2 * kRows; ++q) inputs.push_back(link.lambda_a + q);
    inputs.push_back(L.pair_blocks()[link.from].s);
    inputs.push_back(L.pair_blocks()[link.from].s + 1);
    p.add_element(pair_link_elem, inputs, rows);
  }

  const auto boundaries = scenario::build_road_boundaries(scn.layout);
  std::array<std::shared_ptr<const nlp::Element>, kBoundaries> boundary_elems;
  std::array<std::shared_ptr<const nlp::Element>, kBoundaries> boundary_link_elems;
  for (int r = 0; r < kBoundaries; ++r) {
    BoundarySeparation<kBlockRows> f{b0, {}, {}};
    for (int q = 0; q < kRows; ++q) {
      f.Ar[q] = {boundaries[r].A()(q, 0), boundaries[r].A()(q, 1)};
      f.br[q] = boundaries[r].b()(q);
    }
    boundary_elems[r] = nlp::make_element<3 + kBlockVars, kBlockRows>(f);
    boundary_link_elems[r] = nlp::make_element<3 + kBlockVars, kLinkRows>(
        BoundarySeparation<kLinkRows>{f.b0, f.Ar, f.br});
  }
  for (const BoundaryBlock& blk : L.boundary_blocks()) {
    const std::vector<int> rows = add_block_rows(scn.d_rmin, true);
    if (rows.front() != blk.row) throw InvalidArgument("boundary block row mismatch");
    std::vector<int> inputs;
    pose_inputs(inputs, blk.vehicle, blk.interval, blk.node);
    for (int q = 0; q < kBlockVars; ++q) inputs.push_back(blk.lambda_ir + q);
    p.add_element(boundary_elems[blk.boundary], inputs, rows);
  }
  for (const LinkBlock& link : L.boundary_links()) {
    const std::vector<int> rows = add_block_rows(scn.d_rmin, false);
    if (rows.front() != link.row) throw InvalidArgument("boundary link row mismatch");
    const BoundaryBlock& to = L.boundary_blocks()[link.to];
    std::vector<int> inputs;
    pose_inputs(inputs, to.vehicle, to.interval, to.node);
    for (int q = 0; q < 2 * kRows; ++q) inputs.push_back(link.lambda_a + q);
    inputs.push_back(L.boundary_blocks()[link.from].s);
    inputs.push_back(L.boundary_blocks()[link.from].s + 1);
    p.add_element(boundary_link_elems[to.boundary], inputs, rows);
  }

  build_objective(p, L, scn, C);
  p.finalize();
  return a;
}

std::vector<geometry::Vec2> guess_route(const scenario::VehicleSpec& v) {
  const geometry::Vec2 p0 = position(v.initial_pose);
  const geometry::Vec2 pf = position(v.terminal_pose);
  const geometry::Vec2 d0(std::cos(v.initial_pose.theta), std::sin(v.initial_pose.theta));
  const geometry::Vec2 df(std::cos(v.terminal_pose.theta), std::sin(v.terminal_pose.theta));
  const double det = d0.x() * (-df.y()) - d0.y() * (-df.x());
  if (std::abs(det) > 1e-6) {
    // p0 + t d0 = pf + u df.
    const geometry::Vec2 rhs = pf - p0;
    const double t = (rhs.x() * (-df.y()) - rhs.y() * (-df.x())) / det;
    const double u = (d0.x() * rhs.y() - d0.y() * rhs.x()) / det;
    if (t > 0.0 && u < 0.0) return {p0, p0 + t * d0, pf};
  }
  return {p0, pf};
}

Eigen::VectorXd initial_guess(const scenario::Scenario& scn, const Assembly& a) {
  const DecisionLayout& L = a.layout;
  const CollocationCoefficients& C = a.coefficients;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(L.n_vars());
  const double tf = std::clamp(1.2 * reference_time(scn), a.t_lower, a.t_upper);
  x(L.final_time()) = tf;
  const int N = L.intervals();
  const int d = L.degree();

  // Pose of vehicle v at normalised time tau.
  std::vector<std::vector<geometry::Vec2>> routes;
  std::vector<std::vector<double>> arc;
  for (const auto& v : scn.vehicles) {
    routes.push_back(guess_route(v));
    std::vector<double> s = {0.0};
    for (std::size_t i = 1; i < routes.back().size(); ++i) {
      s.push_back(s.back() + (routes.back()[i] - routes.back()[i - 1]).norm());
    }
    arc.push_back(std::move(s));
  }
  // Constant acceleration that covers the route in tf, limited to a_max; the
  // progress is rescaled so the route always ends at tf.
  std::vector<double> accel;
  for (std::size_t v = 0; v < routes.size(); ++v) {
    const double v0 = scn.vehicles[v].initial_speed;
    accel.push_back(std::clamp(2.0 * (arc[v].back() - v0 * tf) / (tf * tf), -scn.limits.a_max,
                               scn.limits.a_max));
  }
  auto progress = [&](int v, double tau) {
    const double v0 = scn.vehicles[v].initial_speed;
    const double t = tau * tf;
    return (v0 * t + 0.5 * accel[v] * t * t) / (v0 * tf + 0.5 * accel[v] * tf * tf);
  };
  auto speed_at = [&](int v, double tau) {
    const double v0 = scn.vehicles[v].initial_speed;
    const double t = tau * tf;
    return arc[v].back() * (v0 + accel[v] * t) / (v0 * tf + 0.5 * accel[v] * tf * tf);
  };
  auto pose_at = [&](int v, double tau) {
    const auto& route = routes[v];
    const auto& s = arc[v];
    const auto& spec = scn.vehicles[v];
    tau = progress(v, tau);
    const double target = tau * s.back();
    geometry::Vec2 pt = route.back();
    for (std::size_t i = 1; i < route.size(); ++i) {
      if (target <= s[i] || i + 1 == route.size()) {
        const double seg = s[i] - s[i - 1];
        const double f = seg > 0.0 ? std::clamp((target - s[i - 1]) / seg, 0.0, 1.0) : 1.0;
        pt = route[i - 1] + f * (route[i] - route[i - 1]);
        break;
      }
    }
    const double theta =
        spec.initial_pose.theta + tau * (spec.terminal_pose.theta - spec.initial_pose.theta);
    return geometry::Pose{pt.x(), pt.y(), theta};
  };
  auto tau_of = [&](int k, int j) { return (k + C.tau[j]) / N; };

  for (int v = 0; v < L.n_vehicles(); ++v) {
    for (int k = 0; k < N; ++k) {
      x(L.control(v, k, 0)) = accel[v];
      for (int j = 0; j <= d; ++j) {
        const geometry::Pose pose = pose_at(v, tau_of(k, j));
        x(L.state(v, k, j, 2)) = speed_at(v, tau_of(k, j));
        x(L.state(v, k, j, 3)) = pose.x;
        x(L.state(v, k, j, 4)) = pose.y;
        x(L.state(v, k, j, 5)) = pose.theta;
      }
    }
  }

  auto guess_pose = [&](int v, int k, int node) { return pose_at(v, tau_of(k, node)); };
  auto fill = [&x](int base, const geometry::DualCertificate& cert) {
    for (int r = 0; r < kRows; ++r) {
      x(base + r) = std::max(cert.lambda_pq(r), kDualFloor);
      x(base + kRows + r) = std::max(cert.lambda_qp(r), kDualFloor);
    }
    x(base + 2 * kRows) = cert.s.x();
    x(base + 2 * kRows + 1) = cert.s.y();
  };
  for (const PairBlock& blk : L.pair_blocks()) {
    const auto P = scenario::footprint(scn, guess_pose(blk.i, blk.interval, blk.node));
    const auto Q = scenario::footprint(scn, guess_pose(blk.j, blk.interval, blk.node));
    fill(blk.lambda_ij, geometry::solve_dual(P, Q).certificate);
  }
  const auto boundaries = scenario::build_road_boundaries(scn.layout);
  for (const BoundaryBlock& blk : L.boundary_blocks()) {
    const auto P = scenario::footprint(scn, guess_pose(blk.vehicle, blk.interval, blk.node));
    fill(blk.lambda_ir, geometry::solve_dual(P, boundaries[blk.boundary]).certificate);
  }
  // Link multipliers start from those of the block they certify.
  for (const LinkBlock& link : L.pair_links()) {
    const int src = L.pair_blocks()[link.to].lambda_ij;
    x.segment(link.lambda_a, 2 * kRows) = x.segment(src, 2 * kRows);
  }
  for (const LinkBlock& link : L.boundary_links()) {
    const int src = L.boundary_blocks()[link.to].lambda_ir;
    x.segment(link.lambda_a, 2 * kRows) = x.segment(src, 2 * kRows);
  }

  const auto& lo = a.problem.x_lower();
  const auto& hi = a.problem.x_upper();
  return x.cwiseMax(lo).cwiseMin(hi);
}

Solution extract(const Eigen::VectorXd& x, const Assembly& a, const scenario::Scenario& scn) {
  const DecisionLayout& L = a.layout;
  const CollocationCoefficients& C = a.coefficients;
  if (x.size() != L.n_vars()) {
    throw InvalidArgument("solution vector has " + std::to_string(x.size()) +
                          " entries, layout expects " + std::to_string(L.n_vars()));
  }
  if (static_cast<int>(scn.vehicles.size()) != L.n_vehicles()) {
    throw InvalidArgument("scenario and layout disagree on the vehicle count");
  }
  Solution sol;
  sol.t_f = x(L.final_time());
  const int N = L.intervals();
  const int d = L.degree();
  const double h = sol.t_f / N;
  auto node_time = [&](int k, int j) { return (k + C.tau[j]) * h; };
  auto state_at = [&](int v, int k, int j) {
    vehicle::VehicleState s;
    s.r = x(L.state(v, k, j, 0));
    s.beta = x(L.state(v, k, j, 1));
    s.V = x(L.state(v, k, j, 2));
    s.x = x(L.state(v, k, j, 3));
    s.y = x(L.state(v, k, j, 4));
    s.theta = x(L.state(v, k, j, 5));
    return s;
  };
  auto control_at = [&](int v, int k) {
    return vehicle::ControlInput{x(L.control(v, k, 0)), x(L.control(v, k, 1))};
  };

  for (int v = 0; v < L.n_vehicles(); ++v) {
    Trajectory t;
    t.vehicle_id = scn.vehicles[v].id;
    t.degree = d;
    t.times.push_back(0.0);
    t.states.push_back(state_at(v, 0, 0));
    t.controls.push_back(control_at(v, 0));
    for (int k = 0; k < N; ++k) {
      t.interval_starts.push_back(k * h);
      t.interval_controls.push_back(control_at(v, k));
      for (int j = 1; j <= d; ++j) {
        t.times.push_back(node_time(k, j));
        t.states.push_back(state_at(v, k, j));
        t.controls.push_back(control_at(v, k));
      }
    }
    // The last node sits at exactly t_f.
    t.times.back() = sol.t_f;
    sol.trajectories.push_back(std::move(t));
  }

  auto cert_from = [&x](int base) {
    geometry::DualCertificate c;
    c.lambda_pq = x.segment(base, kRows);
    c.lambda_qp = x.segment(base + kRows, kRows);
    c.s = geometry::Vec2(x(base + 2 * kRows), x(base + 2 * kRows + 1));
    return c;
  };
  auto pose_of = [&](int v, int k, int j) {
    return geometry::Pose{x(L.state(v, k, j, 3)), x(L.state(v, k, j, 4)), x(L.state(v, k, j, 5))};
  };
  for (const PairBlock& blk : L.pair_blocks()) {
    PairCertificate pc;
    pc.i = blk.i;
    pc.j = blk.j;
    pc.t = node_time(blk.interval, blk.node);
    pc.certificate = cert_from(blk.lambda_ij);
    pc.objective = geometry::dual_objective(
        scenario::footprint(scn, pose_of(blk.i, blk.interval, blk.node)),
        scenario::footprint(scn, pose_of(blk.j, blk.interval, blk.node)),
        pc.certificate);
    sol.pair_certificates.push_back(std::move(pc));
  }
  const auto boundaries = scenario::build_road_boundaries(scn.layout);
  for (const BoundaryBlock& blk : L.boundary_blocks()) {
    BoundaryCertificate bc;
    bc.vehicle = blk.vehicle;
    bc.boundary = blk.boundary;
    bc.t = node_time(blk.interval, blk.node);
    bc.certificate = cert_from(blk.lambda_ir);
    bc.objective = geometry::dual_objective(
        scenario::footprint(scn, pose_of(blk.vehicle, blk.interval, blk.node)),
        boundaries[blk.boundary], bc.certificate);
    sol.boundary_certificates.push_back(std::move(bc));
  }
  return sol;
}

OcpResult solve_ocp(const scenario::Scenario& scn, const solver::SolverConfig& cfg) {
  const Assembly a = assemble(scn);
  const Eigen::VectorXd x0 = initial_guess(scn, a);
  OcpResult result;
  result.report = solver::solve(a.problem, x0, cfg);
  result.solution = extract(result.report.x, a, scn);
  return result;
}

}  // namespace crossflow::ocp
