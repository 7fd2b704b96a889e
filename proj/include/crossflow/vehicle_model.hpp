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

// Linear single-track (bicycle) model with state [r, beta, V, x, y, theta]
// and input [a, delta].

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace crossflow::vehicle {

struct VehicleParams {
  double m = 1204.0;
  double I_z = 1500.0;
  double l_f = 1.2;
  double l_r = 1.4;
  double C_F = -60000.0;
  double C_R = -60000.0;
  double body_length = 4.5;
  double body_width = 2.0;
};

struct DerivedParams {
  double N_r_tilde = 0.0;
  double N_beta = 0.0;
  double N_delta = 0.0;
  double Y_r_tilde = 0.0;
  double Y_beta = 0.0;
  double Y_delta = 0.0;
};

struct VehicleState {
  double r = 0.0;
  double beta = 0.0;
  double V = 0.0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

struct ControlInput {
  double a = 0.0;
  double delta = 0.0;
};

struct Limits {
  double V_min = 0.5;
  double V_max = 25.0;
  double a_max = 3.0;
  double delta_max = 0.67;
  double r_max = 0.7;
  double beta_max = 0.5;
};

struct LimitViolation {
  std::string field;
  double value = 0.0;
  double bound = 0.0;
};

inline constexpr int kStateDim = 6;
inline constexpr int kControlDim = 2;

// Throws InvalidArgument when a physical parameter is out of range.
void validate(const VehicleParams& p);
void validate(const Limits& lim);

DerivedParams derived_params(const VehicleParams& p);

// Single-track dynamics on any scalar type supporting +, -, *, /, sin and cos. The state is
// ordered [r, beta, V, x, y, theta] and the input [a, delta]. Callers are
// responsible for V > 0.
template <typename T>
std::array<T, kStateDim> dynamics_t(const std::array<T, kStateDim>& s,
                                    const T& a, const T& delta,
                                    const VehicleParams& p,
                                    const DerivedParams& dp) {
  using std::cos;
  using std::sin;
  const T& r = s[0];
  const T& beta = s[1];
  const T& V = s[2];
  const T& theta = s[5];
  const T inv_v = 1.0 / V;
  std::array<T, kStateDim> f;
  f[0] = (dp.N_r_tilde / p.I_z) * inv_v * r + (dp.N_beta / p.I_z) * beta +
         (dp.N_delta / p.I_z) * delta;
  f[1] = ((dp.Y_r_tilde / p.m) * inv_v * inv_v - 1.0) * r +
         (dp.Y_beta / p.m) * inv_v * beta + (dp.Y_delta / p.m) * inv_v * delta;
  f[2] = a;
  f[3] = V * cos(theta);
  f[4] = V * sin(theta);
  f[5] = r;
  return f;
}

// Throws SingularityError when s.V <= 0.
std::array<double, kStateDim> dynamics(const VehicleState& s,
                                       const ControlInput& u,
                                       const VehicleParams& p);

std::vector<LimitViolation> check_limits(const VehicleState& s,
                                         const ControlInput& u,
                                         const Limits& lim);

// Classical RK4 with one control per step. Returns controls.size() + 1
// states starting with s0. Throws SingularityError naming the step at which
// V left the positive half-line.
std::vector<VehicleState> integrate(const VehicleState& s0,
                                    const std::vector<ControlInput>& controls,
                                    double dt, const VehicleParams& p);

std::array<double, kStateDim> to_array(const VehicleState& s);
VehicleState from_array(const std::array<double, kStateDim>& a);

}  // namespace crossflow::vehicle
