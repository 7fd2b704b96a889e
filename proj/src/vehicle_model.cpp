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

#include "crossflow/vehicle_model.hpp"

#include <cmath>
#include <string>

#include "crossflow/errors.hpp"

namespace crossflow::vehicle {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(name) + " must be positive and finite, got " +
                          std::to_string(v));
  }
}

void check(std::vector<LimitViolation>& out, const char* field, double value, double lo,
           double hi) {
  if (value < lo) out.push_back({field, value, lo});
  if (value > hi) out.push_back({field, value, hi});
}

}  // namespace

void validate(const VehicleParams& p) {
  require_positive(p.m, "m");
  require_positive(p.I_z, "I_z");
  require_positive(p.l_f, "l_f");
  require_positive(p.l_r, "l_r");
  require_positive(p.body_length, "body_length");
  require_positive(p.body_width, "body_width");
  if (!std::isfinite(p.C_F) || !std::isfinite(p.C_R)) {
    throw InvalidArgument("cornering stiffnesses must be finite");
  }
}

void validate(const Limits& lim) {
  require_positive(lim.V_min, "V_min");
  require_positive(lim.V_max, "V_max");
  require_positive(lim.a_max, "a_max");
  require_positive(lim.delta_max, "delta_max");
  require_positive(lim.r_max, "r_max");
  require_positive(lim.beta_max, "beta_max");
  if (!(lim.V_min < lim.V_max)) throw InvalidArgument("V_min must be below V_max");
}

DerivedParams derived_params(const VehicleParams& p) {
  DerivedParams d;
  d.N_r_tilde = p.l_f * p.l_f * p.C_F + p.l_r * p.l_r * p.C_R;
  d.N_beta = p.l_f * p.C_F - p.l_r * p.C_R;
  d.N_delta = -p.l_f * p.C_F;
  d.Y_r_tilde = p.l_f * p.C_F - p.l_r * p.C_R;
  d.Y_beta = p.C_F + p.C_R;
  d.Y_delta = -p.C_F;
  return d;
}

std::array<double, kStateDim> to_array(const VehicleState& s) {
  return {s.r, s.beta, s.V, s.x, s.y, s.theta};
}

VehicleState from_array(const std::array<double, kStateDim>& a) {
  return {a[0], a[1], a[2], a[3], a[4], a[5]};
}

std::array<double, kStateDim> dynamics(const VehicleState& s, const ControlInput& u,
                                       const VehicleParams& p) {
  if (!(s.V > 0.0)) {
    throw SingularityError("bicycle model is singular at V = " + std::to_string(s.V));
  }
  return dynamics_t<double>(to_array(s), u.a, u.delta, p, derived_params(p));
}

std::vector<LimitViolation> check_limits(const VehicleState& s, const ControlInput& u,
                                         const Limits& lim) {
  std::vector<LimitViolation> out;
  check(out, "V", s.V, lim.V_min, lim.V_max);
  check(out, "a", u.a, -lim.a_max, lim.a_max);
  check(out, "delta", u.delta, -lim.delta_max, lim.delta_max);
  check(out, "r", s.r, -lim.r_max, lim.r_max);
  check(out, "beta", s.beta, -lim.beta_max, lim.beta_max);
  return out;
}

std::vector<VehicleState> integrate(const VehicleState& s0,
                                    const std::vector<ControlInput>& controls, double dt,
                                    const VehicleParams& p) {
  if (!(dt > 0.0)) throw InvalidArgument("integration step must be positive");
  const DerivedParams dp = derived_params(p);
  using S = std::array<double, kStateDim>;
  auto axpy = [](const S& x, double h, const S& k) {
    S r;
    for (int i = 0; i < kStateDim; ++i) r[i] = x[i] + h * k[i];
    return r;
  };
  std::vector<VehicleState> out;
  out.reserve(controls.size() + 1);
  out.push_back(s0);
  S x = to_array(s0);
  for (size_t step = 0; step < controls.size(); ++step) {
    const ControlInput& u = controls[step];
    auto f = [&](const S& s) {
      if (!(s[2] > 0.0)) {
        throw SingularityError("speed left the positive range during step " +
                                   std::to_string(step),
                               static_cast<long>(step));
      }
      return dynamics_t<double>(s, u.a, u.delta, p, dp);
    };
    const S k1 = f(x);
    const S k2 = f(axpy(x, dt / 2, k1));
    const S k3 = f(axpy(x, dt / 2, k2));
    const S k4 = f(axpy(x, dt, k3));
    for (int i = 0; i < kStateDim; ++i) {
      x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if (!(x[2] > 0.0)) {
      throw SingularityError("speed left the positive range during step " + std::to_string(step),
                             static_cast<long>(step));
    }
    out.push_back(from_array(x));
  }
  return out;
}

}  // namespace crossflow::vehicle
