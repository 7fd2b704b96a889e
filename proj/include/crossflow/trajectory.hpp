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

#include <string>
#include <vector>

#include "crossflow/vehicle_model.hpp"

namespace crossflow {

// Time-indexed states and inputs of one vehicle. `controls[i]` is the input
// applied at `times[i]`.
struct Trajectory {
  std::string vehicle_id;
  std::vector<double> times;
  std::vector<vehicle::VehicleState> states;
  std::vector<vehicle::ControlInput> controls;
  // Piecewise-constant inputs per collocation interval, when known.
  std::vector<double> interval_starts;
  std::vector<vehicle::ControlInput> interval_controls;
  // Samples per collocation interval (samples are t = 0 followed by `degree`
  // nodes per interval); 0 when the sampling has no collocation structure.
  int degree = 0;
};

// Throws InvalidArgument unless times strictly increase and the state and
// control sequences match them.
void check_trajectory(const Trajectory& t);

}  // namespace crossflow
