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

// Trajectory files: comma-separated, header
//   t,vehicle_id,x,y,theta,v,beta,r,a,delta
// with 9 significant digits. Collocation output starts with a comment line
// "# degree=<d>" so the interval structure survives a round trip.

#pragma once

#include <string>
#include <vector>

#include "crossflow/trajectory.hpp"

namespace crossflow {

std::string write_trajectories_csv(const std::vector<Trajectory>& trajs);

// Vehicles appear in order of first occurrence. Throws ParseError with the
// line number on malformed input.
std::vector<Trajectory> read_trajectories_csv(const std::string& text);
std::vector<Trajectory> read_trajectories_file(const std::string& path);

}  // namespace crossflow
