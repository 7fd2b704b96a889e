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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "crossflow/geometry.hpp"
#include "crossflow/vehicle_model.hpp"

namespace crossflow::scenario {

// Plus-shaped four-arm intersection: the corner blocks reach from
// road_half_width to arm_extent in each quadrant.
struct IntersectionLayout {
  double road_half_width = 5.0;
  double arm_extent = 40.0;
  static constexpr int n_boundaries = 4;
};

struct VehicleSpec {
  std::string id;
  geometry::Pose initial_pose;
  double initial_speed = 10.0;
  geometry::Pose terminal_pose;
};

struct ObjectiveWeights {
  double alpha = 1.0;
  Eigen::Matrix3d Q = Eigen::Vector3d(0.01, 0.01, 0.001).asDiagonal();
  double gamma = 0.0;
};

enum class TerminalMode { hard, soft };

struct TranscriptionConfig {
  int intervals = 15;
  int degree = 5;
  // hard: terminal (x, y, theta) are equality constraints in addition to the
  // tracking term; soft: only the tracking term.
  TerminalMode terminal = TerminalMode::hard;
  // Drop vehicle pairs whose inflated straight-line corridors stay 2 m apart.
  bool prune_pairs = false;
  // Require each point's separating direction to hold at the next point too.
  bool separation_links = true;
};

// Generator settings recorded in generated scenarios.
struct GeneratorInfo {
  std::uint64_t seed = 0;
  int n_vehicles = 0;
};

struct Scenario {
  IntersectionLayout layout;
  std::vector<VehicleSpec> vehicles;
  vehicle::VehicleParams params;
  vehicle::Limits limits;
  double d_min = 0.1;
  double d_rmin = 0.1;
  ObjectiveWeights weights;
  TranscriptionConfig transcription;
  std::optional<GeneratorInfo> generator;
};

// Parses and validates a scenario document. Throws ParseError, SchemaError
// or SemanticError; all messages carry the offending location or path.
Scenario load_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);

// Checks every semantic invariant; load_scenario calls this.
void validate(const Scenario& scn);

// Canonical JSON with every field spelled out.
std::string serialize(const Scenario& scn);

// Quadrants in order (+,+), (-,+), (-,-), (+,-).
std::array<geometry::Polytope, 4> build_road_boundaries(const IntersectionLayout& layout);

// Time to cover `distance` from v0 accelerating at a_max, capped at v_max.
double min_travel_time(double distance, double v0, double a_max, double v_max);

// Maximum over vehicles of min_travel_time for the straight-line
// displacement between initial and terminal positions.
double theoretical_lower_bound(const Scenario& scn);

// Footprint of a vehicle at a pose.
geometry::Polytope footprint(const Scenario& scn, const geometry::Pose& pose);

// Seeded random fleet of right-hand-traffic vehicles entering at 10 m/s.
// Vehicles are drawn in order from one stream, so the scenarios for n and
// n + 1 with the same seed share their first n vehicles. Vehicle 0 drives
// straight over the maximum displacement of 70 m and vehicle 1 turns left.
int generator_capacity();
Scenario generate_scenario(int n_vehicles, std::uint64_t seed);

}  // namespace crossflow::scenario
