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

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "crossflow/errors.hpp"
#include "crossflow/scenario.hpp"
#include "test_support.hpp"

namespace crossflow::scenario {
namespace {

const char* kOneVehicle = R"({
  "vehicles": [
    {"id": "a", "initial": {"x": -30, "y": -2.5, "theta": 0, "v": 10},
     "terminal": {"x": 30, "y": -2.5, "theta": 0}}
  ]
})";

const char* kTwoVehicles = R"({
  "weights": {"gamma": 0.5},
  "vehicles": [
    {"id": "a", "initial": {"x": -30, "y": -2.5, "theta": 0, "v": 10},
     "terminal": {"x": 30, "y": -2.5, "theta": 0}},
    {"id": "b", "initial": {"x": 2.5, "y": -25, "theta": 1.5707963267948966, "v": 12},
     "terminal": {"x": -30, "y": 2.5, "theta": 3.141592653589793}}
  ]
})";

template <typename E>
std::string error_path(const std::string& text) {
  try {
    load_scenario(text);
  } catch (const E& e) {
    return e.path();
  }
  return "<no error>";
}

TEST(LoadScenario, DefaultsFromMinimalDocument) {
  const Scenario s = load_scenario(kOneVehicle);
  ASSERT_EQ(s.vehicles.size(), 1u);
  EXPECT_EQ(s.d_min, 0.1);
  EXPECT_EQ(s.d_rmin, 0.1);
  EXPECT_EQ(s.limits.V_max, 25.0);
  EXPECT_EQ(s.limits.a_max, 3.0);
  EXPECT_EQ(s.limits.delta_max, 0.67);
  EXPECT_EQ(s.vehicles[0].initial_speed, 10.0);
  EXPECT_EQ(s.params.m, 1204.0);
  EXPECT_EQ(s.weights.gamma, 0.0);
  EXPECT_EQ(s.transcription.intervals, 15);
  EXPECT_EQ(s.transcription.degree, 5);
}

TEST(LoadScenario, GammaOverride) {
  std::string text = kTwoVehicles;
  EXPECT_EQ(load_scenario(text).weights.gamma, 0.5);
  text.replace(text.find("0.5"), 3, "0");
  EXPECT_EQ(load_scenario(text).weights.gamma, 0.0);
}

TEST(LoadScenario, OverlappingInitialPoses) {
  const std::string text = R"({"vehicles": [
    {"id": "a", "initial": {"x": -30, "y": -2.5, "theta": 0, "v": 10},
     "terminal": {"x": 30, "y": -2.5, "theta": 0}},
    {"id": "b", "initial": {"x": -30, "y": -2.5, "theta": 0, "v": 10},
     "terminal": {"x": 30, "y": 2.5, "theta": 0}}]})";
  try {
    load_scenario(text);
    FAIL() << "expected a semantic error";
  } catch (const SemanticError& e) {
    EXPECT_EQ(e.path(), "/vehicles/1/initial");
    EXPECT_NE(std::string(e.what()).find("initial footprints overlap"), std::string::npos);
  }
}

TEST(LoadScenario, ErrorKindsAndPaths) {
  EXPECT_THROW(load_scenario("{\"vehicles\": ["), ParseError);
  EXPECT_EQ(error_path<SchemaError>("{}"), "/vehicles");
  EXPECT_EQ(error_path<SchemaError>(R"({"vehicles": [], "colour": 1})"), "/colour");
  EXPECT_EQ(error_path<SchemaError>(R"({"limits": {"a_max": "3"}, "vehicles": []})"),
            "/limits/a_max");
  EXPECT_EQ(error_path<SemanticError>(R"({"vehicles": []})"), "/vehicles");
  EXPECT_EQ(error_path<SemanticError>(R"({"vehicles": [
    {"id": "a", "initial": {"x": 20, "y": 20, "theta": 0, "v": 10},
     "terminal": {"x": 30, "y": -2.5, "theta": 0}}]})"),
            "/vehicles/0/initial");
  EXPECT_EQ(error_path<SemanticError>(R"({"weights": {"Q": [1,0,0, 0,-1,0, 0,0,1]}, "vehicles": [
    {"id": "a", "initial": {"x": -30, "y": -2.5, "theta": 0, "v": 10},
     "terminal": {"x": 30, "y": -2.5, "theta": 0}}]})"),
            "/weights/Q");
}

TEST(LoadScenario, ParseErrorReportsLocation) {
  try {
    load_scenario("{\n  \"vehicles\": [,]\n}");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.where().rfind("line 2", 0), 0u) << e.where();
  }
}

TEST(Serialize, RoundTrip) {
  const Scenario a = load_scenario(kTwoVehicles);
  const Scenario b = load_scenario(serialize(a));
  EXPECT_EQ(serialize(a), serialize(b));
  ASSERT_EQ(b.vehicles.size(), 2u);
  EXPECT_EQ(b.vehicles[1].initial_speed, 12.0);
  EXPECT_EQ(b.vehicles[1].terminal_pose.theta, a.vehicles[1].terminal_pose.theta);
  EXPECT_EQ(b.weights.Q, a.weights.Q);
  EXPECT_EQ(b.weights.gamma, 0.5);
}

TEST(Serialize, GeneratedRoundTrip) {
  const Scenario a = generate_scenario(6, 3);
  const Scenario b = load_scenario(serialize(a));
  EXPECT_EQ(serialize(a), serialize(b));
  ASSERT_TRUE(b.generator.has_value());
  EXPECT_EQ(b.generator->seed, 3u);
}

TEST(RoadBoundaries, FirstQuadrantBlock) {
  const auto blocks = build_road_boundaries({5.0, 40.0});
  const auto& v = blocks[0].vertices();
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& p : v) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  EXPECT_DOUBLE_EQ(xmin, 5.0);
  EXPECT_DOUBLE_EQ(xmax, 40.0);
  EXPECT_DOUBLE_EQ(ymin, 5.0);
  EXPECT_DOUBLE_EQ(ymax, 40.0);
}

TEST(RoadBoundaries, Membership) {
  const auto blocks = build_road_boundaries({5.0, 40.0});
  auto count = [&](geometry::Vec2 p) {
    int n = 0;
    for (const auto& b : blocks) n += b.contains(p);
    return n;
  };
  EXPECT_EQ(count({0, 0}), 0);
  EXPECT_EQ(count({6, 6}), 1);
  EXPECT_EQ(count({6, 0}), 0);
}

TEST(RoadBoundaries, DisjointAndQuarterTurnSymmetric) {
  const auto blocks = build_road_boundaries({5.0, 40.0});
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) EXPECT_GT(geometry::primal_distance(blocks[i], blocks[j]), 0.0);
  }
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-45, 45);
  for (int k = 0; k < 1000; ++k) {
    const geometry::Vec2 p(u(rng), u(rng));
    const geometry::Vec2 rotated(-p.y(), p.x());
    int a = 0, b = 0;
    for (const auto& blk : blocks) {
      a += blk.contains(p);
      b += blk.contains(rotated);
    }
    EXPECT_EQ(a, b);
  }
}

TEST(MinTravelTime, ClosedForms) {
  EXPECT_NEAR(min_travel_time(70, 10, 3, 25), (-10 + std::sqrt(100 + 2 * 3 * 70)) / 3, 1e-12);
  EXPECT_DOUBLE_EQ(min_travel_time(50, 25, 3, 25), 2.0);
  EXPECT_NEAR(min_travel_time(100, 10, 2, 12), 1.0 + 89.0 / 12.0, 1e-12);
  EXPECT_THROW(min_travel_time(10, 0, 3, 25), InvalidArgument);
}

TEST(LowerBound, ScenarioOneFile) {
  const Scenario s = load_scenario_file(testing::source_path("scenarios/scenario_one.json"));
  EXPECT_NEAR(theoretical_lower_bound(s), 4.268, 5e-4);
}

TEST(LowerBound, AllCruise) {
  Scenario s = load_scenario(kOneVehicle);
  s.vehicles[0].initial_speed = s.limits.V_max;
  EXPECT_DOUBLE_EQ(theoretical_lower_bound(s), 60.0 / 25.0);
}

TEST(LowerBound, Monotone) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double d = 5 + 100 * u(rng);
    const double v0 = 1 + 20 * u(rng);
    const double a = 0.5 + 3 * u(rng);
    const double vmax = v0 + 10 * u(rng);
    const double t = min_travel_time(d, v0, a, vmax);
    EXPECT_GE(min_travel_time(d * 1.1, v0, a, vmax), t);
    EXPECT_GE(min_travel_time(d, v0, a * 0.9, vmax), t);
    EXPECT_GE(min_travel_time(d, v0, a, std::max(v0, vmax * 0.9)), t - 1e-12);
  }
}

TEST(Generator, DeterministicAndNested) {
  EXPECT_EQ(serialize(generate_scenario(5, 7)), serialize(generate_scenario(5, 7)));
  const Scenario small = generate_scenario(3, 11);
  const Scenario large = generate_scenario(4, 11);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(small.vehicles[k].initial_pose.x, large.vehicles[k].initial_pose.x);
    EXPECT_EQ(small.vehicles[k].terminal_pose.y, large.vehicles[k].terminal_pose.y);
  }
}

TEST(Generator, LeftTurnAndInitialSpeeds) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Scenario s = generate_scenario(2, seed);
    const double turn = s.vehicles[1].terminal_pose.theta - s.vehicles[1].initial_pose.theta;
    EXPECT_NEAR(turn, std::numbers::pi / 2, 1e-12);
    for (const auto& v : s.vehicles) EXPECT_EQ(v.initial_speed, 10.0);
  }
}

TEST(Generator, LargeFleetsLoad) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    EXPECT_NO_THROW(load_scenario(serialize(generate_scenario(12, seed)))) << "seed " << seed;
  }
  EXPECT_NO_THROW(generate_scenario(generator_capacity(), 1));
}

TEST(Generator, RejectsCountsOutsideCapacity) {
  EXPECT_THROW(generate_scenario(0, 1), InvalidArgument);
  EXPECT_THROW(generate_scenario(generator_capacity() + 1, 1), InvalidArgument);
}

}  // namespace
}  // namespace crossflow::scenario
