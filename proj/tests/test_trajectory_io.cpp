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
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "crossflow/errors.hpp"
#include "crossflow/trajectory_io.hpp"

namespace crossflow {
namespace {

const char* kHeader = "t,vehicle_id,x,y,theta,v,beta,r,a,delta\n";

// Samples laid out as t = 0 followed by `degree` nodes per interval.
Trajectory random_trajectory(std::mt19937_64& rng, const std::string& id, int intervals,
                             int degree) {
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  Trajectory t;
  t.vehicle_id = id;
  t.degree = degree;
  const double h = 0.37;
  t.times.push_back(0.0);
  for (int k = 0; k < intervals; ++k) {
    t.interval_starts.push_back(k * h);
    for (int j = 1; j <= degree; ++j) t.times.push_back(k * h + h * j / degree);
  }
  for (std::size_t i = 0; i < t.times.size(); ++i) {
    t.states.push_back({u(rng) / 100, u(rng) / 100, 10 + u(rng) / 10, u(rng), u(rng), u(rng) / 10});
  }
  for (int k = 0; k < intervals; ++k) t.interval_controls.push_back({u(rng) / 20, u(rng) / 100});
  t.controls.push_back(t.interval_controls.front());
  for (int k = 0; k < intervals; ++k) {
    for (int j = 0; j < degree; ++j) t.controls.push_back(t.interval_controls[k]);
  }
  return t;
}

void expect_close(double a, double b) {
  // Nine significant digits.
  EXPECT_NEAR(a, b, 5e-9 * std::max(std::abs(a), std::abs(b)) + 1e-300) << a << " vs " << b;
}

TEST(TrajectoryCsv, RoundTrip) {
  std::mt19937_64 rng(4);
  const std::vector<Trajectory> in{random_trajectory(rng, "cav0", 5, 3),
                                   random_trajectory(rng, "cav1", 5, 3)};
  const std::string text = write_trajectories_csv(in);
  EXPECT_EQ(text.rfind("# degree=3\n", 0), 0u);
  const auto out = read_trajectories_csv(text);
  ASSERT_EQ(out.size(), 2u);
  for (std::size_t v = 0; v < 2; ++v) {
    EXPECT_EQ(out[v].vehicle_id, in[v].vehicle_id);
    EXPECT_EQ(out[v].degree, 3);
    ASSERT_EQ(out[v].times.size(), in[v].times.size());
    for (std::size_t i = 0; i < in[v].times.size(); ++i) {
      expect_close(out[v].times[i], in[v].times[i]);
      const auto a = vehicle::to_array(out[v].states[i]);
      const auto b = vehicle::to_array(in[v].states[i]);
      for (int c = 0; c < vehicle::kStateDim; ++c) expect_close(a[c], b[c]);
      expect_close(out[v].controls[i].a, in[v].controls[i].a);
      expect_close(out[v].controls[i].delta, in[v].controls[i].delta);
    }
    ASSERT_EQ(out[v].interval_controls.size(), in[v].interval_controls.size());
    for (std::size_t k = 0; k < in[v].interval_controls.size(); ++k) {
      expect_close(out[v].interval_starts[k], in[v].interval_starts[k]);
      expect_close(out[v].interval_controls[k].a, in[v].interval_controls[k].a);
    }
  }
  // Writing what was read reproduces the bytes.
  EXPECT_EQ(write_trajectories_csv(out), text);
}

TEST(TrajectoryCsv, PlainSamplesWithoutStructure) {
  const std::string text = std::string(kHeader) +
                           "0,a,1,2,0,10,0,0,0.5,0\n"
                           "0.5,a,6,2,0,10.25,0,0,0.5,0\n"
                           "0,b,-1,2,3.14159265,10,0,0,0,0\n";
  const auto out = read_trajectories_csv(text);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].vehicle_id, "a");
  EXPECT_EQ(out[0].times.size(), 2u);
  EXPECT_EQ(out[0].degree, 0);
  EXPECT_TRUE(out[0].interval_controls.empty());
  EXPECT_EQ(out[0].states[1].V, 10.25);
  EXPECT_EQ(out[1].states[0].theta, 3.14159265);
}

TEST(TrajectoryCsv, NineSignificantDigits) {
  Trajectory t;
  t.vehicle_id = "a";
  t.times = {0.0};
  vehicle::VehicleState s;
  s.x = 1.0 / 3.0;
  t.states = {s};
  t.controls = {{}};
  const std::string text = write_trajectories_csv({t});
  EXPECT_NE(text.find(",0.333333333,"), std::string::npos) << text;
}

std::string parse_error_where(const std::string& text) {
  try {
    read_trajectories_csv(text);
  } catch (const ParseError& e) {
    return e.where();
  }
  return "<no error>";
}

TEST(TrajectoryCsv, SchemaErrors) {
  EXPECT_EQ(parse_error_where("t,x\n0,1\n"), "line 1");
  EXPECT_EQ(parse_error_where(std::string(kHeader) + "0,a,1,2,0,10,0,0,0\n"), "line 2");
  EXPECT_EQ(parse_error_where(std::string(kHeader) + "0,a,1,2,0,ten,0,0,0,0\n"), "line 2");
  EXPECT_EQ(parse_error_where(std::string(kHeader) + "0,a,1,2,0,nan,0,0,0,0\n"), "line 2");
  EXPECT_EQ(parse_error_where(std::string(kHeader) + "0,,1,2,0,10,0,0,0,0\n"), "line 2");
  EXPECT_EQ(parse_error_where(std::string(kHeader) + "1,a,1,2,0,10,0,0,0,0\n0.5,a,1,2,0,10,0,0,0,0\n"),
            "line 3");
  EXPECT_EQ(parse_error_where(kHeader), "line 2");
  EXPECT_EQ(parse_error_where(""), "line 1");
}

TEST(TrajectoryCsv, WriterRejectsInconsistentTrajectories) {
  Trajectory t;
  t.vehicle_id = "a";
  t.times = {0.0, 0.0};
  t.states.resize(2);
  t.controls.resize(2);
  EXPECT_THROW(write_trajectories_csv({t}), InvalidArgument);
  t.times = {0.0, 1.0};
  t.controls.resize(1);
  EXPECT_THROW(write_trajectories_csv({t}), InvalidArgument);
}

TEST(TrajectoryCsv, MissingFile) {
  EXPECT_THROW(read_trajectories_file("/nonexistent/trajectories.csv"), InvalidArgument);
}

}  // namespace
}  // namespace crossflow
