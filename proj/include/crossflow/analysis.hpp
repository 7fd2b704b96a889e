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

// Independent audit of solver output and the derived metrics.

#pragma once

#include <string>
#include <vector>

#include "crossflow/ip_solver.hpp"
#include "crossflow/scenario.hpp"
#include "crossflow/trajectory.hpp"

namespace crossflow::analysis {

struct AuditOptions {
  double sample_dt = 0.01;
  // Clearance thresholds are d_min - slack and d_rmin - slack.
  double clearance_slack = 0.02;
  double position_tol = 0.5;
  double heading_tol = 0.1;
  // Limit checks allow limit_tol * max(1, |bound|).
  double limit_tol = 1e-3;
};

enum class ViolationKind { pair_clearance, boundary_clearance, state_limit, input_limit, terminal_pose };

const char* to_string(ViolationKind k);

struct Violation {
  ViolationKind kind = ViolationKind::pair_clearance;
  double time = 0.0;
  std::string subject;
  double magnitude = 0.0;
  double threshold = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;
  double min_pair_clearance = 0.0;      // +inf with a single vehicle
  double min_boundary_clearance = 0.0;
  int samples = 0;

  bool pass() const { return violations.empty(); }
};

// State and input of a trajectory at time t. Collocation trajectories
// (degree > 0) use the interval polynomial through the interval start and its
// nodes; others interpolate linearly. Inputs are piecewise constant.
vehicle::VehicleState state_at(const Trajectory& traj, double t);
vehicle::ControlInput control_at(const Trajectory& traj, double t);

// Sample times 0, dt, 2 dt, ... plus the end time.
std::vector<double> sample_times(double end, double dt);

// Throws InvalidArgument when the trajectory ids differ from the scenario's,
// when the horizons differ or when sample_dt <= 0.
ValidationReport validate(const scenario::Scenario& scn, const std::vector<Trajectory>& trajs,
                          const AuditOptions& opts = {});

// Earliest sample time after which every vehicle stays within tolerance of
// its terminal pose. Throws NotArrivedError for a vehicle that never settles.
double crossing_time(const scenario::Scenario& scn, const std::vector<Trajectory>& trajs,
                     double position_tol = 0.5, double heading_tol = 0.1);

// Trapezoidal integral of m a v in kWh; `rectified` integrates max(0, a v).
double energy(const Trajectory& traj, double mass, bool rectified = false);

struct SpeedStats {
  double mean = 0.0;
  double stddev = 0.0;
};

// Time-weighted mean and population deviation over all vehicles.
SpeedStats speed_stats(const std::vector<Trajectory>& trajs);

struct Comfort {
  double max_accel = 0.0;
  double max_jerk = 0.0;
};

// Jerk by central differences of the acceleration samples (one-sided at the
// ends). Collocation trajectories use one sample per interval at its
// midpoint. Needs at least three samples.
Comfort comfort(const Trajectory& traj);

double path_length(const Trajectory& traj, double sample_dt = 0.01);

struct MetricsReport {
  double crossing_time = 0.0;
  double lower_bound = 0.0;
  double t_f = 0.0;
  std::vector<std::string> vehicle_ids;
  std::vector<double> energy_kwh;
  double total_energy_kwh = 0.0;
  double mean_speed = 0.0;
  double speed_stddev = 0.0;
  double travelled_distance = 0.0;
  double max_jerk = 0.0;
  double max_accel = 0.0;
  double min_pair_clearance = 0.0;
  double min_boundary_clearance = 0.0;
  // Share of the horizon with |a| >= 0.95 a_max.
  double bang_bang_fraction = 0.0;
};

MetricsReport metrics(const scenario::Scenario& scn, const std::vector<Trajectory>& trajs,
                      const ValidationReport& validation, const AuditOptions& opts = {},
                      bool rectified_energy = false);

// One "key<TAB>value" line per field.
std::string metrics_text(const MetricsReport& m);
// Summary lines, then one tab-separated line per violation.
std::string validation_text(const ValidationReport& r);
// t, vehicle_id, x, y, theta, v, a at every audit sample, for plotting.
std::string samples_table(const std::vector<Trajectory>& trajs, double sample_dt);

struct ParetoPoint {
  double gamma = 0.0;
  bool ok = false;
  std::string status;  // solver status, or the error that stopped the point
  double crossing_time = 0.0;
  double energy_kwh = 0.0;
  bool dominated = false;
};

// Independent solves per gamma on up to `threads` workers (0 reads
// CROSSFLOW_THREADS, falling back to the hardware concurrency). Results keep
// the input order. A point is ok when the solve converged and every vehicle
// arrived. Among ok points, a point is dominated when another is no worse in
// both time and energy and better in one, or is an earlier duplicate.
std::vector<ParetoPoint> pareto_sweep(const scenario::Scenario& scn,
                                      const std::vector<double>& gammas,
                                      const solver::SolverConfig& cfg = {}, int threads = 0);

void mark_dominated(std::vector<ParetoPoint>& points);

std::string pareto_table(const std::vector<ParetoPoint>& points);

}  // namespace crossflow::analysis
