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

#include "crossflow/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <set>
#include <thread>

#include "crossflow/collocation.hpp"
#include "crossflow/errors.hpp"
#include "crossflow/ocp.hpp"

namespace crossflow::analysis {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHorizonTol = 1e-6;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

bool has_structure(const Trajectory& t) {
  return t.degree > 0 && !t.interval_starts.empty() &&
         t.times.size() == 1 + t.degree * t.interval_starts.size();
}

std::array<double, vehicle::kStateDim> lerp(const vehicle::VehicleState& a,
                                            const vehicle::VehicleState& b, double f) {
  const auto x = vehicle::to_array(a);
  const auto y = vehicle::to_array(b);
  std::array<double, vehicle::kStateDim> r;
  for (int i = 0; i < vehicle::kStateDim; ++i) r[i] = x[i] + f * (y[i] - x[i]);
  return r;
}

// Trajectories reordered to match the scenario's vehicle order.
std::vector<const Trajectory*> match_vehicles(const scenario::Scenario& scn,
                                              const std::vector<Trajectory>& trajs) {
  std::map<std::string, const Trajectory*> by_id;
  for (const auto& t : trajs) {
    if (!by_id.emplace(t.vehicle_id, &t).second) {
      throw InvalidArgument("duplicate trajectory for vehicle '" + t.vehicle_id + "'");
    }
  }
  if (by_id.size() != scn.vehicles.size()) {
    throw InvalidArgument("trajectory vehicle ids do not match the scenario: " +
                          std::to_string(by_id.size()) + " trajectories for " +
                          std::to_string(scn.vehicles.size()) + " vehicles");
  }
  std::vector<const Trajectory*> out;
  for (const auto& v : scn.vehicles) {
    auto it = by_id.find(v.id);
    if (it == by_id.end()) {
      throw InvalidArgument("no trajectory for scenario vehicle '" + v.id + "'");
    }
    check_trajectory(*it->second);
    out.push_back(it->second);
  }
  return out;
}

double common_horizon(const std::vector<const Trajectory*>& trajs) {
  const double end = trajs.front()->times.back();
  for (const Trajectory* t : trajs) {
    if (std::abs(t->times.front()) > kHorizonTol) {
      throw InvalidArgument("trajectory '" + t->vehicle_id + "' does not start at t = 0");
    }
    if (std::abs(t->times.back() - end) > kHorizonTol) {
      throw InvalidArgument("trajectory '" + t->vehicle_id + "' ends at " + fmt(t->times.back()) +
                            " s, expected " + fmt(end) + " s");
    }
  }
  return end;
}

double heading_error(double a, double b) { return std::abs(std::remainder(a - b, 2.0 * M_PI)); }

bool arrived(const vehicle::VehicleState& s, const geometry::Pose& target, double pos_tol,
             double heading_tol) {
  return std::hypot(s.x - target.x, s.y - target.y) <= pos_tol &&
         heading_error(s.theta, target.theta) <= heading_tol;
}

}  // namespace

const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::pair_clearance: return "vehicle-pair-clearance";
    case ViolationKind::boundary_clearance: return "boundary-clearance";
    case ViolationKind::state_limit: return "state-limit";
    case ViolationKind::input_limit: return "input-limit";
    case ViolationKind::terminal_pose: return "terminal-pose-error";
  }
  return "unknown";
}

vehicle::VehicleState state_at(const Trajectory& traj, double t) {
  const auto& ts = traj.times;
  if (t <= ts.front()) return traj.states.front();
  if (t >= ts.back()) return traj.states.back();
  if (has_structure(traj)) {
    const int d = traj.degree;
    const auto& starts = traj.interval_starts;
    const int k = std::max<int>(
        0, static_cast<int>(std::upper_bound(starts.begin(), starts.end(), t) - starts.begin()) - 1);
    const int first = k * d;
    const double t0 = ts[first];
    const double span = ts[first + d] - t0;
    std::vector<double> nodes(d + 1);
    for (int j = 0; j <= d; ++j) nodes[j] = (ts[first + j] - t0) / span;
    std::array<double, vehicle::kStateDim> out;
    std::vector<double> values(d + 1);
    for (int c = 0; c < vehicle::kStateDim; ++c) {
      for (int j = 0; j <= d; ++j) values[j] = vehicle::to_array(traj.states[first + j])[c];
      out[c] = ocp::lagrange_interpolate(nodes, values, (t - t0) / span);
    }
    return vehicle::from_array(out);
  }
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - ts.begin());
  const double f = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
  return vehicle::from_array(lerp(traj.states[i - 1], traj.states[i], f));
}

vehicle::ControlInput control_at(const Trajectory& traj, double t) {
  if (!traj.interval_controls.empty()) {
    const auto& starts = traj.interval_starts;
    const auto it = std::upper_bound(starts.begin(), starts.end(), t);
    const std::size_t k = it == starts.begin() ? 0 : static_cast<std::size_t>(it - starts.begin()) - 1;
    return traj.interval_controls[k];
  }
  const auto& ts = traj.times;
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t i = it == ts.begin() ? 0 : static_cast<std::size_t>(it - ts.begin()) - 1;
  return traj.controls[i];
}

std::vector<double> sample_times(double end, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("sample_dt must be positive");
  std::vector<double> out;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t >= end - 1e-12) break;
    out.push_back(t);
  }
  out.push_back(end);
  return out;
}

ValidationReport validate(const scenario::Scenario& scn, const std::vector<Trajectory>& trajs,
                          const AuditOptions& opts) {
  if (!(opts.sample_dt > 0.0)) throw InvalidArgument("sample_dt must be positive");
  const auto matched = match_vehicles(scn, trajs);
  const double end = common_horizon(matched);
  const auto times = sample_times(end, opts.sample_dt);
  const auto boundaries = scenario::build_road_boundaries(scn.layout);
  const int nv = static_cast<int>(matched.size());

  auto widen = [&](double bound) { return opts.limit_tol * std::max(1.0, std::abs(bound)); };
  vehicle::Limits loose = scn.limits;
  loose.V_min -= widen(loose.V_min);
  loose.V_max += widen(loose.V_max);
  loose.a_max += widen(loose.a_max);
  loose.delta_max += widen(loose.delta_max);
  loose.r_max += widen(loose.r_max);
  loose.beta_max += widen(loose.beta_max);
  auto nominal = [&](const std::string& field, double value) {
    const auto& l = scn.limits;
    if (field == "V") return value < l.V_min ? l.V_min : l.V_max;
    if (field == "a") return l.a_max;
    if (field == "delta") return l.delta_max;
    if (field == "r") return l.r_max;
    return l.beta_max;
  };

  ValidationReport rep;
  rep.samples = static_cast<int>(times.size());
  rep.min_pair_clearance = kInf;
  rep.min_boundary_clearance = kInf;
  // Worst violation per (kind, subject), in order of first occurrence.
  std::vector<Violation> worst;
  std::map<std::pair<int, std::string>, std::size_t> slot;
  auto record = [&](ViolationKind kind, double t, const std::string& subject, double magnitude,
                    double threshold, bool lower_is_worse) {
    const auto key = std::make_pair(static_cast<int>(kind), subject);
    auto it = slot.find(key);
    if (it == slot.end()) {
      slot.emplace(key, worst.size());
      worst.push_back({kind, t, subject, magnitude, threshold});
      return;
    }
    Violation& w = worst[it->second];
    const bool worse = lower_is_worse ? magnitude < w.magnitude
                                      : std::abs(magnitude) - std::abs(w.threshold) >
                                            std::abs(w.magnitude) - std::abs(w.threshold);
    if (worse) w = {kind, t, subject, magnitude, threshold};
  };

  const double pair_threshold = scn.d_min - opts.clearance_slack;
  const double boundary_threshold = scn.d_rmin - opts.clearance_slack;
  std::vector<geometry::Polytope> shapes;
  for (double t : times) {
    shapes.clear();
    for (int v = 0; v < nv; ++v) {
      const vehicle::VehicleState s = state_at(*matched[v], t);
      const vehicle::ControlInput u = control_at(*matched[v], t);
      shapes.push_back(scenario::footprint(scn, {s.x, s.y, s.theta}));
      for (const auto& lv : vehicle::check_limits(s, u, loose)) {
        const bool input = lv.field == "a" || lv.field == "delta";
        record(input ? ViolationKind::input_limit : ViolationKind::state_limit, t,
               matched[v]->vehicle_id + " " + lv.field, lv.value, nominal(lv.field, lv.value),
               false);
      }
    }
    for (int i = 0; i < nv; ++i) {
      for (int j = i + 1; j < nv; ++j) {
        const double d = geometry::primal_distance(shapes[i], shapes[j]);
        rep.min_pair_clearance = std::min(rep.min_pair_clearance, d);
        if (d < pair_threshold) {
          record(ViolationKind::pair_clearance, t,
                 matched[i]->vehicle_id + "/" + matched[j]->vehicle_id, d, pair_threshold, true);
        }
      }
      for (int r = 0; r < static_cast<int>(boundaries.size()); ++r) {
        const double d = geometry::primal_distance(shapes[i], boundaries[r]);
        rep.min_boundary_clearance = std::min(rep.min_boundary_clearance, d);
        if (d < boundary_threshold) {
          record(ViolationKind::boundary_clearance, t,
                 matched[i]->vehicle_id + "/boundary" + std::to_string(r), d, boundary_threshold,
                 true);
        }
      }
    }
  }
  for (int v = 0; v < nv; ++v) {
    const auto& s = matched[v]->states.back();
    const auto& target = scn.vehicles[v].terminal_pose;
    const double pos_err = std::hypot(s.x - target.x, s.y - target.y);
    const double head_err = heading_error(s.theta, target.theta);
    if (pos_err > opts.position_tol) {
      record(ViolationKind::terminal_pose, end, matched[v]->vehicle_id + " position", pos_err,
             opts.position_tol, false);
    }
    if (head_err > opts.heading_tol) {
      record(ViolationKind::terminal_pose, end, matched[v]->vehicle_id + " heading", head_err,
             opts.heading_tol, false);
    }
  }
  rep.violations = std::move(worst);
  return rep;
}

double crossing_time(const scenario::Scenario& scn, const std::vector<Trajectory>& trajs,
                     double position_tol, double heading_tol) {
  const auto matched = match_vehicles(scn, trajs);
  double out = 0.0;
  for (std::size_t v = 0; v < matched.size(); ++v) {
    const Trajectory& t = *matched[v];
    const auto& target = scn.vehicles[v].terminal_pose;
    std::size_t i = t.times.size();
    while (i > 0 && arrived(t.states[i - 1], target, position_tol, heading_tol)) --i;
    if (i == t.times.size()) throw NotArrivedError(t.vehicle_id);
    out = std::max(out, t.times[i]);
  }
  return out;
}

double energy(const Trajectory& traj, double mass, bool rectified) {
  double joules = 0.0;
  auto power = [&](std::size_t i) {
    const double p = traj.controls[i].a * traj.states[i].V;
    return rectified ? std::max(0.0, p) : p;
  };
  for (std::size_t i = 1; i < traj.times.size(); ++i) {
    joules += 0.5 * (power(i - 1) + power(i)) * (traj.times[i] - traj.times[i - 1]);
  }
  return mass * joules / 3.6e6;
}

SpeedStats speed_stats(const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) throw InvalidArgument("speed statistics need at least one trajectory");
  double weight = 0.0;
  double sum = 0.0;
  std::size_t count = 0;
  double plain = 0.0;
  for (const auto& t : trajs) {
    for (std::size_t i = 0; i < t.times.size(); ++i) {
      plain += t.states[i].V;
      ++count;
      if (i == 0) continue;
      const double dt = t.times[i] - t.times[i - 1];
      sum += 0.5 * (t.states[i - 1].V + t.states[i].V) * dt;
      weight += dt;
    }
  }
  SpeedStats st;
  if (weight <= 0.0) {
    st.mean = plain / static_cast<double>(count);
    double var = 0.0;
    for (const auto& t : trajs) {
      for (const auto& s : t.states) var += (s.V - st.mean) * (s.V - st.mean);
    }
    st.stddev = std::sqrt(var / static_cast<double>(count));
    return st;
  }
  st.mean = sum / weight;
  double var = 0.0;
  for (const auto& t : trajs) {
    for (std::size_t i = 1; i < t.times.size(); ++i) {
      const double dt = t.times[i] - t.times[i - 1];
      const double e0 = t.states[i - 1].V - st.mean;
      const double e1 = t.states[i].V - st.mean;
      var += 0.5 * (e0 * e0 + e1 * e1) * dt;
    }
  }
  st.stddev = std::sqrt(std::max(0.0, var / weight));
  return st;
}

Comfort comfort(const Trajectory& traj) {
  std::vector<double> ts;
  std::vector<double> as;
  if (traj.interval_controls.size() >= 3) {
    const double end = traj.times.back();
    for (std::size_t k = 0; k < traj.interval_starts.size(); ++k) {
      const double t1 = k + 1 < traj.interval_starts.size() ? traj.interval_starts[k + 1] : end;
      ts.push_back(0.5 * (traj.interval_starts[k] + t1));
      as.push_back(traj.interval_controls[k].a);
    }
  } else {
    ts = traj.times;
    for (const auto& u : traj.controls) as.push_back(u.a);
  }
  if (ts.size() < 3) throw InvalidArgument("comfort metrics need at least three samples");
  Comfort c;
  const std::size_t n = ts.size();
  for (std::size_t i = 0; i < n; ++i) {
    c.max_accel = std::max(c.max_accel, std::abs(as[i]));
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
    c.max_jerk = std::max(c.max_jerk, std::abs((as[hi] - as[lo]) / (ts[hi] - ts[lo])));
  }
  return c;
}

double path_length(const Trajectory& traj, double sample_dt) {
  const auto times = sample_times(traj.times.back(), sample_dt);
  double len = 0.0;
  vehicle::VehicleState prev = state_at(traj, times.front());
  for (std::size_t i = 1; i < times.size(); ++i) {
    const vehicle::VehicleState s = state_at(traj, times[i]);
    len += std::hypot(s.x - prev.x, s.y - prev.y);
    prev = s;
  }
  return len;
}

MetricsReport metrics(const scenario::Scenario& scn, const std::vector<Trajectory>& trajs,
                      const ValidationReport& validation, const AuditOptions& opts,
                      bool rectified_energy) {
  const auto matched = match_vehicles(scn, trajs);
  MetricsReport m;
  m.lower_bound = scenario::theoretical_lower_bound(scn);
  m.t_f = common_horizon(matched);
  try {
    m.crossing_time = crossing_time(scn, trajs, opts.position_tol, opts.heading_tol);
  } catch (const NotArrivedError&) {
    m.crossing_time = std::numeric_limits<double>::quiet_NaN();
  }
  std::vector<Trajectory> ordered;
  const auto times = sample_times(m.t_f, opts.sample_dt);
  long saturated = 0;
  for (const Trajectory* t : matched) {
    ordered.push_back(*t);
    m.vehicle_ids.push_back(t->vehicle_id);
    m.energy_kwh.push_back(energy(*t, scn.params.m, rectified_energy));
    m.total_energy_kwh += m.energy_kwh.back();
    m.travelled_distance += path_length(*t, opts.sample_dt);
    if (t->times.size() >= 3 || t->interval_controls.size() >= 3) {
      const Comfort c = comfort(*t);
      m.max_jerk = std::max(m.max_jerk, c.max_jerk);
      m.max_accel = std::max(m.max_accel, c.max_accel);
    }
    for (double s : times) {
      if (std::abs(control_at(*t, s).a) >= 0.95 * scn.limits.a_max) ++saturated;
    }
  }
  const SpeedStats st = speed_stats(ordered);
  m.mean_speed = st.mean;
  m.speed_stddev = st.stddev;
  m.min_pair_clearance = validation.min_pair_clearance;
  m.min_boundary_clearance = validation.min_boundary_clearance;
  m.bang_bang_fraction =
      static_cast<double>(saturated) / static_cast<double>(times.size() * matched.size());
  return m;
}

std::string metrics_text(const MetricsReport& m) {
  std::string out;
  auto line = [&out](const std::string& key, const std::string& value) {
    out += key + "\t" + value + "\n";
  };
  line("crossing_time_s", fmt(m.crossing_time));
  line("lower_bound_s", fmt(m.lower_bound));
  line("final_time_s", fmt(m.t_f));
  for (std::size_t i = 0; i < m.vehicle_ids.size(); ++i) {
    line("energy_kwh." + m.vehicle_ids[i], fmt(m.energy_kwh[i]));
  }
  line("total_energy_kwh", fmt(m.total_energy_kwh));
  line("mean_speed_mps", fmt(m.mean_speed));
  line("speed_stddev_mps", fmt(m.speed_stddev));
  line("travelled_distance_m", fmt(m.travelled_distance));
  line("max_jerk_mps3", fmt(m.max_jerk));
  line("max_accel_mps2", fmt(m.max_accel));
  line("min_pair_clearance_m", fmt(m.min_pair_clearance));
  line("min_boundary_clearance_m", fmt(m.min_boundary_clearance));
  line("bang_bang_fraction", fmt(m.bang_bang_fraction));
  return out;
}

std::string validation_text(const ValidationReport& r) {
  std::string out;
  out += std::string("pass\t") + (r.pass() ? "true" : "false") + "\n";
  out += "samples\t" + std::to_string(r.samples) + "\n";
  out += "min_pair_clearance_m\t" + fmt(r.min_pair_clearance) + "\n";
  out += "min_boundary_clearance_m\t" + fmt(r.min_boundary_clearance) + "\n";
  out += "violations\t" + std::to_string(r.violations.size()) + "\n";
  out += "kind\ttime\tsubject\tmagnitude\tthreshold\n";
  for (const auto& v : r.violations) {
    out += std::string(to_string(v.kind)) + "\t" + fmt(v.time) + "\t" + v.subject + "\t" +
           fmt(v.magnitude) + "\t" + fmt(v.threshold) + "\n";
  }
  return out;
}

std::string samples_table(const std::vector<Trajectory>& trajs, double sample_dt) {
  std::string out = "t,vehicle_id,x,y,theta,v,a\n";
  for (const auto& t : trajs) {
    for (double s : sample_times(t.times.back(), sample_dt)) {
      const auto st = state_at(t, s);
      const auto u = control_at(t, s);
      out += fmt(s) + "," + t.vehicle_id + "," + fmt(st.x) + "," + fmt(st.y) + "," +
             fmt(st.theta) + "," + fmt(st.V) + "," + fmt(u.a) + "\n";
    }
  }
  return out;
}

void mark_dominated(std::vector<ParetoPoint>& points) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& p = points[i];
    p.dominated = false;
    if (!p.ok) continue;
    for (std::size_t j = 0; j < points.size(); ++j) {
      const auto& q = points[j];
      if (j == i || !q.ok) continue;
      const bool no_worse = q.crossing_time <= p.crossing_time && q.energy_kwh <= p.energy_kwh;
      const bool better = q.crossing_time < p.crossing_time || q.energy_kwh < p.energy_kwh;
      if (no_worse && (better || j < i)) {
        p.dominated = true;
        break;
      }
    }
  }
}

std::vector<ParetoPoint> pareto_sweep(const scenario::Scenario& scn,
                                      const std::vector<double>& gammas,
                                      const solver::SolverConfig& cfg, int threads) {
  if (gammas.empty()) throw InvalidArgument("gamma list is empty");
  for (double g : gammas) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidArgument("gamma must be finite and >= 0");
  }
  if (threads <= 0) {
    const char* env = std::getenv("CROSSFLOW_THREADS");
    threads = env ? std::atoi(env) : 0;
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  threads = std::min<int>(threads, static_cast<int>(gammas.size()));

  std::vector<ParetoPoint> points(gammas.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < gammas.size(); i = next++) {
      ParetoPoint& pt = points[i];
      pt.gamma = gammas[i];
      try {
        scenario::Scenario s = scn;
        s.weights.gamma = gammas[i];
        const ocp::OcpResult r = ocp::solve_ocp(s, cfg);
        pt.status = solver::to_string(r.report.status);
        if (r.report.status != solver::SolveStatus::converged) continue;
        pt.crossing_time = crossing_time(s, r.solution.trajectories);
        for (const auto& t : r.solution.trajectories) pt.energy_kwh += energy(t, s.params.m);
        pt.ok = true;
      } catch (const std::exception& e) {
        pt.status = e.what();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  mark_dominated(points);
  return points;
}

std::string pareto_table(const std::vector<ParetoPoint>& points) {
  std::string out = "gamma\tstatus\tcrossing_time_s\tenergy_kwh\tdominated\n";
  for (const auto& p : points) {
    out += fmt(p.gamma) + "\t" + (p.ok ? std::string("ok") : p.status) + "\t" +
           (p.ok ? fmt(p.crossing_time) : "nan") + "\t" + (p.ok ? fmt(p.energy_kwh) : "nan") +
           "\t" + (p.ok ? (p.dominated ? "yes" : "no") : "-") + "\n";
  }
  return out;
}

}  // namespace crossflow::analysis
