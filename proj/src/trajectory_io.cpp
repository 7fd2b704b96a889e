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

#include "crossflow/trajectory_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "crossflow/errors.hpp"

namespace crossflow {

namespace {

constexpr const char* kHeader = "t,vehicle_id,x,y,theta,v,beta,r,a,delta";

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  out += buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

double parse_number(const std::string& s, int line, const char* column) {
  const std::string where = "line " + std::to_string(line);
  if (s.empty()) throw ParseError(where, std::string("empty ") + column);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ParseError(where, std::string("invalid number '") + s + "' in column " + column);
  }
  return v;
}

}  // namespace

void check_trajectory(const Trajectory& t) {
  const std::string who = "trajectory '" + t.vehicle_id + "': ";
  if (t.times.empty()) throw InvalidArgument(who + "no samples");
  if (t.states.size() != t.times.size() || t.controls.size() != t.times.size()) {
    throw InvalidArgument(who + "state and control counts must match the sample count");
  }
  for (std::size_t i = 0; i < t.times.size(); ++i) {
    if (!std::isfinite(t.times[i])) throw InvalidArgument(who + "non-finite time");
    if (i > 0 && !(t.times[i] > t.times[i - 1])) {
      throw InvalidArgument(who + "times must strictly increase (sample " + std::to_string(i) + ")");
    }
  }
  if (t.interval_starts.size() != t.interval_controls.size()) {
    throw InvalidArgument(who + "interval starts and controls differ in length");
  }
  if (t.degree < 0) throw InvalidArgument(who + "negative degree");
  if (t.degree > 0 && t.times.size() != 1 + t.degree * t.interval_starts.size()) {
    throw InvalidArgument(who + "sample count does not match the collocation structure");
  }
}

std::string write_trajectories_csv(const std::vector<Trajectory>& trajs) {
  std::string out;
  int degree = trajs.empty() ? 0 : trajs.front().degree;
  for (const auto& t : trajs) {
    check_trajectory(t);
    if (t.degree != degree) degree = 0;
  }
  if (degree > 0) out += "# degree=" + std::to_string(degree) + "\n";
  out += kHeader;
  out += '\n';
  for (const auto& t : trajs) {
    for (std::size_t i = 0; i < t.times.size(); ++i) {
      const auto& s = t.states[i];
      const auto& u = t.controls[i];
      append_number(out, t.times[i]);
      out += ',';
      out += t.vehicle_id;
      for (double v : {s.x, s.y, s.theta, s.V, s.beta, s.r, u.a, u.delta}) {
        out += ',';
        append_number(out, v);
      }
      out += '\n';
    }
  }
  return out;
}

std::vector<Trajectory> read_trajectories_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  int degree = 0;
  bool header_seen = false;
  std::vector<Trajectory> trajs;
  std::map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line[0] == '#') {
      if (header_seen) throw ParseError(where, "comment after the header");
      const std::string key = "# degree=";
      if (line.rfind(key, 0) == 0) {
        degree = static_cast<int>(parse_number(line.substr(key.size()), line_no, "degree"));
        if (degree < 0) throw ParseError(where, "negative degree");
      }
      continue;
    }
    if (!header_seen) {
      if (line != kHeader) throw ParseError(where, std::string("expected header '") + kHeader + "'");
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 10) {
      throw ParseError(where, "expected 10 columns, found " + std::to_string(f.size()));
    }
    if (f[1].empty()) throw ParseError(where, "empty vehicle_id");
    auto [it, inserted] = index.emplace(f[1], trajs.size());
    if (inserted) {
      trajs.emplace_back();
      trajs.back().vehicle_id = f[1];
    }
    Trajectory& t = trajs[it->second];
    const double time = parse_number(f[0], line_no, "t");
    if (!t.times.empty() && !(time > t.times.back())) {
      throw ParseError(where, "times of vehicle '" + f[1] + "' must strictly increase");
    }
    vehicle::VehicleState s;
    s.x = parse_number(f[2], line_no, "x");
    s.y = parse_number(f[3], line_no, "y");
    s.theta = parse_number(f[4], line_no, "theta");
    s.V = parse_number(f[5], line_no, "v");
    s.beta = parse_number(f[6], line_no, "beta");
    s.r = parse_number(f[7], line_no, "r");
    vehicle::ControlInput u{parse_number(f[8], line_no, "a"), parse_number(f[9], line_no, "delta")};
    t.times.push_back(time);
    t.states.push_back(s);
    t.controls.push_back(u);
  }
  if (!header_seen) throw ParseError("line " + std::to_string(line_no + 1), "missing header");
  if (trajs.empty()) throw ParseError("line " + std::to_string(line_no + 1), "no samples");
  for (auto& t : trajs) {
    const std::size_t n = t.times.size();
    if (degree > 0 && n > 1 && (n - 1) % degree == 0) {
      t.degree = degree;
      for (std::size_t k = 0; k * degree + 1 < n; ++k) {
        t.interval_starts.push_back(t.times[k * degree]);
        t.interval_controls.push_back(t.controls[k * degree + 1]);
      }
    }
    check_trajectory(t);
  }
  return trajs;
}

std::vector<Trajectory> read_trajectories_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open trajectory file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return read_trajectories_csv(ss.str());
}

}  // namespace crossflow
