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

#include "crossflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "crossflow/errors.hpp"

namespace crossflow::scenario {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
}

void reject_unknown(const json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) throw SchemaError(path + "/" + it.key(), "unknown field");
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
  return v;
}

void read_number(const json& obj, const char* key, const std::string& path, double& out,
                 bool required = false) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) throw SchemaError(path + "/" + key, "missing required field");
    return;
  }
  out = get_number(*it, path + "/" + key);
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < -1000000000LL || v > 1000000000LL) throw SchemaError(path, "integer out of range");
  return static_cast<int>(v);
}

geometry::Pose read_pose(const json& j, const std::string& path, double* speed) {
  require_object(j, path);
  if (speed) {
    reject_unknown(j, path, {"x", "y", "theta", "v"});
  } else {
    reject_unknown(j, path, {"x", "y", "theta"});
  }
  geometry::Pose p;
  read_number(j, "x", path, p.x, true);
  read_number(j, "y", path, p.y, true);
  read_number(j, "theta", path, p.theta, true);
  if (speed) read_number(j, "v", path, *speed);
  return p;
}

std::string location_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  // nlohmann reports the byte after the offending character.
  if (col > 1) --col;
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

geometry::Vec2 position(const geometry::Pose& p) { return {p.x, p.y}; }

void require_positive(double v, const std::string& path) {
  if (!(v > 0.0)) throw SemanticError(path, "must be positive, got " + std::to_string(v));
}

void require_nonnegative(double v, const std::string& path) {
  if (!(v >= 0.0)) throw SemanticError(path, "must be non-negative, got " + std::to_string(v));
}

}  // namespace

Scenario load_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(location_of(text, e.byte), "malformed JSON");
  }
  require_object(doc, "");
  reject_unknown(doc, "", {"layout", "vehicle_params", "limits", "safety", "weights", "vehicles",
                           "transcription", "meta"});
  Scenario s;

  if (auto it = doc.find("layout"); it != doc.end()) {
    const std::string p = "/layout";
    require_object(*it, p);
    reject_unknown(*it, p, {"road_half_width", "arm_extent"});
    read_number(*it, "road_half_width", p, s.layout.road_half_width);
    read_number(*it, "arm_extent", p, s.layout.arm_extent);
  }
  if (auto it = doc.find("vehicle_params"); it != doc.end()) {
    const std::string p = "/vehicle_params";
    require_object(*it, p);
    reject_unknown(*it, p, {"m", "I_z", "l_f", "l_r", "C_F", "C_R", "body_length", "body_width"});
    auto& vp = s.params;
    read_number(*it, "m", p, vp.m);
    read_number(*it, "I_z", p, vp.I_z);
    read_number(*it, "l_f", p, vp.l_f);
    read_number(*it, "l_r", p, vp.l_r);
    read_number(*it, "C_F", p, vp.C_F);
    read_number(*it, "C_R", p, vp.C_R);
    read_number(*it, "body_length", p, vp.body_length);
    read_number(*it, "body_width", p, vp.body_width);
  }
  if (auto it = doc.find("limits"); it != doc.end()) {
    const std::string p = "/limits";
    require_object(*it, p);
    reject_unknown(*it, p, {"V_min", "V_max", "a_max", "delta_max", "r_max", "beta_max"});
    auto& l = s.limits;
    read_number(*it, "V_min", p, l.V_min);
    read_number(*it, "V_max", p, l.V_max);
    read_number(*it, "a_max", p, l.a_max);
    read_number(*it, "delta_max", p, l.delta_max);
    read_number(*it, "r_max", p, l.r_max);
    read_number(*it, "beta_max", p, l.beta_max);
  }
  if (auto it = doc.find("safety"); it != doc.end()) {
    const std::string p = "/safety";
    require_object(*it, p);
    reject_unknown(*it, p, {"d_min", "d_rmin"});
    read_number(*it, "d_min", p, s.d_min);
    read_number(*it, "d_rmin", p, s.d_rmin);
  }
  if (auto it = doc.find("weights"); it != doc.end()) {
    const std::string p = "/weights";
    require_object(*it, p);
    reject_unknown(*it, p, {"alpha", "Q", "gamma"});
    read_number(*it, "alpha", p, s.weights.alpha);
    read_number(*it, "gamma", p, s.weights.gamma);
    if (auto q = it->find("Q"); q != it->end()) {
      if (!q->is_array() || q->size() != 9) throw SchemaError(p + "/Q", "expected 9 numbers");
      for (int k = 0; k < 9; ++k) {
        s.weights.Q(k / 3, k % 3) = get_number((*q)[k], p + "/Q/" + std::to_string(k));
      }
    }
  }
  if (auto it = doc.find("transcription"); it != doc.end()) {
    const std::string p = "/transcription";
    require_object(*it, p);
    reject_unknown(*it, p, {"intervals", "degree", "terminal", "prune_pairs",
                            "separation_links"});
    if (auto v = it->find("intervals"); v != it->end()) {
      s.transcription.intervals = get_int(*v, p + "/intervals");
    }
    if (auto v = it->find("degree"); v != it->end()) {
      s.transcription.degree = get_int(*v, p + "/degree");
    }
    if (auto v = it->find("terminal"); v != it->end()) {
      if (!v->is_string() || (*v != "hard" && *v != "soft")) {
        throw SchemaError(p + "/terminal", "expected \"hard\" or \"soft\"");
      }
      s.transcription.terminal = *v == "hard" ? TerminalMode::hard : TerminalMode::soft;
    }
    if (auto v = it->find("prune_pairs"); v != it->end()) {
      if (!v->is_boolean()) throw SchemaError(p + "/prune_pairs", "expected a boolean");
      s.transcription.prune_pairs = v->get<bool>();
    }
    if (auto v = it->find("separation_links"); v != it->end()) {
      if (!v->is_boolean()) throw SchemaError(p + "/separation_links", "expected a boolean");
      s.transcription.separation_links = v->get<bool>();
    }
  }
  if (auto it = doc.find("meta"); it != doc.end()) {
    const std::string p = "/meta";
    require_object(*it, p);
    reject_unknown(*it, p, {"seed", "n_vehicles"});
    GeneratorInfo g;
    if (auto v = it->find("seed"); v != it->end()) {
      if (!v->is_number_unsigned()) throw SchemaError(p + "/seed", "expected an unsigned integer");
      g.seed = v->get<std::uint64_t>();
    }
    if (auto v = it->find("n_vehicles"); v != it->end()) g.n_vehicles = get_int(*v, p + "/n_vehicles");
    s.generator = g;
  }

  const auto vit = doc.find("vehicles");
  if (vit == doc.end()) throw SchemaError("/vehicles", "missing required field");
  if (!vit->is_array()) throw SchemaError("/vehicles", "expected an array");
  for (std::size_t k = 0; k < vit->size(); ++k) {
    const std::string p = "/vehicles/" + std::to_string(k);
    const json& v = (*vit)[k];
    require_object(v, p);
    reject_unknown(v, p, {"id", "initial", "terminal"});
    VehicleSpec spec;
    const auto id = v.find("id");
    if (id == v.end()) throw SchemaError(p + "/id", "missing required field");
    if (!id->is_string()) throw SchemaError(p + "/id", "expected a string");
    spec.id = id->get<std::string>();
    const auto ini = v.find("initial");
    if (ini == v.end()) throw SchemaError(p + "/initial", "missing required field");
    spec.initial_pose = read_pose(*ini, p + "/initial", &spec.initial_speed);
    const auto ter = v.find("terminal");
    if (ter == v.end()) throw SchemaError(p + "/terminal", "missing required field");
    spec.terminal_pose = read_pose(*ter, p + "/terminal", nullptr);
    s.vehicles.push_back(std::move(spec));
  }

  validate(s);
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

void validate(const Scenario& s) {
  require_positive(s.layout.road_half_width, "/layout/road_half_width");
  if (!(s.layout.arm_extent > s.layout.road_half_width)) {
    throw SemanticError("/layout/arm_extent", "must exceed road_half_width");
  }
  try {
    vehicle::validate(s.params);
  } catch (const InvalidArgument& e) {
    throw SemanticError("/vehicle_params", e.what());
  }
  try {
    vehicle::validate(s.limits);
  } catch (const InvalidArgument& e) {
    throw SemanticError("/limits", e.what());
  }
  require_nonnegative(s.d_min, "/safety/d_min");
  require_nonnegative(s.d_rmin, "/safety/d_rmin");
  require_nonnegative(s.weights.alpha, "/weights/alpha");
  require_nonnegative(s.weights.gamma, "/weights/gamma");
  const Eigen::Matrix3d& Q = s.weights.Q;
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff())) {
    throw SemanticError("/weights/Q", "must be symmetric");
  }
  const Eigen::Vector3d eig = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(Q).eigenvalues();
  if (eig.minCoeff() < -1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff())) {
    throw SemanticError("/weights/Q", "must be positive semidefinite");
  }
  if (s.transcription.intervals < 1) {
    throw SemanticError("/transcription/intervals", "must be at least 1");
  }
  if (s.transcription.degree < 1 || s.transcription.degree > 9) {
    throw SemanticError("/transcription/degree", "must lie in [1, 9]");
  }
  if (s.vehicles.empty()) throw SemanticError("/vehicles", "at least one vehicle is required");

  std::set<std::string> ids;
  const auto blocks = build_road_boundaries(s.layout);
  for (std::size_t k = 0; k < s.vehicles.size(); ++k) {
    const VehicleSpec& v = s.vehicles[k];
    const std::string p = "/vehicles/" + std::to_string(k);
    if (v.id.empty()) throw SemanticError(p + "/id", "must not be empty");
    if (!ids.insert(v.id).second) throw SemanticError(p + "/id", "duplicate id '" + v.id + "'");
    if (v.initial_speed < s.limits.V_min || v.initial_speed > s.limits.V_max) {
      throw SemanticError(p + "/initial/v", "initial speed outside [V_min, V_max]");
    }
    const geometry::Polytope f0 = footprint(s, v.initial_pose);
    const geometry::Polytope f1 = footprint(s, v.terminal_pose);
    for (int r = 0; r < 4; ++r) {
      if (geometry::primal_distance(f0, blocks[r]) < s.d_rmin) {
        throw SemanticError(p + "/initial",
                            "vehicle outside road: initial footprint is within d_rmin of boundary " +
                                std::to_string(r));
      }
      if (geometry::primal_distance(f1, blocks[r]) < s.d_rmin) {
        throw SemanticError(p + "/terminal",
                            "vehicle outside road: terminal footprint is within d_rmin of boundary " +
                                std::to_string(r));
      }
    }
  }
  for (std::size_t i = 0; i < s.vehicles.size(); ++i) {
    for (std::size_t j = i + 1; j < s.vehicles.size(); ++j) {
      const std::string p = "/vehicles/" + std::to_string(j);
      const double d0 = geometry::primal_distance(footprint(s, s.vehicles[i].initial_pose),
                                                  footprint(s, s.vehicles[j].initial_pose));
      if (d0 == 0.0) {
        throw SemanticError(p + "/initial", "initial footprints overlap with vehicle '" +
                                                s.vehicles[i].id + "'");
      }
      if (d0 < s.d_min) {
        throw SemanticError(p + "/initial", "initial footprint is closer than d_min to vehicle '" +
                                                s.vehicles[i].id + "'");
      }
      const double d1 = geometry::primal_distance(footprint(s, s.vehicles[i].terminal_pose),
                                                  footprint(s, s.vehicles[j].terminal_pose));
      if (d1 < s.d_min) {
        throw SemanticError(p + "/terminal", "terminal footprint is closer than d_min to vehicle '" +
                                                 s.vehicles[i].id + "'");
      }
    }
  }
}

std::string serialize(const Scenario& s) {
  ojson doc;
  doc["layout"] = {{"road_half_width", s.layout.road_half_width},
                   {"arm_extent", s.layout.arm_extent}};
  const auto& p = s.params;
  doc["vehicle_params"] = {{"m", p.m},     {"I_z", p.I_z},
                           {"l_f", p.l_f}, {"l_r", p.l_r},
                           {"C_F", p.C_F}, {"C_R", p.C_R},
                           {"body_length", p.body_length}, {"body_width", p.body_width}};
  const auto& l = s.limits;
  doc["limits"] = {{"V_min", l.V_min},         {"V_max", l.V_max}, {"a_max", l.a_max},
                   {"delta_max", l.delta_max}, {"r_max", l.r_max}, {"beta_max", l.beta_max}};
  doc["safety"] = {{"d_min", s.d_min}, {"d_rmin", s.d_rmin}};
  ojson q = ojson::array();
  for (int k = 0; k < 9; ++k) q.push_back(s.weights.Q(k / 3, k % 3));
  doc["weights"] = {{"alpha", s.weights.alpha}, {"Q", q}, {"gamma", s.weights.gamma}};
  ojson vehicles = ojson::array();
  for (const VehicleSpec& v : s.vehicles) {
    ojson o;
    o["id"] = v.id;
    o["initial"] = {{"x", v.initial_pose.x},
                    {"y", v.initial_pose.y},
                    {"theta", v.initial_pose.theta},
                    {"v", v.initial_speed}};
    o["terminal"] = {{"x", v.terminal_pose.x},
                     {"y", v.terminal_pose.y},
                     {"theta", v.terminal_pose.theta}};
    vehicles.push_back(std::move(o));
  }
  doc["vehicles"] = std::move(vehicles);
  doc["transcription"] = {
      {"intervals", s.transcription.intervals},
      {"degree", s.transcription.degree},
      {"terminal", s.transcription.terminal == TerminalMode::hard ? "hard" : "soft"},
      {"prune_pairs", s.transcription.prune_pairs},
      {"separation_links", s.transcription.separation_links}};
  if (s.generator) {
    doc["meta"] = {{"seed", s.generator->seed}, {"n_vehicles", s.generator->n_vehicles}};
  }
  return doc.dump(2) + "\n";
}

std::array<geometry::Polytope, 4> build_road_boundaries(const IntersectionLayout& layout) {
  const double w = layout.road_half_width;
  const double e = layout.arm_extent;
  return {geometry::box_polytope(w, e, w, e), geometry::box_polytope(-e, -w, w, e),
          geometry::box_polytope(-e, -w, -e, -w), geometry::box_polytope(w, e, -e, -w)};
}

double min_travel_time(double distance, double v0, double a_max, double v_max) {
  if (!(distance >= 0.0) || !(v0 > 0.0) || !(a_max > 0.0) || !(v_max > 0.0)) {
    throw InvalidArgument("min_travel_time needs distance >= 0 and positive speeds and a_max");
  }
  if (v0 >= v_max) return distance / v0;
  const double d_acc = (v_max * v_max - v0 * v0) / (2.0 * a_max);
  if (distance <= d_acc) return (-v0 + std::sqrt(v0 * v0 + 2.0 * a_max * distance)) / a_max;
  return (v_max - v0) / a_max + (distance - d_acc) / v_max;
}

double theoretical_lower_bound(const Scenario& s) {
  double t = 0.0;
  for (const VehicleSpec& v : s.vehicles) {
    const double d = (position(v.terminal_pose) - position(v.initial_pose)).norm();
    t = std::max(t, min_travel_time(d, v.initial_speed, s.limits.a_max, s.limits.V_max));
  }
  return t;
}

geometry::Polytope footprint(const Scenario& s, const geometry::Pose& pose) {
  return geometry::transform_polytope(
      geometry::base_polytope(s.params.body_length, s.params.body_width), pose);
}

namespace {

constexpr int kSlotsPerArm = 5;
constexpr double kFirstSlot = 15.0;
constexpr double kSlotSpacing = 7.0;
constexpr double kMaxDisplacement = 70.0;
constexpr double kMinExit = 15.0;
constexpr double kExitSpacing = 7.0;

enum class Move { straight, left, right };

geometry::Vec2 heading(double theta) { return {std::cos(theta), std::sin(theta)}; }

// Right-hand side of the direction of travel.
geometry::Vec2 right_of(double theta) { return {std::sin(theta), -std::cos(theta)}; }

double arm_heading(int arm) {
  static constexpr double kHeadings[4] = {0.0, std::numbers::pi / 2, std::numbers::pi,
                                          -std::numbers::pi / 2};
  return kHeadings[arm];
}

}  // namespace

// Beyond 16 vehicles random exits can fragment an arm so that no free spot
// remains for a late vehicle.
int generator_capacity() { return 16; }

Scenario generate_scenario(int n, std::uint64_t seed) {
  if (n < 1 || n > generator_capacity()) {
    throw InvalidArgument("vehicle count must lie in [1, " + std::to_string(generator_capacity()) +
                          "], got " + std::to_string(n));
  }
  Scenario s;
  s.generator = GeneratorInfo{seed, n};
  const double lane = s.layout.road_half_width / 2.0;
  std::mt19937_64 rng(seed);
  auto uniform_int = [&rng](int lo, int hi) {
    // Modulo draw keeps the stream identical across standard libraries.
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  auto uniform_real = [&rng](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };

  std::array<int, 4> used{};
  struct Exit {
    double theta;
    double d_out;
  };
  std::vector<Exit> exits;

  for (int k = 0; k < n; ++k) {
    int arm = uniform_int(0, 3);
    while (used[arm] >= kSlotsPerArm) arm = (arm + 1) % 4;
    const Move drawn = k == 0   ? Move::straight
                       : k == 1 ? Move::left
                                : static_cast<Move>(uniform_int(0, 2));
    const double d_in = kFirstSlot + kSlotSpacing * used[arm];
    ++used[arm];

    const double th0 = arm_heading(arm);
    const geometry::Vec2 p0 = -d_in * heading(th0) + lane * right_of(th0);
    auto exit_point = [&](double theta, double d_out) -> geometry::Vec2 {
      return d_out * heading(theta) + lane * right_of(theta);
    };
    auto clashes = [&](double theta, double d_out) {
      return std::any_of(exits.begin(), exits.end(), [&](const Exit& e) {
        const double dth = std::remainder(e.theta - theta, 2.0 * std::numbers::pi);
        return std::abs(dth) < 1e-9 && std::abs(e.d_out - d_out) < kExitSpacing;
      });
    };

    // The drawn move first; a crowded exit arm falls back to the other moves,
    // except for the first two vehicles whose moves are fixed.
    std::vector<Move> moves{drawn};
    if (k >= 2) {
      for (Move m : {Move::straight, Move::left, Move::right}) {
        if (m != drawn) moves.push_back(m);
      }
    }
    double thf = 0.0;
    double d_out = 0.0;
    bool placed = false;
    for (Move move : moves) {
      thf = move == Move::straight ? th0
            : move == Move::left   ? th0 + std::numbers::pi / 2
                                   : th0 - std::numbers::pi / 2;
      // Largest exit distance keeping the displacement within the cap.
      double lo = 0.0;
      double hi = 200.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((exit_point(thf, mid) - p0).norm() <= kMaxDisplacement) lo = mid;
        else hi = mid;
      }
      const double d_max = lo;
      if (d_max < kMinExit) continue;
      d_out = k == 0 ? d_max : uniform_real(kMinExit, d_max);
      for (int attempt = 0; clashes(thf, d_out) && attempt < 64; ++attempt) {
        d_out = uniform_real(kMinExit, d_max);
      }
      for (double d = kMinExit; clashes(thf, d_out) && d <= d_max; d += 0.25) d_out = d;
      if (!clashes(thf, d_out)) {
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw InvalidArgument("generator could not place a free exit for vehicle " + std::to_string(k));
    }
    const geometry::Vec2 pf = exit_point(thf, d_out);
    exits.push_back({thf, d_out});

    VehicleSpec v;
    v.id = "cav" + std::to_string(k);
    v.initial_pose = {p0.x(), p0.y(), th0};
    v.initial_speed = 10.0;
    v.terminal_pose = {pf.x(), pf.y(), thf};
    s.vehicles.push_back(std::move(v));
  }
  validate(s);
  return s;
}

}  // namespace crossflow::scenario
