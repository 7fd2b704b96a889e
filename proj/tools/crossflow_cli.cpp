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

// crossflow: solve, bound, validate, sweep and generate crossing scenarios.
//
// Exit codes: 0 success, 1 invalid input, 2 solver failure, 3 validation
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crossflow/crossflow.h"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitSolver = 2;
constexpr int kExitValidation = 3;

struct CliError {
  int code;
  std::string message;
};

void check(cf_status st, const std::string& context) {
  if (st != CF_OK) throw CliError{kExitInput, context + ": " + cf_last_error()};
}

struct ScenarioDeleter {
  void operator()(cf_scenario* s) const { cf_scenario_free(s); }
};
struct ResultDeleter {
  void operator()(cf_result* r) const { cf_result_free(r); }
};
struct StringDeleter {
  void operator()(char* s) const { cf_string_free(s); }
};
using ScenarioPtr = std::unique_ptr<cf_scenario, ScenarioDeleter>;
using ResultPtr = std::unique_ptr<cf_result, ResultDeleter>;
using StringPtr = std::unique_ptr<char, StringDeleter>;

struct Overrides {
  std::optional<double> gamma;
  std::optional<double> alpha;
  std::vector<double> q;
  std::optional<int> intervals;
  std::optional<int> degree;
  bool prune_pairs = false;
};

struct SolverFlags {
  double kkt_tol = 0.0;
  int max_iters = 0;
  double sample_dt = 0.0;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--gamma", o.gamma, "acceleration (energy) weight");
  cmd->add_option("--alpha", o.alpha, "final-time weight");
  cmd->add_option("--q", o.q, "diagonal of the pose-error weight: qx,qy,qtheta")
      ->delimiter(',')
      ->expected(3);
  cmd->add_option("--intervals", o.intervals, "collocation intervals");
  cmd->add_option("--degree", o.degree, "collocation degree");
  cmd->add_flag("--prune-pairs", o.prune_pairs, "drop vehicle pairs whose corridors stay apart");
}

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("--kkt-tol", f.kkt_tol, "KKT tolerance")->capture_default_str();
  cmd->add_option("--max-iters", f.max_iters, "iteration limit")->capture_default_str();
  cmd->add_option("--sample-dt", f.sample_dt, "audit sampling step in seconds")
      ->capture_default_str();
}

ScenarioPtr load(const std::string& path) {
  cf_scenario* raw = nullptr;
  check(cf_scenario_load_file(path.c_str(), &raw), path);
  return ScenarioPtr(raw);
}

std::string scenario_json(cf_scenario* scn) {
  char* raw = nullptr;
  check(cf_scenario_to_json(scn, &raw), "scenario");
  StringPtr s(raw);
  return s.get();
}

ordered_json apply_overrides(cf_scenario* scn, const Overrides& o) {
  ordered_json applied = ordered_json::object();
  if (o.gamma) {
    check(cf_scenario_set_gamma(scn, *o.gamma), "--gamma");
    applied["gamma"] = *o.gamma;
  }
  if (o.alpha) {
    check(cf_scenario_set_alpha(scn, *o.alpha), "--alpha");
    applied["alpha"] = *o.alpha;
  }
  if (!o.q.empty()) {
    check(cf_scenario_set_q_diagonal(scn, o.q[0], o.q[1], o.q[2]), "--q");
    applied["q"] = o.q;
  }
  if (o.intervals || o.degree) {
    ordered_json current = ordered_json::parse(scenario_json(scn));
    const int n = o.intervals.value_or(current["transcription"]["intervals"].get<int>());
    const int d = o.degree.value_or(current["transcription"]["degree"].get<int>());
    check(cf_scenario_set_transcription(scn, n, d), "--intervals/--degree");
    if (o.intervals) applied["intervals"] = n;
    if (o.degree) applied["degree"] = d;
  }
  if (o.prune_pairs) {
    check(cf_scenario_set_prune_pairs(scn, 1), "--prune-pairs");
    applied["prune_pairs"] = true;
  }
  return applied;
}

cf_solver_options options(const SolverFlags& f) {
  cf_solver_options o;
  cf_solver_options_default(&o);
  o.kkt_tol = f.kkt_tol;
  o.max_iters = f.max_iters;
  o.sample_dt = f.sample_dt;
  return o;
}

ordered_json options_json(const cf_solver_options& o) {
  return {{"kkt_tol", o.kkt_tol}, {"max_iters", o.max_iters}, {"sample_dt", o.sample_dt}};
}

std::string artifact(const cf_result* res, cf_artifact kind) {
  char* raw = nullptr;
  check(cf_result_artifact(res, kind, &raw), "artifact");
  StringPtr s(raw);
  return s.get();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << text;
  f.close();
  if (!f) throw CliError{kExitInput, "cannot write '" + path.string() + "'"};
}

// Written to a temporary name and renamed, so readers never see a partial
// manifest.
void write_manifest(const fs::path& dir, const ordered_json& manifest) {
  const fs::path tmp = dir / "manifest.json.tmp";
  write_file(tmp, manifest.dump(2) + "\n");
  std::error_code ec;
  fs::rename(tmp, dir / "manifest.json", ec);
  if (ec) throw CliError{kExitInput, "cannot write manifest: " + ec.message()};
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliError{kExitInput, "cannot create '" + dir + "': " + ec.message()};
  return fs::path(dir);
}

ordered_json generator_seed(cf_scenario* scn) {
  const ordered_json doc = ordered_json::parse(scenario_json(scn));
  if (auto it = doc.find("meta"); it != doc.end() && it->contains("seed")) return (*it)["seed"];
  return nullptr;
}

ordered_json base_manifest(const std::string& command, const std::string& scenario_path,
                           const ordered_json& applied, cf_scenario* scn) {
  ordered_json m;
  m["tool"] = "crossflow";
  m["version"] = cf_version();
  m["command"] = command;
  m["scenario"] = scenario_path;
  m["overrides"] = applied;
  m["seed"] = generator_seed(scn);
  return m;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int cmd_solve(const std::string& path, const Overrides& ov, const SolverFlags& flags,
              const std::string& out_dir) {
  ScenarioPtr scn = load(path);
  const ordered_json applied = apply_overrides(scn.get(), ov);
  const cf_solver_options opts = options(flags);
  const auto t0 = std::chrono::steady_clock::now();
  cf_result* raw = nullptr;
  check(cf_solve(scn.get(), &opts, &raw), "solve");
  ResultPtr res(raw);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  cf_result_info info;
  check(cf_result_info_get(res.get(), &info), "solve");

  const fs::path dir = prepare_dir(out_dir);
  const std::vector<std::pair<std::string, cf_artifact>> files = {
      {"trajectories.csv", CF_ARTIFACT_TRAJECTORIES}, {"metrics.tsv", CF_ARTIFACT_METRICS},
      {"validation.tsv", CF_ARTIFACT_VALIDATION},     {"iterations.tsv", CF_ARTIFACT_ITERATIONS},
      {"samples.csv", CF_ARTIFACT_SAMPLES}};
  ordered_json outputs = ordered_json::object();
  for (const auto& [name, kind] : files) {
    write_file(dir / name, artifact(res.get(), kind));
    outputs[name.substr(0, name.find('.'))] = (dir / name).string();
  }
  ordered_json m = base_manifest("solve", path, applied, scn.get());
  m["solver"] = options_json(opts);
  m["outputs"] = outputs;
  write_manifest(dir, m);

  static constexpr const char* kStatus[] = {"converged", "max_iters", "restoration_failed",
                                            "singular_system"};
  std::cout << "status\t" << kStatus[info.solver_status] << "\n"
            << "iterations\t" << info.iterations << "\n"
            << "final_time_s\t" << fmt(info.final_time) << "\n"
            << "crossing_time_s\t" << fmt(info.crossing_time) << "\n"
            << "lower_bound_s\t" << fmt(info.lower_bound) << "\n"
            << "total_energy_kwh\t" << fmt(info.total_energy_kwh) << "\n"
            << "validation\t" << (info.validation_passed ? "pass" : "fail") << "\n"
            << "outputs\t" << dir.string() << "\n";
  std::cerr << "wall time " << fmt(wall) << " s\n";
  if (!info.converged) return kExitSolver;
  if (!info.validation_passed) return kExitValidation;
  return kExitOk;
}

int cmd_bound(const std::string& path) {
  ScenarioPtr scn = load(path);
  double lb = 0.0;
  check(cf_scenario_lower_bound(scn.get(), &lb), "bound");
  std::printf("%.3f\n", lb);
  return kExitOk;
}

int cmd_validate(const std::string& scenario_path, const std::string& traj_path, double sample_dt) {
  ScenarioPtr scn = load(scenario_path);
  int passed = 0;
  char* raw = nullptr;
  check(cf_validate_trajectory_file(scn.get(), traj_path.c_str(), sample_dt, &passed, &raw),
        traj_path);
  StringPtr report(raw);
  std::cout << report.get();
  return passed ? kExitOk : kExitValidation;
}

std::vector<double> parse_gammas(const std::string& spec) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw CliError{kExitInput, "invalid gamma '" + s + "'"};
    return v;
  };
  std::vector<std::string> parts;
  const char sep = spec.find(':') != std::string::npos ? ':' : ',';
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, sep);) parts.push_back(item);
  if (sep == ',') {
    std::vector<double> out;
    for (const auto& p : parts) out.push_back(number(p));
    return out;
  }
  // start:stop:count, evenly spaced.
  if (parts.size() != 3) throw CliError{kExitInput, "gamma range must be start:stop:count"};
  const double a = number(parts[0]);
  const double b = number(parts[1]);
  const double c = number(parts[2]);
  if (c < 1 || c != std::floor(c)) throw CliError{kExitInput, "gamma count must be a positive integer"};
  const int n = static_cast<int>(c);
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  return out;
}

int cmd_sweep(const std::string& path, const std::string& gamma_spec, const Overrides& ov,
              const SolverFlags& flags, const std::string& out_dir) {
  const std::vector<double> gammas = parse_gammas(gamma_spec);
  ScenarioPtr scn = load(path);
  const ordered_json applied = apply_overrides(scn.get(), ov);
  const cf_solver_options opts = options(flags);
  char* raw = nullptr;
  int n_ok = 0;
  check(cf_sweep(scn.get(), gammas.data(), static_cast<int>(gammas.size()), &opts, 0, &raw, &n_ok),
        "sweep");
  StringPtr table(raw);
  const fs::path dir = prepare_dir(out_dir);
  write_file(dir / "pareto.tsv", table.get());
  ordered_json m = base_manifest("sweep", path, applied, scn.get());
  m["gammas"] = gammas;
  m["solver"] = options_json(opts);
  m["outputs"] = {{"pareto", (dir / "pareto.tsv").string()}};
  write_manifest(dir, m);
  std::cout << table.get();
  return n_ok > 0 ? kExitOk : kExitSolver;
}

int cmd_generate(int n, std::uint64_t seed, const std::string& out) {
  cf_scenario* raw = nullptr;
  check(cf_scenario_generate(n, seed, &raw), "generate");
  ScenarioPtr scn(raw);
  const std::string text = scenario_json(scn.get());
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signal-free intersection crossing planner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cf_version()));

  const cf_solver_options defaults = [] {
    cf_solver_options o;
    cf_solver_options_default(&o);
    return o;
  }();

  std::string scenario_path;
  std::string traj_path;
  std::string out_dir = "out";
  std::string gamma_spec;
  std::string generate_out;
  int n_vehicles = 0;
  std::uint64_t seed = 1;
  Overrides ov;
  SolverFlags flags{defaults.kkt_tol, defaults.max_iters, defaults.sample_dt};

  CLI::App* solve = app.add_subcommand("solve", "solve a scenario and audit the result");
  solve->add_option("scenario", scenario_path, "scenario file")->required();
  add_overrides(solve, ov);
  add_solver_flags(solve, flags);
  solve->add_option("--out", out_dir, "output directory")->capture_default_str();

  CLI::App* bound = app.add_subcommand("bound", "print the crossing-time lower bound");
  bound->add_option("scenario", scenario_path, "scenario file")->required();

  CLI::App* validate = app.add_subcommand("validate", "audit a trajectory file");
  validate->add_option("scenario", scenario_path, "scenario file")->required();
  validate->add_option("trajectories", traj_path, "trajectory file")->required();
  validate->add_option("--sample-dt", flags.sample_dt, "audit sampling step in seconds")
      ->capture_default_str();

  CLI::App* sweep = app.add_subcommand("sweep", "Pareto sweep over the acceleration weight");
  sweep->add_option("scenario", scenario_path, "scenario file")->required();
  sweep->add_option("--gammas", gamma_spec, "comma list or start:stop:count")->required();
  add_overrides(sweep, ov);
  add_solver_flags(sweep, flags);
  sweep->add_option("--out", out_dir, "output directory")->capture_default_str();

  CLI::App* generate = app.add_subcommand("generate", "write a seeded random scenario");
  generate->add_option("n_vehicles", n_vehicles, "number of vehicles")->required();
  generate->add_option("--seed", seed, "random seed")->capture_default_str();
  generate->add_option("--out", generate_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*solve) return cmd_solve(scenario_path, ov, flags, out_dir);
    if (*bound) return cmd_bound(scenario_path);
    if (*validate) return cmd_validate(scenario_path, traj_path, flags.sample_dt);
    if (*sweep) return cmd_sweep(scenario_path, gamma_spec, ov, flags, out_dir);
    if (*generate) return cmd_generate(n_vehicles, seed, generate_out);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  }
  return kExitInput;
}
