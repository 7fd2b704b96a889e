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

#include "crossflow/crossflow.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "crossflow/analysis.hpp"
#include "crossflow/errors.hpp"
#include "crossflow/ocp.hpp"
#include "crossflow/scenario.hpp"
#include "crossflow/trajectory_io.hpp"

using namespace crossflow;

struct cf_scenario {
  scenario::Scenario scn;
};

struct cf_result {
  cf_result_info info{};
  std::string trajectories;
  std::string metrics;
  std::string validation;
  std::string iterations;
  std::string samples;
};

namespace {

thread_local std::string g_last_error;

cf_status fail(cf_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

// Runs f, mapping exceptions to status codes.
template <typename F>
cf_status guarded(F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    return fail(CF_ERR_PARSE, e.what());
  } catch (const SchemaError& e) {
    return fail(CF_ERR_SCHEMA, e.what());
  } catch (const SemanticError& e) {
    return fail(CF_ERR_SEMANTIC, e.what());
  } catch (const InvalidArgument& e) {
    return fail(CF_ERR_INVALID_ARGUMENT, e.what());
  } catch (const SingularityError& e) {
    return fail(CF_ERR_NUMERIC, e.what());
  } catch (const SolverError& e) {
    return fail(CF_ERR_NUMERIC, e.what());
  } catch (const NotArrivedError& e) {
    return fail(CF_ERR_NUMERIC, e.what());
  } catch (const std::bad_alloc&) {
    return fail(CF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CF_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(CF_ERR_INTERNAL, "unknown error");
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

cf_status null_argument(const char* name) {
  return fail(CF_ERR_INVALID_ARGUMENT, std::string(name) + " must not be NULL");
}

// Applies `edit` to a copy, validates it and commits on success.
template <typename F>
cf_status modify(cf_scenario* scn, F&& edit) {
  if (!scn) return null_argument("scenario");
  return guarded([&] {
    scenario::Scenario copy = scn->scn;
    edit(copy);
    scenario::validate(copy);
    scn->scn = std::move(copy);
    return CF_OK;
  });
}

solver::SolverConfig solver_config(const cf_solver_options& o) {
  solver::SolverConfig cfg;
  cfg.kkt_tol = o.kkt_tol;
  cfg.max_iters = o.max_iters;
  return cfg;
}

cf_status check_options(const cf_solver_options& o) {
  if (!(o.kkt_tol > 0.0)) return fail(CF_ERR_INVALID_ARGUMENT, "kkt_tol must be positive");
  if (o.max_iters < 0) return fail(CF_ERR_INVALID_ARGUMENT, "max_iters must be non-negative");
  if (!(o.sample_dt > 0.0)) return fail(CF_ERR_INVALID_ARGUMENT, "sample_dt must be positive");
  return CF_OK;
}

cf_solver_status solver_status(solver::SolveStatus s) {
  switch (s) {
    case solver::SolveStatus::converged: return CF_SOLVER_CONVERGED;
    case solver::SolveStatus::max_iters: return CF_SOLVER_MAX_ITERS;
    case solver::SolveStatus::restoration_failed: return CF_SOLVER_RESTORATION_FAILED;
    case solver::SolveStatus::singular_system: return CF_SOLVER_SINGULAR_SYSTEM;
  }
  return CF_SOLVER_SINGULAR_SYSTEM;
}

}  // namespace

extern "C" {

const char* cf_version(void) { return CROSSFLOW_VERSION; }

const char* cf_last_error(void) { return g_last_error.c_str(); }

void cf_string_free(char* s) { std::free(s); }

cf_status cf_scenario_load_file(const char* path, cf_scenario** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    scenario::Scenario s;
    try {
      s = scenario::load_scenario_file(path);
    } catch (const InvalidArgument& e) {
      return fail(CF_ERR_IO, e.what());
    }
    *out = new cf_scenario{std::move(s)};
    return CF_OK;
  });
}

cf_status cf_scenario_load_string(const char* text, cf_scenario** out) {
  if (!text) return null_argument("text");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    *out = new cf_scenario{scenario::load_scenario(text)};
    return CF_OK;
  });
}

cf_status cf_scenario_generate(int n_vehicles, uint64_t seed, cf_scenario** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    *out = new cf_scenario{scenario::generate_scenario(n_vehicles, seed)};
    return CF_OK;
  });
}

void cf_scenario_free(cf_scenario* scn) { delete scn; }

cf_status cf_scenario_vehicle_count(const cf_scenario* scn, int* out) {
  if (!scn) return null_argument("scenario");
  if (!out) return null_argument("out");
  *out = static_cast<int>(scn->scn.vehicles.size());
  return CF_OK;
}

cf_status cf_scenario_lower_bound(const cf_scenario* scn, double* out) {
  if (!scn) return null_argument("scenario");
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = scenario::theoretical_lower_bound(scn->scn);
    return CF_OK;
  });
}

cf_status cf_scenario_to_json(const cf_scenario* scn, char** out) {
  if (!scn) return null_argument("scenario");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    *out = duplicate(scenario::serialize(scn->scn));
    return CF_OK;
  });
}

cf_status cf_scenario_set_alpha(cf_scenario* scn, double alpha) {
  return modify(scn, [&](scenario::Scenario& s) { s.weights.alpha = alpha; });
}

cf_status cf_scenario_set_gamma(cf_scenario* scn, double gamma) {
  return modify(scn, [&](scenario::Scenario& s) { s.weights.gamma = gamma; });
}

cf_status cf_scenario_set_q_diagonal(cf_scenario* scn, double qx, double qy, double qtheta) {
  return modify(scn, [&](scenario::Scenario& s) {
    s.weights.Q.setZero();
    s.weights.Q(0, 0) = qx;
    s.weights.Q(1, 1) = qy;
    s.weights.Q(2, 2) = qtheta;
  });
}

cf_status cf_scenario_set_transcription(cf_scenario* scn, int intervals, int degree) {
  return modify(scn, [&](scenario::Scenario& s) {
    s.transcription.intervals = intervals;
    s.transcription.degree = degree;
  });
}

cf_status cf_scenario_set_prune_pairs(cf_scenario* scn, int enabled) {
  return modify(scn, [&](scenario::Scenario& s) { s.transcription.prune_pairs = enabled != 0; });
}

void cf_solver_options_default(cf_solver_options* opts) {
  if (!opts) return;
  const solver::SolverConfig cfg;
  opts->kkt_tol = cfg.kkt_tol;
  opts->max_iters = cfg.max_iters;
  opts->sample_dt = analysis::AuditOptions{}.sample_dt;
}

cf_status cf_solve(const cf_scenario* scn, const cf_solver_options* opts, cf_result** out) {
  if (!scn) return null_argument("scenario");
  if (!out) return null_argument("out");
  *out = nullptr;
  cf_solver_options o;
  cf_solver_options_default(&o);
  if (opts) o = *opts;
  if (const cf_status st = check_options(o); st != CF_OK) return st;
  return guarded([&] {
    const scenario::Scenario& s = scn->scn;
    const ocp::OcpResult r = ocp::solve_ocp(s, solver_config(o));
    auto res = std::make_unique<cf_result>();
    res->trajectories = write_trajectories_csv(r.solution.trajectories);
    res->iterations = solver::iteration_log_tsv(r.report);

    const std::vector<Trajectory> trajs = read_trajectories_csv(res->trajectories);
    analysis::AuditOptions audit;
    audit.sample_dt = o.sample_dt;
    const analysis::ValidationReport val = analysis::validate(s, trajs, audit);
    const analysis::MetricsReport m = analysis::metrics(s, trajs, val, audit);
    res->validation = analysis::validation_text(val);
    res->metrics = analysis::metrics_text(m);
    res->samples = analysis::samples_table(trajs, o.sample_dt);

    cf_result_info& info = res->info;
    info.solver_status = solver_status(r.report.status);
    info.converged = r.report.status == solver::SolveStatus::converged;
    info.iterations = r.report.iterations;
    info.objective = r.report.objective;
    info.stationarity = r.report.residuals.stationarity;
    info.primal_feasibility = r.report.residuals.primal_feasibility;
    info.complementarity = r.report.residuals.complementarity;
    info.final_time = r.solution.t_f;
    info.crossing_time = m.crossing_time;
    info.lower_bound = m.lower_bound;
    info.total_energy_kwh = m.total_energy_kwh;
    info.validation_passed = val.pass();
    info.violation_count = static_cast<int>(val.violations.size());
    info.min_pair_clearance = val.min_pair_clearance;
    info.min_boundary_clearance = val.min_boundary_clearance;
    *out = res.release();
    return CF_OK;
  });
}

cf_status cf_result_info_get(const cf_result* res, cf_result_info* out) {
  if (!res) return null_argument("result");
  if (!out) return null_argument("out");
  *out = res->info;
  return CF_OK;
}

cf_status cf_result_artifact(const cf_result* res, cf_artifact kind, char** out) {
  if (!res) return null_argument("result");
  if (!out) return null_argument("out");
  *out = nullptr;
  const std::string* text = nullptr;
  switch (kind) {
    case CF_ARTIFACT_TRAJECTORIES: text = &res->trajectories; break;
    case CF_ARTIFACT_METRICS: text = &res->metrics; break;
    case CF_ARTIFACT_VALIDATION: text = &res->validation; break;
    case CF_ARTIFACT_ITERATIONS: text = &res->iterations; break;
    case CF_ARTIFACT_SAMPLES: text = &res->samples; break;
  }
  if (!text) return fail(CF_ERR_INVALID_ARGUMENT, "unknown artifact kind");
  return guarded([&] {
    *out = duplicate(*text);
    return CF_OK;
  });
}

void cf_result_free(cf_result* res) { delete res; }

cf_status cf_validate_trajectory_file(const cf_scenario* scn, const char* path, double sample_dt,
                                      int* passed, char** report) {
  if (!scn) return null_argument("scenario");
  if (!path) return null_argument("path");
  if (!passed) return null_argument("passed");
  if (report) *report = nullptr;
  return guarded([&] {
    std::vector<Trajectory> trajs;
    try {
      trajs = read_trajectories_file(path);
    } catch (const InvalidArgument& e) {
      return fail(CF_ERR_IO, e.what());
    }
    analysis::AuditOptions audit;
    audit.sample_dt = sample_dt;
    const analysis::ValidationReport val = analysis::validate(scn->scn, trajs, audit);
    *passed = val.pass();
    if (report) *report = duplicate(analysis::validation_text(val));
    return CF_OK;
  });
}

cf_status cf_sweep(const cf_scenario* scn, const double* gammas, int n_gammas,
                   const cf_solver_options* opts, int threads, char** table, int* n_ok) {
  if (!scn) return null_argument("scenario");
  if (!gammas) return null_argument("gammas");
  if (!table) return null_argument("table");
  *table = nullptr;
  if (n_gammas < 1) return fail(CF_ERR_INVALID_ARGUMENT, "at least one gamma is required");
  if (threads < 0) return fail(CF_ERR_INVALID_ARGUMENT, "threads must be non-negative");
  cf_solver_options o;
  cf_solver_options_default(&o);
  if (opts) o = *opts;
  if (const cf_status st = check_options(o); st != CF_OK) return st;
  return guarded([&] {
    const std::vector<double> g(gammas, gammas + n_gammas);
    const auto points = analysis::pareto_sweep(scn->scn, g, solver_config(o), threads);
    int ok = 0;
    for (const auto& p : points) ok += p.ok;
    if (n_ok) *n_ok = ok;
    *table = duplicate(analysis::pareto_table(points));
    return CF_OK;
  });
}

}  // extern "C"
