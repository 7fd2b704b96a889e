/* Copyright 2026 The Crossflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the crossing planner.
 *
 * Every function returns a cf_status. On failure the message is available
 * from cf_last_error() on the same thread until the next failing call.
 * Strings returned through char** outputs are owned by the caller and must
 * be released with cf_string_free. Handles are not thread-safe, but
 * distinct handles may be used from different threads. */

#ifndef CROSSFLOW_CROSSFLOW_H_
#define CROSSFLOW_CROSSFLOW_H_

#include <stdint.h>

#if defined(CROSSFLOW_BUILDING_LIBRARY)
#define CF_API __attribute__((visibility("default")))
#else
#define CF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cf_status {
  CF_OK = 0,
  CF_ERR_INVALID_ARGUMENT = 1,
  CF_ERR_IO = 2,
  CF_ERR_PARSE = 3,
  CF_ERR_SCHEMA = 4,
  CF_ERR_SEMANTIC = 5,
  CF_ERR_NUMERIC = 6,
  CF_ERR_INTERNAL = 7
} cf_status;

typedef enum cf_solver_status {
  CF_SOLVER_CONVERGED = 0,
  CF_SOLVER_MAX_ITERS = 1,
  CF_SOLVER_RESTORATION_FAILED = 2,
  CF_SOLVER_SINGULAR_SYSTEM = 3
} cf_solver_status;

typedef enum cf_artifact {
  /* t,vehicle_id,x,y,theta,v,beta,r,a,delta */
  CF_ARTIFACT_TRAJECTORIES = 0,
  /* key<TAB>value lines */
  CF_ARTIFACT_METRICS = 1,
  CF_ARTIFACT_VALIDATION = 2,
  /* one line per solver iteration */
  CF_ARTIFACT_ITERATIONS = 3,
  /* t,vehicle_id,x,y,theta,v,a at every audit sample, for plotting */
  CF_ARTIFACT_SAMPLES = 4
} cf_artifact;

typedef struct cf_scenario cf_scenario;
typedef struct cf_result cf_result;

typedef struct cf_solver_options {
  double kkt_tol;
  int max_iters;
  /* audit sampling step in seconds */
  double sample_dt;
} cf_solver_options;

typedef struct cf_result_info {
  cf_solver_status solver_status;
  int converged;
  int iterations;
  double objective;
  double stationarity;
  double primal_feasibility;
  double complementarity;
  double final_time;
  /* NaN when some vehicle never reaches its terminal pose */
  double crossing_time;
  double lower_bound;
  double total_energy_kwh;
  int validation_passed;
  int violation_count;
  double min_pair_clearance;
  double min_boundary_clearance;
} cf_result_info;

CF_API const char* cf_version(void);
CF_API const char* cf_last_error(void);
CF_API void cf_string_free(char* s);

CF_API cf_status cf_scenario_load_file(const char* path, cf_scenario** out);
CF_API cf_status cf_scenario_load_string(const char* text, cf_scenario** out);
/* Seeded random fleet; scenarios for n and n + 1 share their first n vehicles. */
CF_API cf_status cf_scenario_generate(int n_vehicles, uint64_t seed, cf_scenario** out);
CF_API void cf_scenario_free(cf_scenario* scn);

CF_API cf_status cf_scenario_vehicle_count(const cf_scenario* scn, int* out);
CF_API cf_status cf_scenario_lower_bound(const cf_scenario* scn, double* out);
CF_API cf_status cf_scenario_to_json(const cf_scenario* scn, char** out);

/* Overrides; each revalidates and leaves the scenario unchanged on error. */
CF_API cf_status cf_scenario_set_alpha(cf_scenario* scn, double alpha);
CF_API cf_status cf_scenario_set_gamma(cf_scenario* scn, double gamma);
CF_API cf_status cf_scenario_set_q_diagonal(cf_scenario* scn, double qx, double qy, double qtheta);
CF_API cf_status cf_scenario_set_transcription(cf_scenario* scn, int intervals, int degree);
CF_API cf_status cf_scenario_set_prune_pairs(cf_scenario* scn, int enabled);

CF_API void cf_solver_options_default(cf_solver_options* opts);

/* Assembles, solves, extracts and audits. Solver non-convergence is not an
 * error: the result carries the status and the last iterate. The audit runs
 * on the trajectories after a round trip through the trajectory format, so
 * it agrees with cf_validate_trajectory_file on the written file. opts may be
 * NULL for the defaults. */
CF_API cf_status cf_solve(const cf_scenario* scn, const cf_solver_options* opts, cf_result** out);
CF_API cf_status cf_result_info_get(const cf_result* res, cf_result_info* out);
CF_API cf_status cf_result_artifact(const cf_result* res, cf_artifact kind, char** out);
CF_API void cf_result_free(cf_result* res);

/* Audits a trajectory file against the scenario. Mismatched vehicle ids or
 * horizons fail with CF_ERR_INVALID_ARGUMENT. report may be NULL. */
CF_API cf_status cf_validate_trajectory_file(const cf_scenario* scn, const char* path,
                                             double sample_dt, int* passed, char** report);

/* One independent solve per gamma on up to `threads` workers (0 reads
 * CROSSFLOW_THREADS). The table lists gamma, status, crossing time, energy
 * and the dominated flag per point; n_ok counts converged points where every
 * vehicle arrived. */
CF_API cf_status cf_sweep(const cf_scenario* scn, const double* gammas, int n_gammas,
                          const cf_solver_options* opts, int threads, char** table, int* n_ok);

#ifdef __cplusplus
}
#endif

#endif /* CROSSFLOW_CROSSFLOW_H_ */
