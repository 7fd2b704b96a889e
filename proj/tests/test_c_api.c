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

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "crossflow/crossflow.h"

static int failures = 0;

#define CHECK(cond)                                                      \
  do {                                                                   \
    if (!(cond)) {                                                       \
      fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                        \
    }                                                                    \
  } while (0)

#define CHECK_STATUS(call, expected)                                            \
  do {                                                                          \
    cf_status s_ = (call);                                                      \
    if (s_ != (expected)) {                                                     \
      fprintf(stderr, "%s:%d: %s returned %d (%s), expected %d\n", __FILE__,    \
              __LINE__, #call, (int)s_, s_ == CF_OK ? "" : cf_last_error(),     \
              (int)(expected));                                                 \
      ++failures;                                                               \
    }                                                                           \
  } while (0)

static const char* path_of(const char* relative) {
  static char buf[4096];
  snprintf(buf, sizeof buf, "%s/%s", CROSSFLOW_SOURCE_DIR, relative);
  return buf;
}

static void test_loading_and_errors(void) {
  cf_scenario* scn = NULL;
  int n = 0;
  double lb = 0.0;
  char* json = NULL;
  cf_scenario* copy = NULL;

  CHECK(strlen(cf_version()) > 0);
  CHECK_STATUS(cf_scenario_load_file(path_of("scenarios/scenario_one.json"), &scn), CF_OK);
  CHECK_STATUS(cf_scenario_vehicle_count(scn, &n), CF_OK);
  CHECK(n == 2);
  CHECK_STATUS(cf_scenario_lower_bound(scn, &lb), CF_OK);
  CHECK(fabs(lb - 4.268) < 5e-4);

  CHECK_STATUS(cf_scenario_to_json(scn, &json), CF_OK);
  CHECK(json != NULL && strstr(json, "\"vehicles\"") != NULL);
  CHECK_STATUS(cf_scenario_load_string(json, &copy), CF_OK);
  cf_string_free(json);
  cf_scenario_free(copy);

  CHECK_STATUS(cf_scenario_set_gamma(scn, 0.5), CF_OK);
  CHECK_STATUS(cf_scenario_set_gamma(scn, -1.0), CF_ERR_SEMANTIC);
  CHECK(strstr(cf_last_error(), "gamma") != NULL);
  CHECK_STATUS(cf_scenario_set_alpha(scn, 1.0), CF_OK);
  CHECK_STATUS(cf_scenario_set_q_diagonal(scn, 0.01, 0.01, -1.0), CF_ERR_SEMANTIC);
  CHECK_STATUS(cf_scenario_set_transcription(scn, 0, 3), CF_ERR_SEMANTIC);
  CHECK_STATUS(cf_scenario_set_transcription(scn, 6, 3), CF_OK);
  CHECK_STATUS(cf_scenario_set_prune_pairs(scn, 1), CF_OK);
  cf_scenario_free(scn);

  scn = NULL;
  CHECK_STATUS(cf_scenario_load_file(path_of("scenarios/bad.json"), &scn), CF_ERR_SEMANTIC);
  CHECK(scn == NULL);
  CHECK(strstr(cf_last_error(), "/vehicles/1/initial") != NULL);
  CHECK_STATUS(cf_scenario_load_file(path_of("scenarios/missing.json"), &scn), CF_ERR_IO);
  CHECK_STATUS(cf_scenario_load_string("{\"vehicles\": [", &scn), CF_ERR_PARSE);
  CHECK_STATUS(cf_scenario_load_string("{}", &scn), CF_ERR_SCHEMA);
  CHECK_STATUS(cf_scenario_load_string(NULL, &scn), CF_ERR_INVALID_ARGUMENT);
  CHECK_STATUS(cf_scenario_vehicle_count(NULL, &n), CF_ERR_INVALID_ARGUMENT);
  CHECK_STATUS(cf_scenario_generate(0, 1, &scn), CF_ERR_INVALID_ARGUMENT);
  CHECK_STATUS(cf_scenario_generate(3, 7, &scn), CF_OK);
  CHECK_STATUS(cf_scenario_vehicle_count(scn, &n), CF_OK);
  CHECK(n == 3);
  cf_scenario_free(scn);
  cf_scenario_free(NULL);
  cf_result_free(NULL);
  cf_string_free(NULL);
}

static void test_solve_and_validate(void) {
  cf_scenario* scn = NULL;
  cf_result* res = NULL;
  cf_result_info info;
  cf_solver_options opts;
  char* csv = NULL;
  char* text = NULL;
  const char* traj_path = "c_api_trajectories.csv";
  FILE* f;
  int passed = 0;

  CHECK_STATUS(cf_scenario_load_file(path_of("scenarios/scenario_one.json"), &scn), CF_OK);
  CHECK_STATUS(cf_scenario_set_transcription(scn, 6, 3), CF_OK);
  cf_solver_options_default(&opts);
  CHECK(opts.kkt_tol == 1e-6 && opts.max_iters == 3000 && opts.sample_dt > 0.0);

  CHECK_STATUS(cf_solve(scn, &opts, &res), CF_OK);
  CHECK_STATUS(cf_result_info_get(res, &info), CF_OK);
  CHECK(info.converged == 1 && info.solver_status == CF_SOLVER_CONVERGED);
  CHECK(info.stationarity <= opts.kkt_tol && info.primal_feasibility <= opts.kkt_tol);
  CHECK(info.crossing_time >= info.lower_bound - 1e-6);
  CHECK(info.validation_passed == (info.violation_count == 0));

  CHECK_STATUS(cf_result_artifact(res, CF_ARTIFACT_TRAJECTORIES, &csv), CF_OK);
  CHECK(strstr(csv, "t,vehicle_id,x,y,theta,v,beta,r,a,delta\n") != NULL);
  CHECK_STATUS(cf_result_artifact(res, CF_ARTIFACT_METRICS, &text), CF_OK);
  CHECK(strncmp(text, "crossing_time_s\t", 16) == 0);
  cf_string_free(text);
  CHECK_STATUS(cf_result_artifact(res, CF_ARTIFACT_ITERATIONS, &text), CF_OK);
  CHECK(strncmp(text, "iter\t", 5) == 0);
  cf_string_free(text);
  CHECK_STATUS(cf_result_artifact(res, (cf_artifact)42, &text), CF_ERR_INVALID_ARGUMENT);

  f = fopen(traj_path, "wb");
  CHECK(f != NULL);
  if (f) {
    fputs(csv, f);
    fclose(f);
  }
  CHECK_STATUS(cf_validate_trajectory_file(scn, traj_path, opts.sample_dt, &passed, NULL), CF_OK);
  CHECK(passed == info.validation_passed);
  CHECK_STATUS(cf_validate_trajectory_file(scn, "no_such_file.csv", 0.01, &passed, NULL), CF_ERR_IO);
  cf_string_free(csv);
  cf_result_free(res);

  /* An iteration cap is a result, not an error. */
  opts.max_iters = 2;
  CHECK_STATUS(cf_solve(scn, &opts, &res), CF_OK);
  CHECK_STATUS(cf_result_info_get(res, &info), CF_OK);
  CHECK(info.converged == 0 && info.solver_status == CF_SOLVER_MAX_ITERS);
  CHECK(info.iterations == 2);
  cf_result_free(res);

  opts.kkt_tol = -1.0;
  CHECK_STATUS(cf_solve(scn, &opts, &res), CF_ERR_INVALID_ARGUMENT);
  cf_scenario_free(scn);
}

static void test_sweep(void) {
  cf_scenario* scn = NULL;
  const double gammas[1] = {0.0};
  char* table = NULL;
  int n_ok = -1;

  CHECK_STATUS(cf_scenario_load_file(path_of("scenarios/scenario_one.json"), &scn), CF_OK);
  CHECK_STATUS(cf_scenario_set_transcription(scn, 6, 3), CF_OK);
  CHECK_STATUS(cf_sweep(scn, gammas, 1, NULL, 1, &table, &n_ok), CF_OK);
  CHECK(n_ok == 1);
  CHECK(table != NULL && strncmp(table, "gamma\tstatus\t", 13) == 0);
  cf_string_free(table);
  CHECK_STATUS(cf_sweep(scn, gammas, 0, NULL, 1, &table, &n_ok), CF_ERR_INVALID_ARGUMENT);
  cf_scenario_free(scn);
}

int main(void) {
  test_loading_and_errors();
  test_solve_and_validate();
  test_sweep();
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return EXIT_FAILURE;
  }
  printf("all C API checks passed\n");
  return EXIT_SUCCESS;
}
