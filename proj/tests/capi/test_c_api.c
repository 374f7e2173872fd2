/* Exercises the public C interface from plain C. */
#include "eetsim/eetsim.h"

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static const double kHbar = 5308.837458876145;

static void test_dimer_rabi(void) {
  const double energies[2] = {12000.0, 12000.0};
  const double couplings[4] = {0.0, 100.0, 100.0, 0.0};
  eet_system* sys = NULL;
  eet_fluctuation* none = NULL;
  eet_trace* trace = NULL;
  eet_propagator* prop = NULL;
  eet_sim_config cfg;
  size_t k;

  EXPECT(eet_system_create(2, energies, couplings, &sys) == EET_OK);
  EXPECT(eet_system_n_sites(sys) == 2);
  EXPECT(eet_fluctuation_none(&none) == EET_OK);
  eet_sim_config_default(&cfg);
  cfg.dt_fs = 1.0;
  cfg.t_total_fs = 200.0;
  cfg.output_dt_fs = 10.0;
  cfg.n_traj = 1;
  cfg.record_propagator = 1;
  cfg.workers = 1;
  EXPECT(eet_simulate(sys, none, NULL, &cfg, &trace, &prop) == EET_OK);
  EXPECT(eet_trace_n_times(trace) == 21);
  EXPECT(eet_trace_n_sites(trace) == 2);
  EXPECT(eet_propagator_n_times(prop) == 21);
  for (k = 0; k < eet_trace_n_times(trace); ++k) {
    const double t = 10.0 * (double)k;
    const double s = sin(100.0 * t / kHbar);
    EXPECT(fabs(eet_trace_population(trace, k, 1) - s * s) < 1e-8);
    EXPECT(fabs(eet_trace_coherence(trace, k, 0, 1) - fabs(sin(2.0 * 100.0 * t / kHbar))) < 1e-8);
  }
  {
    double rho[8];
    EXPECT(eet_trace_rho(trace, 0, rho) == EET_OK);
    EXPECT(rho[0] == 1.0 && rho[6] == 0.0);
    EXPECT(eet_trace_rho(trace, 99, rho) == EET_ERR_INVALID_INPUT);
  }
  eet_propagator_free(prop);
  eet_trace_free(trace);
  eet_fluctuation_free(none);
  eet_system_free(sys);
}

static void test_errors(void) {
  const double energies[2] = {0.0, 0.0};
  const double bad[4] = {0.0, 1.0, 2.0, 0.0};
  eet_system* sys = NULL;
  double slope = 0.0;

  EXPECT(eet_system_create(2, energies, bad, &sys) == EET_ERR_INVALID_INPUT);
  EXPECT(sys == NULL);
  EXPECT(strlen(eet_last_error()) > 0);

  EXPECT(eet_system_create(2, energies, NULL, NULL) == EET_ERR_NULL_ARG);
  EXPECT(eet_ar1_generate(-1.0, 5.0, 1.0, 10, 0, &slope) == EET_ERR_INVALID_INPUT);
  EXPECT(strcmp(eet_last_error_field(), "sigma_cm1") == 0);
  EXPECT(strcmp(eet_status_name(EET_ERR_STEP_SIZE), "step_size") == 0);
  EXPECT(eet_system_load_json("/nonexistent/system.json", &sys) == EET_ERR_IO);
  EXPECT(strlen(eet_version()) > 0);
  EXPECT(eet_dephasing_width(100.0, 5.0) > 18.8 && eet_dephasing_width(100.0, 5.0) < 18.9);

  {
    const double temps[3] = {100.0, 200.0, 300.0};
    const double rates[3] = {10.0, 20.0, 30.0};
    EXPECT(eet_dephasing_slope(3, temps, rates, &slope) == EET_OK);
    EXPECT(fabs(slope - 0.1) < 1e-12);
  }
}

static void test_noise_roundtrip(const char* dir) {
  double series[1000];
  double frames[2000];
  eet_trajectory* traj = NULL;
  eet_trajectory* back = NULL;
  eet_trajectory* shuffled = NULL;
  char path[4096];
  size_t i, n_out = 0;
  double corr[11];

  EXPECT(eet_ar1_generate(50.0, 10.0, 1.0, 1000, 7, series) == EET_OK);
  for (i = 0; i < 1000; ++i) {
    frames[2 * i] = 12000.0 + series[i];
    frames[2 * i + 1] = 12100.0 - series[i];
  }
  EXPECT(eet_trajectory_create(1000, 2, 1.0, frames, &traj) == EET_OK);
  snprintf(path, sizeof path, "%s/capi_traj.csv", dir);
  EXPECT(eet_trajectory_write_csv(traj, path) == EET_OK);
  EXPECT(eet_trajectory_load_csv(path, &back) == EET_OK);
  if (back) {
    double copy[2000];
    EXPECT(eet_trajectory_n_frames(back) == 1000);
    EXPECT(eet_trajectory_frames(back, copy) == EET_OK);
    EXPECT(memcmp(copy, frames, sizeof copy) == 0);
  }
  EXPECT(eet_correlation(traj, 0, 1, 10.0, corr, 11, &n_out) == EET_OK);
  EXPECT(n_out == 11);
  EXPECT(corr[0] < 0.0); /* anti-correlated by construction */
  EXPECT(eet_correlation(traj, 0, 0, 10.0, corr, 2, &n_out) == EET_ERR_INVALID_INPUT);
  EXPECT(n_out == 11);
  EXPECT(eet_decorrelate(traj, 5, &shuffled) == EET_OK);
  eet_trajectory_free(shuffled);
  eet_trajectory_free(back);
  eet_trajectory_free(traj);
}

static void test_run_command(const char* dir) {
  const char* config =
      "{\"command\": \"simulate\", \"system\": {\"n_sites\": 2, \"mean_energies_cm1\": [0, 0],"
      " \"couplings_cm1\": [[0, 50], [50, 0]]}, \"dt_fs\": 1, \"t_total_fs\": 20, \"n_traj\": 4,"
      " \"seed\": 1, \"workers\": 1, \"method\": \"MD\", \"initial_site\": 1,"
      " \"fluctuation\": {\"type\": \"ar1\", \"sigma_cm1\": 50, \"tau_fs\": 20}}";
  char* summary = NULL;
  char out[4096];
  eet_trace* trace = NULL;
  snprintf(out, sizeof out, "%s/capi_run", dir);
  EXPECT(eet_run_command(config, NULL, out, &summary) == EET_OK);
  EXPECT(summary != NULL && strstr(summary, "trace.csv") != NULL);
  eet_string_free(summary);
  {
    char path[4200];
    snprintf(path, sizeof path, "%s/trace.csv", out);
    EXPECT(eet_trace_load_csv(path, &trace) == EET_OK);
    EXPECT(trace && eet_trace_n_times(trace) == 21);
    eet_trace_free(trace);
  }
  summary = NULL;
  EXPECT(eet_run_command("{\"command\": \"simulate\", \"dt_fs\": -1}", NULL, out, &summary) == EET_ERR_INVALID_INPUT);
  EXPECT(summary == NULL);
  EXPECT(eet_run_command("{\"command\": \"bogus\"}", NULL, out, &summary) == EET_ERR_INVALID_INPUT);
  EXPECT(strcmp(eet_last_error_field(), "command") == 0);
}

int main(int argc, char** argv) {
  const char* dir = argc > 1 ? argv[1] : ".";
  test_dimer_rabi();
  test_errors();
  test_noise_roundtrip(dir);
  test_run_command(dir);
  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  printf("c api: all checks passed\n");
  return 0;
}
