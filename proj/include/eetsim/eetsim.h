/*
 * eetsim C interface.
 *
 * All objects are opaque handles created by eet_*_create / eet_*_load /
 * computation functions and released with the matching eet_*_free. Every
 * function that can fail returns an eet_status; on failure the thread-local
 * message from eet_last_error() describes the problem and, for invalid
 * input, eet_last_error_field() names the offending field.
 *
 * Units: energies cm^-1, times fs, rates fs^-1, temperatures K.
 * Site indices are 0-based. Complex arrays are interleaved (re, im) and
 * matrices are row-major.
 */
#ifndef EETSIM_EETSIM_H
#define EETSIM_EETSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(EETSIM_BUILDING)
#define EET_API __declspec(dllexport)
#else
#define EET_API __declspec(dllimport)
#endif
#else
#define EET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum eet_status {
  EET_OK = 0,
  EET_ERR_INVALID_INPUT = 1,
  EET_ERR_STEP_SIZE = 2,
  EET_ERR_INTEGRATION = 3,
  EET_ERR_IO = 4,
  EET_ERR_RUNTIME = 5,
  EET_ERR_NULL_ARG = 6
} eet_status;

typedef enum eet_method { EET_METHOD_MD = 0, EET_METHOD_QJC = 1, EET_METHOD_HSR = 2 } eet_method;

typedef enum eet_spectrum_kind { EET_SPECTRUM_ABS = 0, EET_SPECTRUM_LD = 1, EET_SPECTRUM_CD = 2 } eet_spectrum_kind;

typedef struct eet_system eet_system;
typedef struct eet_trajectory eet_trajectory;
typedef struct eet_fluctuation eet_fluctuation;
typedef struct eet_spectral_density eet_spectral_density;
typedef struct eet_trace eet_trace;
typedef struct eet_propagator eet_propagator;

/* ---- errors and strings ------------------------------------------------ */

EET_API const char* eet_version(void);
EET_API const char* eet_status_name(eet_status status);
/* Message of the last failed call on this thread ("" if none). */
EET_API const char* eet_last_error(void);
/* Offending field of the last invalid-input failure ("" if unknown). */
EET_API const char* eet_last_error_field(void);
EET_API void eet_string_free(char* s);

/* ---- systems ----------------------------------------------------------- */

/* couplings: n*n row-major, symmetric, zero diagonal; may be NULL (all 0). */
EET_API eet_status eet_system_create(size_t n_sites, const double* mean_energies, const double* couplings,
                                     eet_system** out);
/* positions, dipoles: n*3 row-major; axis: unit 3-vector. */
EET_API eet_status eet_system_set_geometry(eet_system* system, const double* positions_A, const double* dipoles,
                                           const double* symmetry_axis);
EET_API eet_status eet_system_load_json(const char* path, eet_system** out);
EET_API size_t eet_system_n_sites(const eet_system* system);
/* Writes the n*n mean Hamiltonian, row-major. */
EET_API eet_status eet_system_hamiltonian(const eet_system* system, double* out);
EET_API void eet_system_free(eet_system* system);

/* ---- trajectories and noise -------------------------------------------- */

/* frames: n_frames*n_sites row-major. */
EET_API eet_status eet_trajectory_create(size_t n_frames, size_t n_sites, double dt_frame_fs, const double* frames,
                                         eet_trajectory** out);
EET_API eet_status eet_trajectory_load_csv(const char* path, eet_trajectory** out);
EET_API eet_status eet_trajectory_write_csv(const eet_trajectory* traj, const char* path);
EET_API size_t eet_trajectory_n_frames(const eet_trajectory* traj);
EET_API size_t eet_trajectory_n_sites(const eet_trajectory* traj);
EET_API double eet_trajectory_dt(const eet_trajectory* traj);
EET_API eet_status eet_trajectory_frames(const eet_trajectory* traj, double* out);
EET_API void eet_trajectory_free(eet_trajectory* traj);

EET_API eet_status eet_ar1_generate(double sigma_cm1, double tau_fs, double dt_fs, size_t n_steps, uint64_t seed,
                                    double* out);
EET_API eet_status eet_decorrelate(const eet_trajectory* traj, uint64_t seed, eet_trajectory** out);
/* Biased correlation estimator; writes floor(max_lag/dt)+1 values if
 * capacity allows. *n_out always receives the required length. */
EET_API eet_status eet_correlation(const eet_trajectory* traj, size_t m, size_t n, double max_lag_fs, double* out,
                                   size_t capacity, size_t* n_out);

/* ---- fluctuation sources ----------------------------------------------- */

EET_API eet_status eet_fluctuation_none(eet_fluctuation** out);
EET_API eet_status eet_fluctuation_static(size_t n_sites, const double* sigma_cm1, eet_fluctuation** out);
EET_API eet_status eet_fluctuation_ar1(size_t n_sites, const double* sigma_cm1, const double* tau_fs, double dt_fs,
                                       eet_fluctuation** out);
/* The trajectory is copied; the handle may be freed afterwards. */
EET_API eet_status eet_fluctuation_recorded(const eet_trajectory* traj, double window_fs, eet_fluctuation** out);
EET_API void eet_fluctuation_free(eet_fluctuation* fluct);

/* ---- spectral densities ------------------------------------------------ */

EET_API eet_status eet_sd_drude_lorentz(double lambda_cm1, double cutoff_fs, eet_spectral_density** out);
EET_API eet_status eet_sd_tabulated(size_t n, const double* omega_cm1, const double* j_cm1,
                                    eet_spectral_density** out);
/* Tabulated J(omega) from an autocorrelation sampled every dt_lag_fs.
 * window_fs <= 0 selects half the lag range. */
EET_API eet_status eet_sd_from_correlation(size_t n_lags, const double* c_cm2, double dt_lag_fs,
                                           double temperature_K, size_t n_omega, const double* omega_cm1,
                                           double window_fs, eet_spectral_density** out);
EET_API double eet_sd_eval(const eet_spectral_density* sd, double omega_cm1);
EET_API void eet_sd_free(eet_spectral_density* sd);

/* ---- simulation -------------------------------------------------------- */

typedef struct eet_sim_config {
  double dt_fs;
  double t_total_fs;
  double output_dt_fs;      /* <= 0: every step */
  uint64_t n_traj;
  uint64_t seed;
  eet_method method;
  size_t initial_site;      /* used when initial_density is NULL */
  const double* initial_density; /* n*n complex interleaved, or NULL */
  int record_propagator;    /* MD only */
  uint64_t workers;         /* 0: hardware concurrency */
  double temperature_K;     /* metadata */
  const double* hsr_rates_fs1; /* HSR: per-site rates, or NULL to derive from an AR(1) source */
} eet_sim_config;

EET_API void eet_sim_config_default(eet_sim_config* config);

/* sd is required for QJC and ignored otherwise; propagator may be NULL. */
EET_API eet_status eet_simulate(const eet_system* system, const eet_fluctuation* fluct,
                                const eet_spectral_density* sd, const eet_sim_config* config, eet_trace** trace,
                                eet_propagator** propagator);

EET_API double eet_dephasing_rate(double sigma_cm1, double tau_fs);
EET_API double eet_dephasing_width(double sigma_cm1, double tau_fs);

/* ---- traces and propagators -------------------------------------------- */

EET_API size_t eet_trace_n_times(const eet_trace* trace);
EET_API size_t eet_trace_n_sites(const eet_trace* trace);
EET_API eet_status eet_trace_times(const eet_trace* trace, double* out);
/* n*n complex interleaved density matrix at output index k. */
EET_API eet_status eet_trace_rho(const eet_trace* trace, size_t k, double* out);
EET_API double eet_trace_population(const eet_trace* trace, size_t k, size_t m);
EET_API double eet_trace_coherence(const eet_trace* trace, size_t k, size_t m, size_t n);
/* pairs: n_pairs*2 site indices; NULL writes every pair. */
EET_API eet_status eet_trace_write_csv(const eet_trace* trace, const size_t* pairs, size_t n_pairs, const char* path);
EET_API eet_status eet_trace_load_csv(const char* path, eet_trace** out);
EET_API void eet_trace_free(eet_trace* trace);

EET_API size_t eet_propagator_n_times(const eet_propagator* record);
EET_API eet_status eet_propagator_u(const eet_propagator* record, size_t k, double* out);
EET_API eet_status eet_propagator_write_csv(const eet_propagator* record, const char* path);
EET_API eet_status eet_propagator_load_csv(const char* path, eet_propagator** out);
EET_API void eet_propagator_free(eet_propagator* record);

/* ---- spectra and analysis ---------------------------------------------- */

EET_API eet_status eet_spectrum(const eet_propagator* record, const eet_system* system, eet_spectrum_kind kind,
                                size_t n_omega, const double* omega_cm1, double window_fs, int normalize,
                                double* intensity, int* short_record);

/* *found is set to 0 when no lifetime exists; *lifetime_fs is then NaN. */
EET_API eet_status eet_coherence_lifetime(const eet_trace* trace, size_t m, size_t n, double threshold,
                                          double* lifetime_fs, int* found);
EET_API eet_status eet_dephasing_slope(size_t n, const double* temperatures_K, const double* rates_cm1,
                                       double* slope);

typedef struct eet_trace_comparison {
  double rmsd;
  double max_abs_dev;
  double time_of_max_dev;
} eet_trace_comparison;

/* Population of site m (n ignored) when coherence is 0, else 2|rho_mn|. */
EET_API eet_status eet_compare_traces(const eet_trace* a, const eet_trace* b, int coherence, size_t m, size_t n,
                                      eet_trace_comparison* out);

/* ---- batch commands ---------------------------------------------------- */

/* Runs a JSON-configured command (simulate, noise, spectrum, analyze,
 * compare). Relative paths in the config resolve against base_dir (NULL:
 * current directory). On success *summary_json receives a JSON summary to
 * be released with eet_string_free. */
EET_API eet_status eet_run_command(const char* config_json, const char* base_dir, const char* out_dir,
                                   char** summary_json);

#ifdef __cplusplus
}
#endif

#endif /* EETSIM_EETSIM_H */
