#include "eetsim/eetsim.h"

#include "commands.hpp"

#include "eetsim/analysis.hpp"
#include "eetsim/error.hpp"
#include "eetsim/hsr.hpp"
#include "eetsim/io.hpp"
#include "eetsim/noise.hpp"
#include "eetsim/propagator.hpp"
#include "eetsim/qjc.hpp"
#include "eetsim/spectra.hpp"
#include "eetsim/version.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <memory>
#include <optional>

using namespace eetsim;

struct eet_system {
  SiteSystem value;
};
struct eet_trajectory {
  EnergyTrajectory value;
};
struct eet_fluctuation {
  FluctuationModel value;
};
struct eet_spectral_density {
  SpectralDensity value;
};
struct eet_trace {
  DensityTrace value;
};
struct eet_propagator {
  PropagatorRecord value;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_field;

struct NullArg {
  const char* name;
};

template <class T>
void need(const T* p, const char* name) {
  if (!p) throw NullArg{name};
}

template <class F>
eet_status guarded(F&& f) {
  g_error.clear();
  g_field.clear();
  try {
    f();
    return EET_OK;
  } catch (const NullArg& e) {
    g_error = std::string("null argument: ") + e.name;
    g_field = e.name;
    return EET_ERR_NULL_ARG;
  } catch (const InvalidInput& e) {
    g_error = e.what();
    g_field = e.field();
    return EET_ERR_INVALID_INPUT;
  } catch (const nlohmann::json::exception& e) {
    g_error = e.what();
    g_field = "config";
    return EET_ERR_INVALID_INPUT;
  } catch (const StepSizeError& e) {
    g_error = e.what();
    return EET_ERR_STEP_SIZE;
  } catch (const IntegrationError& e) {
    g_error = e.what();
    return EET_ERR_INTEGRATION;
  } catch (const IoError& e) {
    g_error = e.what();
    return EET_ERR_IO;
  } catch (const std::exception& e) {
    g_error = e.what();
    return EET_ERR_RUNTIME;
  } catch (...) {
    g_error = "unknown error";
    return EET_ERR_RUNTIME;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_complex(const Eigen::MatrixXcd& m, double* out) {
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out[i++] = m(r, c).real();
      out[i++] = m(r, c).imag();
    }
}

Eigen::MatrixXcd read_complex(const double* in, std::size_t n) {
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXcd m(ni, ni);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < ni; ++r)
    for (Eigen::Index c = 0; c < ni; ++c, i += 2) m(r, c) = Complex(in[i], in[i + 1]);
  return m;
}

}  // namespace

extern "C" {

const char* eet_version(void) { return version_string(); }

const char* eet_status_name(eet_status status) {
  switch (status) {
    case EET_OK: return "ok";
    case EET_ERR_INVALID_INPUT: return "invalid_input";
    case EET_ERR_STEP_SIZE: return "step_size";
    case EET_ERR_INTEGRATION: return "integration";
    case EET_ERR_IO: return "io";
    case EET_ERR_RUNTIME: return "runtime";
    case EET_ERR_NULL_ARG: return "null_argument";
  }
  return "unknown";
}

const char* eet_last_error(void) { return g_error.c_str(); }
const char* eet_last_error_field(void) { return g_field.c_str(); }
void eet_string_free(char* s) { std::free(s); }

// ---- systems

eet_status eet_system_create(size_t n_sites, const double* mean_energies, const double* couplings, eet_system** out) {
  return guarded([&] {
    need(mean_energies, "mean_energies");
    need(out, "out");
    const auto n = static_cast<Eigen::Index>(n_sites);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    if (couplings) c = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(couplings, n, n);
    *out = new eet_system{SiteSystem(std::vector<double>(mean_energies, mean_energies + n_sites), c)};
  });
}

eet_status eet_system_set_geometry(eet_system* system, const double* positions_A, const double* dipoles,
                                   const double* symmetry_axis) {
  return guarded([&] {
    need(system, "system");
    need(positions_A, "positions_A");
    need(dipoles, "dipoles");
    need(symmetry_axis, "symmetry_axis");
    Geometry g;
    for (std::size_t m = 0; m < system->value.n_sites(); ++m) {
      g.positions_A.push_back({positions_A[3 * m], positions_A[3 * m + 1], positions_A[3 * m + 2]});
      g.dipoles.push_back({dipoles[3 * m], dipoles[3 * m + 1], dipoles[3 * m + 2]});
    }
    g.symmetry_axis = {symmetry_axis[0], symmetry_axis[1], symmetry_axis[2]};
    system->value = SiteSystem(system->value.mean_energies(), system->value.couplings(), std::move(g));
  });
}

eet_status eet_system_load_json(const char* path, eet_system** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new eet_system{io::load_system(path)};
  });
}

size_t eet_system_n_sites(const eet_system* system) { return system ? system->value.n_sites() : 0; }

eet_status eet_system_hamiltonian(const eet_system* system, double* out) {
  return guarded([&] {
    need(system, "system");
    need(out, "out");
    const Eigen::MatrixXd h = system->value.mean_hamiltonian();
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out, h.rows(), h.cols()) = h;
  });
}

void eet_system_free(eet_system* system) { delete system; }

// ---- trajectories

eet_status eet_trajectory_create(size_t n_frames, size_t n_sites, double dt_frame_fs, const double* frames,
                                 eet_trajectory** out) {
  return guarded([&] {
    need(frames, "frames");
    need(out, "out");
    EnergyTrajectory t;
    t.dt_frame_fs = dt_frame_fs;
    t.frames = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        frames, static_cast<Eigen::Index>(n_frames), static_cast<Eigen::Index>(n_sites));
    t.validate();
    *out = new eet_trajectory{std::move(t)};
  });
}

eet_status eet_trajectory_load_csv(const char* path, eet_trajectory** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new eet_trajectory{io::load_trajectory(path)};
  });
}

eet_status eet_trajectory_write_csv(const eet_trajectory* traj, const char* path) {
  return guarded([&] {
    need(traj, "traj");
    need(path, "path");
    io::write_atomic(path, io::trajectory_to_csv(traj->value));
  });
}

size_t eet_trajectory_n_frames(const eet_trajectory* traj) { return traj ? traj->value.n_frames() : 0; }
size_t eet_trajectory_n_sites(const eet_trajectory* traj) { return traj ? traj->value.n_sites() : 0; }
double eet_trajectory_dt(const eet_trajectory* traj) { return traj ? traj->value.dt_frame_fs : 0.0; }

eet_status eet_trajectory_frames(const eet_trajectory* traj, double* out) {
  return guarded([&] {
    need(traj, "traj");
    need(out, "out");
    const auto& f = traj->value.frames;
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out, f.rows(), f.cols()) = f;
  });
}

void eet_trajectory_free(eet_trajectory* traj) { delete traj; }

eet_status eet_ar1_generate(double sigma_cm1, double tau_fs, double dt_fs, size_t n_steps, uint64_t seed, double* out) {
  return guarded([&] {
    need(out, "out");
    const auto x = ar1_generate(sigma_cm1, tau_fs, dt_fs, n_steps, seed);
    std::copy(x.begin(), x.end(), out);
  });
}

eet_status eet_decorrelate(const eet_trajectory* traj, uint64_t seed, eet_trajectory** out) {
  return guarded([&] {
    need(traj, "traj");
    need(out, "out");
    *out = new eet_trajectory{decorrelate(traj->value, seed)};
  });
}

eet_status eet_correlation(const eet_trajectory* traj, size_t m, size_t n, double max_lag_fs, double* out,
                           size_t capacity, size_t* n_out) {
  return guarded([&] {
    need(traj, "traj");
    need(n_out, "n_out");
    const auto c = correlation(traj->value, m, n, max_lag_fs);
    *n_out = c.values.size();
    if (out && capacity >= c.values.size()) std::copy(c.values.begin(), c.values.end(), out);
    else if (out) throw InvalidInput("output buffer too small", "capacity");
  });
}

// ---- fluctuation sources

eet_status eet_fluctuation_none(eet_fluctuation** out) {
  return guarded([&] {
    need(out, "out");
    *out = new eet_fluctuation{NoFluctuation{}};
  });
}

eet_status eet_fluctuation_static(size_t n_sites, const double* sigma_cm1, eet_fluctuation** out) {
  return guarded([&] {
    need(sigma_cm1, "sigma_cm1");
    need(out, "out");
    FluctuationModel f = StaticDisorder{std::vector<double>(sigma_cm1, sigma_cm1 + n_sites)};
    validate_fluctuation(f, n_sites);
    *out = new eet_fluctuation{std::move(f)};
  });
}

eet_status eet_fluctuation_ar1(size_t n_sites, const double* sigma_cm1, const double* tau_fs, double dt_fs,
                               eet_fluctuation** out) {
  return guarded([&] {
    need(sigma_cm1, "sigma_cm1");
    need(tau_fs, "tau_fs");
    need(out, "out");
    FluctuationModel f = Ar1Noise{std::vector<double>(sigma_cm1, sigma_cm1 + n_sites),
                                  std::vector<double>(tau_fs, tau_fs + n_sites), dt_fs};
    validate_fluctuation(f, n_sites);
    *out = new eet_fluctuation{std::move(f)};
  });
}

eet_status eet_fluctuation_recorded(const eet_trajectory* traj, double window_fs, eet_fluctuation** out) {
  return guarded([&] {
    need(traj, "traj");
    need(out, "out");
    FluctuationModel f = RecordedNoise{std::make_shared<const EnergyTrajectory>(traj->value), window_fs};
    validate_fluctuation(f, traj->value.n_sites());
    *out = new eet_fluctuation{std::move(f)};
  });
}

void eet_fluctuation_free(eet_fluctuation* fluct) { delete fluct; }

// ---- spectral densities

eet_status eet_sd_drude_lorentz(double lambda_cm1, double cutoff_fs, eet_spectral_density** out) {
  return guarded([&] {
    need(out, "out");
    if (!(lambda_cm1 >= 0.0)) throw InvalidInput("reorganization energy must be nonnegative", "lambda_cm1");
    if (!(cutoff_fs > 0.0)) throw InvalidInput("cutoff time must be positive", "cutoff_fs");
    *out = new eet_spectral_density{DrudeLorentz{lambda_cm1, 1.0 / cutoff_fs}};
  });
}

eet_status eet_sd_tabulated(size_t n, const double* omega_cm1, const double* j_cm1, eet_spectral_density** out) {
  return guarded([&] {
    need(omega_cm1, "omega_cm1");
    need(j_cm1, "j_cm1");
    need(out, "out");
    *out = new eet_spectral_density{
        TabulatedSpectralDensity{std::vector<double>(omega_cm1, omega_cm1 + n), std::vector<double>(j_cm1, j_cm1 + n)}};
  });
}

eet_status eet_sd_from_correlation(size_t n_lags, const double* c_cm2, double dt_lag_fs, double temperature_K,
                                   size_t n_omega, const double* omega_cm1, double window_fs,
                                   eet_spectral_density** out) {
  return guarded([&] {
    need(c_cm2, "c_cm2");
    need(omega_cm1, "omega_cm1");
    need(out, "out");
    CorrelationFunction corr;
    corr.dt_lag_fs = dt_lag_fs;
    corr.values.assign(c_cm2, c_cm2 + n_lags);
    CosineTransformOptions opts;
    opts.window_fs = window_fs;
    *out = new eet_spectral_density{spectral_density(corr, ThermalParams(temperature_K),
                                                     std::vector<double>(omega_cm1, omega_cm1 + n_omega), opts)};
  });
}

double eet_sd_eval(const eet_spectral_density* sd, double omega_cm1) {
  return sd ? sd->value(omega_cm1) : std::numeric_limits<double>::quiet_NaN();
}

void eet_sd_free(eet_spectral_density* sd) { delete sd; }

// ---- simulation

void eet_sim_config_default(eet_sim_config* config) {
  if (!config) return;
  const SimConfig d;
  *config = eet_sim_config{};
  config->dt_fs = d.dt_fs;
  config->t_total_fs = d.t_total_fs;
  config->output_dt_fs = d.output_dt_fs;
  config->n_traj = d.n_traj;
  config->seed = d.seed;
  config->method = EET_METHOD_MD;
  config->initial_site = 0;
  config->initial_density = nullptr;
  config->record_propagator = 0;
  config->workers = 0;
  config->temperature_K = 0.0;
  config->hsr_rates_fs1 = nullptr;
}

eet_status eet_simulate(const eet_system* system, const eet_fluctuation* fluct, const eet_spectral_density* sd,
                        const eet_sim_config* config, eet_trace** trace, eet_propagator** propagator) {
  return guarded([&] {
    need(system, "system");
    need(fluct, "fluct");
    need(config, "config");
    need(trace, "trace");
    const std::size_t n = system->value.n_sites();
    SimConfig cfg;
    cfg.dt_fs = config->dt_fs;
    cfg.t_total_fs = config->t_total_fs;
    cfg.output_dt_fs = config->output_dt_fs;
    cfg.n_traj = config->n_traj;
    cfg.seed = config->seed;
    cfg.record_propagator = config->record_propagator != 0;
    cfg.workers = config->workers;
    cfg.temperature_K = config->temperature_K;
    if (config->initial_density) cfg.initial_state = DensityMatrix(read_complex(config->initial_density, n));
    else cfg.initial_state = config->initial_site;

    std::optional<PropagatorRecord> record;
    DensityTrace out;
    switch (config->method) {
      case EET_METHOD_MD: {
        cfg.method = Method::MD;
        auto res = run_ensemble(system->value, fluct->value, cfg);
        out = std::move(res.trace);
        record = std::move(res.propagator);
        break;
      }
      case EET_METHOD_QJC:
        need(sd, "sd");
        cfg.method = Method::QJC;
        out = run_ensemble_qjc(system->value, fluct->value, sd->value, cfg);
        break;
      case EET_METHOD_HSR: {
        cfg.method = Method::HSR;
        cfg.validate(n);
        if (cfg.record_propagator) throw InvalidInput("propagator records are only available for the MD method", "record_propagator");
        DephasingRates rates;
        if (config->hsr_rates_fs1) {
          rates = dephasing_rates_explicit(std::vector<double>(config->hsr_rates_fs1, config->hsr_rates_fs1 + n));
        } else if (const auto* ar = std::get_if<Ar1Noise>(&fluct->value)) {
          rates = dephasing_rates(ar->sigma_cm1, ar->tau_fs, cfg.temperature_K);
        } else if (std::holds_alternative<NoFluctuation>(fluct->value)) {
          rates = dephasing_rates_explicit(std::vector<double>(n, 0.0));
        } else {
          throw InvalidInput("HSR needs explicit rates unless the source is AR(1)", "hsr_rates_fs1");
        }
        out = hsr_propagate(initial_density(cfg.initial_state, n), system->value.mean_hamiltonian(), rates,
                            cfg.output_times());
        out.seed = cfg.seed;
        break;
      }
      default:
        throw InvalidInput("unknown method", "method");
    }
    auto t = std::make_unique<eet_trace>(eet_trace{std::move(out)});
    if (propagator) *propagator = record ? new eet_propagator{std::move(*record)} : nullptr;
    *trace = t.release();
  });
}

double eet_dephasing_rate(double sigma_cm1, double tau_fs) {
  double r = std::numeric_limits<double>::quiet_NaN();
  guarded([&] { r = dephasing_rate(sigma_cm1, tau_fs); });
  return r;
}

double eet_dephasing_width(double sigma_cm1, double tau_fs) {
  double r = std::numeric_limits<double>::quiet_NaN();
  guarded([&] { r = dephasing_width(sigma_cm1, tau_fs); });
  return r;
}

// ---- traces and propagators

size_t eet_trace_n_times(const eet_trace* trace) { return trace ? trace->value.n_times() : 0; }
size_t eet_trace_n_sites(const eet_trace* trace) { return trace ? trace->value.n_sites() : 0; }

eet_status eet_trace_times(const eet_trace* trace, double* out) {
  return guarded([&] {
    need(trace, "trace");
    need(out, "out");
    std::copy(trace->value.times_fs.begin(), trace->value.times_fs.end(), out);
  });
}

eet_status eet_trace_rho(const eet_trace* trace, size_t k, double* out) {
  return guarded([&] {
    need(trace, "trace");
    need(out, "out");
    if (k >= trace->value.n_times()) throw InvalidInput("time index out of range", "k");
    write_complex(trace->value.rho[k], out);
  });
}

double eet_trace_population(const eet_trace* trace, size_t k, size_t m) {
  double r = std::numeric_limits<double>::quiet_NaN();
  guarded([&] {
    need(trace, "trace");
    if (k >= trace->value.n_times() || m >= trace->value.n_sites()) throw InvalidInput("index out of range", "k");
    r = trace->value.population(k, m);
  });
  return r;
}

double eet_trace_coherence(const eet_trace* trace, size_t k, size_t m, size_t n) {
  double r = std::numeric_limits<double>::quiet_NaN();
  guarded([&] {
    need(trace, "trace");
    if (k >= trace->value.n_times()) throw InvalidInput("time index out of range", "k");
    r = pairwise_coherence(trace->value.rho[k], m, n);
  });
  return r;
}

eet_status eet_trace_write_csv(const eet_trace* trace, const size_t* pairs, size_t n_pairs, const char* path) {
  return guarded([&] {
    need(trace, "trace");
    need(path, "path");
    io::PairList list;
    if (pairs) {
      for (size_t i = 0; i < n_pairs; ++i) list.emplace_back(pairs[2 * i], pairs[2 * i + 1]);
    } else {
      list = io::all_pairs(trace->value.n_sites());
    }
    io::write_atomic(path, io::trace_to_csv(trace->value, list));
  });
}

eet_status eet_trace_load_csv(const char* path, eet_trace** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new eet_trace{io::load_trace(path)};
  });
}

void eet_trace_free(eet_trace* trace) { delete trace; }

size_t eet_propagator_n_times(const eet_propagator* record) { return record ? record->value.times_fs.size() : 0; }

eet_status eet_propagator_u(const eet_propagator* record, size_t k, double* out) {
  return guarded([&] {
    need(record, "record");
    need(out, "out");
    if (k >= record->value.mean_u.size()) throw InvalidInput("time index out of range", "k");
    write_complex(record->value.mean_u[k], out);
  });
}

eet_status eet_propagator_write_csv(const eet_propagator* record, const char* path) {
  return guarded([&] {
    need(record, "record");
    need(path, "path");
    io::write_atomic(path, io::propagator_to_csv(record->value));
  });
}

eet_status eet_propagator_load_csv(const char* path, eet_propagator** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new eet_propagator{io::load_propagator(path)};
  });
}

void eet_propagator_free(eet_propagator* record) { delete record; }

// ---- spectra and analysis

eet_status eet_spectrum(const eet_propagator* record, const eet_system* system, eet_spectrum_kind kind, size_t n_omega,
                        const double* omega_cm1, double window_fs, int normalize, double* intensity, int* short_record) {
  return guarded([&] {
    need(record, "record");
    need(system, "system");
    need(omega_cm1, "omega_cm1");
    need(intensity, "intensity");
    SpectrumKind k;
    switch (kind) {
      case EET_SPECTRUM_ABS: k = SpectrumKind::Abs; break;
      case EET_SPECTRUM_LD: k = SpectrumKind::LD; break;
      case EET_SPECTRUM_CD: k = SpectrumKind::CD; break;
      default: throw InvalidInput("unknown spectrum kind", "kind");
    }
    SpectrumOptions opts;
    opts.window_fs = window_fs;
    opts.normalize = normalize != 0;
    const Spectrum s =
        compute_spectrum(record->value, system->value, k, std::vector<double>(omega_cm1, omega_cm1 + n_omega), opts);
    std::copy(s.intensity.begin(), s.intensity.end(), intensity);
    if (short_record) *short_record = s.short_record ? 1 : 0;
  });
}

eet_status eet_coherence_lifetime(const eet_trace* trace, size_t m, size_t n, double threshold, double* lifetime_fs,
                                  int* found) {
  return guarded([&] {
    need(trace, "trace");
    need(lifetime_fs, "lifetime_fs");
    need(found, "found");
    const auto r = coherence_lifetime(trace->value, m, n, threshold);
    *found = r.lifetime_fs ? 1 : 0;
    *lifetime_fs = r.lifetime_fs ? *r.lifetime_fs : std::numeric_limits<double>::quiet_NaN();
  });
}

eet_status eet_dephasing_slope(size_t n, const double* temperatures_K, const double* rates_cm1, double* slope) {
  return guarded([&] {
    need(temperatures_K, "temperatures_K");
    need(rates_cm1, "rates_cm1");
    need(slope, "slope");
    *slope = dephasing_slope(std::span<const double>(temperatures_K, n), std::span<const double>(rates_cm1, n));
  });
}

eet_status eet_compare_traces(const eet_trace* a, const eet_trace* b, int coherence, size_t m, size_t n,
                              eet_trace_comparison* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    const Observable obs = coherence ? Observable::coherence(m, n) : Observable::population(m);
    const auto c = compare_traces(a->value, b->value, obs);
    *out = eet_trace_comparison{c.rmsd, c.max_abs_dev, c.time_of_max_dev};
  });
}

// ---- batch commands

eet_status eet_run_command(const char* config_json, const char* base_dir, const char* out_dir, char** summary_json) {
  return guarded([&] {
    need(config_json, "config_json");
    need(out_dir, "out_dir");
    need(summary_json, "summary_json");
    nlohmann::json config;
    try {
      config = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidInput(std::string("config is not valid JSON: ") + e.what(), "config");
    }
    const std::filesystem::path base = base_dir ? std::filesystem::path(base_dir) : std::filesystem::current_path();
    const auto summary = commands::run(config, base, out_dir);
    *summary_json = dup_string(summary.dump());
  });
}

}  // extern "C"
