#pragma once

// Classical bath records: AR(1) surrogates, window sampling, decorrelation,
// correlation estimators and spectral densities.

#include "eetsim/model.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace eetsim {

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Fluctuation sources driving H_eff(t)

struct NoFluctuation {};

/// Per-trajectory Gaussian offsets, constant in time.
struct StaticDisorder {
  std::vector<double> sigma_cm1;
};

/// Independent stationary AR(1) processes per site, generated on a dt_fs grid.
struct Ar1Noise {
  std::vector<double> sigma_cm1;
  std::vector<double> tau_fs;
  double dt_fs = 1.0;
};

/// Windows drawn uniformly from a recorded trajectory (absolute energies).
struct RecordedNoise {
  std::shared_ptr<const EnergyTrajectory> trajectory;
  double window_fs = 1000.0;
};

using FluctuationModel = std::variant<NoFluctuation, StaticDisorder, Ar1Noise, RecordedNoise>;

/// Throws InvalidInput if the model is inconsistent with `n_sites`.
void validate_fluctuation(const FluctuationModel& model, std::size_t n_sites);

// ---------------------------------------------------------------------------
// Correlation functions and spectral densities

struct CorrelationFunction {
  double dt_lag_fs = 0.0;
  std::vector<double> values;  // C(k dt_lag), cm^-2
  std::size_t site_m = 0;
  std::size_t site_n = 0;
  std::size_t n_samples = 0;

  bool is_auto() const { return site_m == site_n; }
};

struct DrudeLorentz {
  double lambda_cm1 = 35.0;
  double gamma_fs1 = 1.0 / 50.0;  // cutoff rate, inverse of the cutoff time

  double gamma_cm1() const;
};

struct TabulatedSpectralDensity {
  std::vector<double> omega_cm1;  // strictly increasing
  std::vector<double> j_cm1;
};

/// J(omega) in cm^-1; zero for omega <= 0 in every variant.
class SpectralDensity {
 public:
  SpectralDensity(DrudeLorentz dl);  // NOLINT(google-explicit-constructor)
  SpectralDensity(TabulatedSpectralDensity tab);  // NOLINT(google-explicit-constructor)

  static SpectralDensity zero() { return SpectralDensity(DrudeLorentz{0.0, 1.0 / 50.0}); }

  double operator()(double omega_cm1) const;

  bool is_drude_lorentz() const { return std::holds_alternative<DrudeLorentz>(form_); }
  const DrudeLorentz& drude_lorentz() const;
  const TabulatedSpectralDensity& tabulated() const;

 private:
  std::variant<DrudeLorentz, TabulatedSpectralDensity> form_;
};

// ---------------------------------------------------------------------------
// Operations

/// Stationary AR(1): x_{k+1} = phi x_k + sigma sqrt(1 - phi^2) xi_k,
/// phi = exp(-dt / tau), x_0 ~ N(0, sigma^2). Returns n_steps samples.
std::vector<double> ar1_generate(double sigma_cm1, double tau_fs, double dt_fs, std::size_t n_steps,
                                 std::uint64_t seed);

/// Same recursion, drawing from a caller-owned generator.
void ar1_fill(Rng& rng, double sigma_cm1, double tau_fs, double dt_fs, std::span<double> out);

/// Contiguous window of `window_fs` (frames = round(window / dt) + 1) whose
/// start frame is uniform over every admissible start.
EnergyTrajectory sample_window(const EnergyTrajectory& traj, double window_fs, Rng& rng);

/// Start frame used by sample_window; exposed for statistics tests.
std::size_t sample_window_start(const EnergyTrajectory& traj, double window_fs, Rng& rng);

/// Cyclically shifts every site column by a distinct random offset (site 1
/// keeps offset 0). Preserves each site's values and circular autocorrelation.
EnergyTrajectory decorrelate(const EnergyTrajectory& traj, std::uint64_t seed);

/// Offsets applied by decorrelate for a given seed.
std::vector<std::size_t> decorrelation_offsets(std::size_t n_frames, std::size_t n_sites, std::uint64_t seed);

/// Biased estimator C(k dt) = (1/N) sum_j de_m(t_j + k dt) de_n(t_j),
/// per-site means removed, for lags 0 .. floor(max_lag / dt).
CorrelationFunction correlation(const EnergyTrajectory& traj, std::size_t m, std::size_t n, double max_lag_fs);

/// Least-squares slope of log(C(t)/C(0)) through the origin over 0 < t <= t_max,
/// returned as tau = -1/slope. Lags with C <= 0 end the fit range.
double fit_correlation_time(const CorrelationFunction& corr, double t_max_fs);

struct CosineTransformOptions {
  /// Half-Gaussian apodization width; <= 0 selects half the lag range.
  double window_fs = 0.0;
};

/// Apodized trapezoidal integral  int_0^T C(t) w(t) cos(omega t / hbar) dt,
/// in cm^-2 fs, for every omega of the grid.
std::vector<double> cosine_transform(const CorrelationFunction& corr, const std::vector<double>& omega_cm1,
                                     const CosineTransformOptions& opts = {});

/// J(omega) = (2 / (pi hbar)) tanh(beta omega / 2) * cosine_transform.
/// Values on omega <= 0, and negative estimates, are stored as zero.
SpectralDensity spectral_density(const CorrelationFunction& corr, const ThermalParams& thermal,
                                 const std::vector<double>& omega_cm1, const CosineTransformOptions& opts = {});

/// 2 lambda gamma omega / (omega^2 + gamma^2) for omega > 0, else 0.
double drude_lorentz_eval(const SpectralDensity& sd, double omega_cm1);

/// Sample mean and (population) standard deviation of one site's series.
struct SiteStatistics {
  double mean_cm1;
  double sigma_cm1;
};
SiteStatistics site_statistics(const EnergyTrajectory& traj, std::size_t m);

/// Uniform grid lo, lo + step, ..., <= hi.
std::vector<double> linear_grid(double lo, double hi, double step);

}  // namespace eetsim
