#include "eetsim/noise.hpp"

#include "eetsim/error.hpp"
#include "eetsim/units.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace eetsim {

namespace {

void require_site(const EnergyTrajectory& traj, std::size_t m, const char* field) {
  if (m >= traj.n_sites()) throw InvalidInput("site index out of range", field);
}

std::size_t window_frames(const EnergyTrajectory& traj, double window_fs) {
  if (!(window_fs >= 0.0)) throw InvalidInput("window length must be non-negative", "window_fs");
  const double steps = window_fs / traj.dt_frame_fs;
  const auto frames = static_cast<std::size_t>(std::llround(steps)) + 1;
  if (window_fs > traj.duration_fs() * (1.0 + 1e-12) || frames > traj.n_frames())
    throw InvalidInput("window (" + std::to_string(window_fs) + " fs) is longer than the trajectory (" +
                           std::to_string(traj.duration_fs()) + " fs)",
                       "window_fs");
  return std::max<std::size_t>(frames, 1);
}

}  // namespace

void validate_fluctuation(const FluctuationModel& model, std::size_t n_sites) {
  std::visit(
      [n_sites](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, StaticDisorder>) {
          if (f.sigma_cm1.size() != n_sites) throw InvalidInput("one sigma per site required", "fluctuation.sigma_cm1");
          for (double s : f.sigma_cm1)
            if (!(s >= 0.0)) throw InvalidInput("sigma must be non-negative", "fluctuation.sigma_cm1");
        } else if constexpr (std::is_same_v<T, Ar1Noise>) {
          if (f.sigma_cm1.size() != n_sites) throw InvalidInput("one sigma per site required", "fluctuation.sigma_cm1");
          if (f.tau_fs.size() != n_sites) throw InvalidInput("one tau per site required", "fluctuation.tau_fs");
          for (double s : f.sigma_cm1)
            if (!(s >= 0.0)) throw InvalidInput("sigma must be non-negative", "fluctuation.sigma_cm1");
          for (double t : f.tau_fs)
            if (!(t > 0.0)) throw InvalidInput("tau must be positive", "fluctuation.tau_fs");
          if (!(f.dt_fs > 0.0)) throw InvalidInput("AR(1) dt must be positive", "fluctuation.dt_fs");
        } else if constexpr (std::is_same_v<T, RecordedNoise>) {
          if (!f.trajectory) throw InvalidInput("recorded source has no trajectory", "fluctuation.trajectory");
          f.trajectory->validate();
          if (f.trajectory->n_sites() != n_sites)
            throw InvalidInput("trajectory has " + std::to_string(f.trajectory->n_sites()) + " sites, system has " +
                                   std::to_string(n_sites),
                               "fluctuation.trajectory");
          window_frames(*f.trajectory, f.window_fs);
        }
      },
      model);
}

// ---------------------------------------------------------------------------

double DrudeLorentz::gamma_cm1() const { return units::to_energy(gamma_fs1); }

SpectralDensity::SpectralDensity(DrudeLorentz dl) : form_(dl) {
  if (!(dl.lambda_cm1 >= 0.0)) throw InvalidInput("reorganization energy must be non-negative", "spectral_density.lambda_cm1");
  if (!(dl.gamma_fs1 > 0.0)) throw InvalidInput("cutoff rate must be positive", "spectral_density.cutoff_fs");
}

SpectralDensity::SpectralDensity(TabulatedSpectralDensity tab) : form_(std::move(tab)) {
  const auto& t = std::get<TabulatedSpectralDensity>(form_);
  if (t.omega_cm1.size() != t.j_cm1.size() || t.omega_cm1.size() < 2)
    throw InvalidInput("tabulated spectral density needs matching grids of at least two points", "spectral_density");
  for (std::size_t i = 1; i < t.omega_cm1.size(); ++i)
    if (!(t.omega_cm1[i] > t.omega_cm1[i - 1])) throw InvalidInput("omega grid must be strictly increasing", "spectral_density");
  for (std::size_t i = 0; i < t.j_cm1.size(); ++i)
    if (t.omega_cm1[i] > 0.0 && !(t.j_cm1[i] >= 0.0))
      throw InvalidInput("spectral density must be non-negative for omega > 0", "spectral_density");
}

const DrudeLorentz& SpectralDensity::drude_lorentz() const {
  if (!is_drude_lorentz()) throw InvalidInput("spectral density is not of Drude-Lorentz form", "spectral_density");
  return std::get<DrudeLorentz>(form_);
}

const TabulatedSpectralDensity& SpectralDensity::tabulated() const {
  if (is_drude_lorentz()) throw InvalidInput("spectral density is not tabulated", "spectral_density");
  return std::get<TabulatedSpectralDensity>(form_);
}

double SpectralDensity::operator()(double omega) const {
  if (!(omega > 0.0)) return 0.0;
  if (const auto* dl = std::get_if<DrudeLorentz>(&form_)) {
    const double g = dl->gamma_cm1();
    return 2.0 * dl->lambda_cm1 * g * omega / (omega * omega + g * g);
  }
  const auto& t = std::get<TabulatedSpectralDensity>(form_);
  if (omega < t.omega_cm1.front() || omega > t.omega_cm1.back()) return 0.0;
  const auto it = std::upper_bound(t.omega_cm1.begin(), t.omega_cm1.end(), omega);
  const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - t.omega_cm1.begin()), t.omega_cm1.size() - 1);
  const std::size_t lo = hi - 1;
  const double f = (omega - t.omega_cm1[lo]) / (t.omega_cm1[hi] - t.omega_cm1[lo]);
  return std::max(0.0, (1.0 - f) * t.j_cm1[lo] + f * t.j_cm1[hi]);
}

double drude_lorentz_eval(const SpectralDensity& sd, double omega_cm1) {
  sd.drude_lorentz();
  return sd(omega_cm1);
}

// ---------------------------------------------------------------------------

void ar1_fill(Rng& rng, double sigma, double tau, double dt, std::span<double> out) {
  if (!(sigma >= 0.0)) throw InvalidInput("sigma must be non-negative", "sigma_cm1");
  if (!(tau > 0.0)) throw InvalidInput("tau must be positive", "tau_fs");
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive", "dt_fs");
  if (out.empty()) return;
  std::normal_distribution<double> normal;
  const double phi = std::exp(-dt / tau);
  const double kick = sigma * std::sqrt(1.0 - phi * phi);
  double x = sigma * normal(rng);
  out[0] = x;
  for (std::size_t k = 1; k < out.size(); ++k) {
    x = phi * x + kick * normal(rng);
    out[k] = x;
  }
}

std::vector<double> ar1_generate(double sigma, double tau, double dt, std::size_t n_steps, std::uint64_t seed) {
  std::vector<double> out(n_steps);
  Rng rng(seed);
  ar1_fill(rng, sigma, tau, dt, out);
  return out;
}

std::size_t sample_window_start(const EnergyTrajectory& traj, double window_fs, Rng& rng) {
  traj.validate();
  const std::size_t frames = window_frames(traj, window_fs);
  std::uniform_int_distribution<std::size_t> start(0, traj.n_frames() - frames);
  return start(rng);
}

EnergyTrajectory sample_window(const EnergyTrajectory& traj, double window_fs, Rng& rng) {
  const std::size_t first = sample_window_start(traj, window_fs, rng);
  const std::size_t frames = window_frames(traj, window_fs);
  EnergyTrajectory out;
  out.dt_frame_fs = traj.dt_frame_fs;
  out.frames = traj.frames.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(frames));
  out.label = traj.label + " [frames " + std::to_string(first) + "+" + std::to_string(frames) + "]";
  return out;
}

std::vector<std::size_t> decorrelation_offsets(std::size_t n_frames, std::size_t n_sites, std::uint64_t seed) {
  std::vector<std::size_t> offsets(n_sites, 0);
  if (n_sites < 2) return offsets;
  if (n_frames < n_sites) throw InvalidInput("decorrelation needs at least as many frames as sites", "frames");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> draw(1, n_frames - 1);
  for (std::size_t m = 1; m < n_sites; ++m) {
    std::size_t off = 0;
    do {
      off = draw(rng);
    } while (std::find(offsets.begin() + 1, offsets.begin() + static_cast<std::ptrdiff_t>(m), off) !=
             offsets.begin() + static_cast<std::ptrdiff_t>(m));
    offsets[m] = off;
  }
  return offsets;
}

EnergyTrajectory decorrelate(const EnergyTrajectory& traj, std::uint64_t seed) {
  traj.validate();
  EnergyTrajectory out = traj;
  const std::size_t n = traj.n_frames();
  const auto offsets = decorrelation_offsets(n, traj.n_sites(), seed);
  for (std::size_t m = 0; m < traj.n_sites(); ++m) {
    const auto col = static_cast<Eigen::Index>(m);
    for (std::size_t k = 0; k < n; ++k)
      out.frames(static_cast<Eigen::Index>(k), col) = traj.frames(static_cast<Eigen::Index>((k + offsets[m]) % n), col);
  }
  out.label = traj.label + " [decorrelated seed " + std::to_string(seed) + "]";
  return out;
}

// ---------------------------------------------------------------------------

SiteStatistics site_statistics(const EnergyTrajectory& traj, std::size_t m) {
  require_site(traj, m, "site");
  const auto col = traj.frames.col(static_cast<Eigen::Index>(m));
  const double mean = col.mean();
  const double var = (col.array() - mean).square().mean();
  return {mean, std::sqrt(var)};
}

CorrelationFunction correlation(const EnergyTrajectory& traj, std::size_t m, std::size_t n, double max_lag_fs) {
  traj.validate();
  require_site(traj, m, "site_m");
  require_site(traj, n, "site_n");
  if (!(max_lag_fs >= 0.0) || !(max_lag_fs < traj.duration_fs()))
    throw InvalidInput("maximum lag must be shorter than the trajectory", "max_lag_fs");
  const std::size_t n_frames = traj.n_frames();
  const auto lags = static_cast<std::size_t>(std::floor(max_lag_fs / traj.dt_frame_fs + 1e-9)) + 1;

  const Eigen::VectorXd dm = traj.frames.col(static_cast<Eigen::Index>(m)).array() - traj.frames.col(static_cast<Eigen::Index>(m)).mean();
  const Eigen::VectorXd dn = traj.frames.col(static_cast<Eigen::Index>(n)).array() - traj.frames.col(static_cast<Eigen::Index>(n)).mean();

  CorrelationFunction c;
  c.dt_lag_fs = traj.dt_frame_fs;
  c.site_m = m;
  c.site_n = n;
  c.n_samples = n_frames;
  c.values.resize(lags);
  for (std::size_t k = 0; k < lags; ++k) {
    const auto len = static_cast<Eigen::Index>(n_frames - k);
    c.values[k] = dm.segment(static_cast<Eigen::Index>(k), len).dot(dn.head(len)) / static_cast<double>(n_frames);
  }
  return c;
}

double fit_correlation_time(const CorrelationFunction& corr, double t_max_fs) {
  if (corr.values.empty() || !(corr.values[0] > 0.0)) throw InvalidInput("correlation has no positive zero-lag value", "correlation");
  double sty = 0.0;
  double stt = 0.0;
  for (std::size_t k = 1; k < corr.values.size(); ++k) {
    const double t = static_cast<double>(k) * corr.dt_lag_fs;
    if (t > t_max_fs * (1.0 + 1e-12)) break;
    if (!(corr.values[k] > 0.0)) break;
    const double y = std::log(corr.values[k] / corr.values[0]);
    sty += t * y;
    stt += t * t;
  }
  if (stt == 0.0) throw InvalidInput("no positive lags inside the fit window", "fit_window_fs");
  const double slope = sty / stt;
  if (!(slope < 0.0)) throw InvalidInput("correlation does not decay inside the fit window", "fit_window_fs");
  return -1.0 / slope;
}

std::vector<double> cosine_transform(const CorrelationFunction& corr, const std::vector<double>& omega,
                                     const CosineTransformOptions& opts) {
  const std::size_t lags = corr.values.size();
  if (lags < 2) throw InvalidInput("correlation needs at least two lags", "correlation");
  const double dt = corr.dt_lag_fs;
  const double window = opts.window_fs > 0.0 ? opts.window_fs : 0.5 * dt * static_cast<double>(lags - 1);

  std::vector<double> weighted(lags);
  for (std::size_t k = 0; k < lags; ++k) {
    const double t = dt * static_cast<double>(k);
    const double trap = (k == 0 || k + 1 == lags) ? 0.5 : 1.0;
    weighted[k] = trap * dt * corr.values[k] * std::exp(-t * t / (2.0 * window * window));
  }
  std::vector<double> out(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const double w = omega[i] / units::hbar_cm1_fs;
    double acc = 0.0;
    for (std::size_t k = 0; k < lags; ++k) acc += weighted[k] * std::cos(w * dt * static_cast<double>(k));
    out[i] = acc;
  }
  return out;
}

SpectralDensity spectral_density(const CorrelationFunction& corr, const ThermalParams& thermal,
                                 const std::vector<double>& omega, const CosineTransformOptions& opts) {
  if (!corr.is_auto()) throw InvalidInput("spectral density requires an autocorrelation", "correlation");
  const auto raw = cosine_transform(corr, omega, opts);
  TabulatedSpectralDensity tab;
  tab.omega_cm1 = omega;
  tab.j_cm1.resize(omega.size());
  const double pref = 2.0 / (units::pi * units::hbar_cm1_fs);
  for (std::size_t i = 0; i < omega.size(); ++i) {
    if (!(omega[i] > 0.0)) {
      tab.j_cm1[i] = 0.0;
      continue;
    }
    tab.j_cm1[i] = std::max(0.0, pref * std::tanh(thermal.beta() * omega[i] / 2.0) * raw[i]);
  }
  return SpectralDensity(std::move(tab));
}

std::vector<double> linear_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw InvalidInput("grid needs step > 0 and max >= min", "omega_grid");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + step * static_cast<double>(i);
  return g;
}

}  // namespace eetsim
