#include "eetsim/hsr.hpp"

#include "eetsim/error.hpp"
#include "eetsim/noise.hpp"
#include "eetsim/units.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace eetsim {

double dephasing_rate(double sigma_cm1, double tau_fs) {
  if (!(sigma_cm1 >= 0.0) || !std::isfinite(sigma_cm1)) throw InvalidInput("sigma must be nonnegative", "sigma_cm1");
  if (!(tau_fs > 0.0) || !std::isfinite(tau_fs)) throw InvalidInput("tau must be positive", "tau_fs");
  return 2.0 * sigma_cm1 * sigma_cm1 * tau_fs / (units::hbar_cm1_fs * units::hbar_cm1_fs);
}

double dephasing_width(double sigma_cm1, double tau_fs) { return dephasing_rate(sigma_cm1, tau_fs) * units::hbar_cm1_fs; }

DephasingRates dephasing_rates(const std::vector<double>& sigma_cm1, const std::vector<double>& tau_fs, double temperature_K) {
  if (sigma_cm1.empty()) throw InvalidInput("at least one site sigma is required", "sigma_cm1");
  if (tau_fs.size() != 1 && tau_fs.size() != sigma_cm1.size())
    throw InvalidInput("tau must be a single value or one per site", "tau_fs");
  DephasingRates out;
  out.sigma_cm1 = sigma_cm1;
  out.temperature_K = temperature_K;
  for (std::size_t m = 0; m < sigma_cm1.size(); ++m) {
    const double tau = tau_fs.size() == 1 ? tau_fs[0] : tau_fs[m];
    out.tau_fs.push_back(tau);
    out.rate_fs1.push_back(dephasing_rate(sigma_cm1[m], tau));
  }
  return out;
}

DephasingRates dephasing_rates_from_trajectory(const EnergyTrajectory& traj, std::optional<double> tau_fs,
                                               double temperature_K, double fit_window_fs) {
  traj.validate();
  std::vector<double> sigma;
  std::vector<double> tau;
  for (std::size_t m = 0; m < traj.n_sites(); ++m) {
    sigma.push_back(site_statistics(traj, m).sigma_cm1);
    if (!tau_fs) {
      const auto corr = correlation(traj, m, m, std::min(fit_window_fs, traj.duration_fs() - traj.dt_frame_fs));
      tau.push_back(fit_correlation_time(corr, fit_window_fs));
    }
  }
  if (tau_fs) tau.assign(1, *tau_fs);
  return dephasing_rates(sigma, tau, temperature_K);
}

DephasingRates dephasing_rates_explicit(std::vector<double> rate_fs1) {
  if (rate_fs1.empty()) throw InvalidInput("at least one rate is required", "rates_fs1");
  for (double r : rate_fs1)
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidInput("dephasing rates must be nonnegative", "rates_fs1");
  DephasingRates out;
  out.rate_fs1 = std::move(rate_fs1);
  return out;
}

DensityTrace hsr_propagate(const DensityMatrix& rho0, const Eigen::MatrixXd& h_mean, const DephasingRates& rates,
                           const std::vector<double>& t_grid_fs, const HsrOptions& opts) {
  const auto n = static_cast<Eigen::Index>(rho0.dim());
  if (h_mean.rows() != n || h_mean.cols() != n) throw InvalidInput("Hamiltonian and density matrix dimensions differ", "hamiltonian");
  if ((h_mean - h_mean.transpose()).cwiseAbs().maxCoeff() > 1e-10) throw InvalidInput("Hamiltonian is not Hermitian", "hamiltonian");
  if (static_cast<Eigen::Index>(rates.size()) != n) throw InvalidInput("one dephasing rate per site required", "rates");
  for (double r : rates.rate_fs1)
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidInput("dephasing rates must be nonnegative", "rates");
  if (t_grid_fs.empty()) throw InvalidInput("time grid is empty", "t_grid");
  for (std::size_t k = 1; k < t_grid_fs.size(); ++k)
    if (!(t_grid_fs[k] > t_grid_fs[k - 1])) throw InvalidInput("time grid must be strictly increasing", "t_grid");
  if (!(opts.max_step_fs > 0.0)) throw InvalidInput("max_step_fs must be positive", "max_step_fs");

  // The commutator ignores a multiple of the identity; removing the mean
  // diagonal keeps the RK4 phase error set by the band width only.
  Eigen::MatrixXd h = h_mean;
  h.diagonal().array() -= h.trace() / static_cast<double>(n);
  const Eigen::MatrixXcd a = h.cast<Complex>() * Complex(0.0, -1.0 / units::hbar_cm1_fs);
  Eigen::MatrixXd damp(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) damp(i, j) = i == j ? 0.0 : 0.5 * (rates.rate_fs1[i] + rates.rate_fs1[j]);

  // Step limit: 0.5 fs, and small enough that the fastest frequency stays well
  // inside the RK4 accuracy region.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
  const double band = es.eigenvalues().maxCoeff() - es.eigenvalues().minCoeff();
  const double gmax = damp.size() ? damp.maxCoeff() : 0.0;
  const double fastest = band / units::hbar_cm1_fs + gmax;
  const double h_max = fastest > 0.0 ? std::min(opts.max_step_fs, 0.05 / fastest) : opts.max_step_fs;

  auto deriv = [&](const Eigen::MatrixXcd& r) -> Eigen::MatrixXcd {
    Eigen::MatrixXcd d = a * r - r * a;
    d.array() -= damp.array().cast<Complex>() * r.array();
    return d;
  };

  DensityTrace trace;
  trace.method = Method::HSR;
  trace.temperature_K = rates.temperature_K;
  trace.n_traj = 1;
  trace.times_fs = t_grid_fs;
  Eigen::MatrixXcd rho = rho0.elements();
  trace.rho.push_back(rho);
  for (std::size_t k = 1; k < t_grid_fs.size(); ++k) {
    const double span = t_grid_fs[k] - t_grid_fs[k - 1];
    const auto n_sub = static_cast<std::size_t>(std::ceil(span / h_max - 1e-9));
    const double step = span / static_cast<double>(n_sub);
    for (std::size_t s = 0; s < n_sub; ++s) {
      const Eigen::MatrixXcd k1 = deriv(rho);
      const Eigen::MatrixXcd k2 = deriv(rho + 0.5 * step * k1);
      const Eigen::MatrixXcd k3 = deriv(rho + 0.5 * step * k2);
      const Eigen::MatrixXcd k4 = deriv(rho + step * k3);
      rho += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    const double drift = std::abs(rho.trace() - Complex(1.0));
    if (drift > opts.trace_tolerance || !rho.allFinite()) {
      std::ostringstream os;
      os << "trace drift " << drift << " at t = " << t_grid_fs[k] << " fs exceeds " << opts.trace_tolerance;
      throw IntegrationError(os.str());
    }
    trace.rho.push_back(rho);
  }
  return trace;
}

}  // namespace eetsim
