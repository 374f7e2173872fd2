#pragma once

// Haken-Strobl-Reineker pure dephasing with site-dependent rates.

#include "eetsim/model.hpp"
#include "eetsim/propagator.hpp"

#include <optional>
#include <vector>

namespace eetsim {

struct DephasingRates {
  std::vector<double> rate_fs1;
  std::vector<double> sigma_cm1;
  std::vector<double> tau_fs;
  double temperature_K = 0.0;

  std::size_t size() const { return rate_fs1.size(); }
};

/// 2 sigma^2 tau / hbar^2 in fs^-1.
double dephasing_rate(double sigma_cm1, double tau_fs);

/// 2 sigma^2 tau / hbar, the same rate expressed as an energy width in cm^-1.
double dephasing_width(double sigma_cm1, double tau_fs);

/// Per-site rates; `tau_fs` holds one global value or one per site.
DephasingRates dephasing_rates(const std::vector<double>& sigma_cm1, const std::vector<double>& tau_fs,
                               double temperature_K = 0.0);

/// Rates from a trajectory's per-site standard deviations. Without a fixed
/// tau, each site's correlation time is fitted over lags in (0, fit_window].
DephasingRates dephasing_rates_from_trajectory(const EnergyTrajectory& traj, std::optional<double> tau_fs,
                                               double temperature_K = 0.0, double fit_window_fs = 10.0);

/// Explicit rates (fs^-1).
DephasingRates dephasing_rates_explicit(std::vector<double> rate_fs1);

struct HsrOptions {
  double max_step_fs = 0.5;
  double trace_tolerance = 1e-6;
};

/// drho/dt = -(i/hbar)[H, rho] - sum_m (gamma_m/2)(P_m rho + rho P_m - 2 P_m rho P_m),
/// RK4 with steps no larger than max_step_fs between consecutive grid points.
DensityTrace hsr_propagate(const DensityMatrix& rho0, const Eigen::MatrixXd& h_mean, const DephasingRates& rates,
                           const std::vector<double>& t_grid_fs, const HsrOptions& opts = {});

}  // namespace eetsim
