#pragma once

// Stochastic Schroedinger propagation under H_eff(t) = H_S + H_SB(t) and the
// classical ensemble average rho_S(t) = (1/M) sum_i |psi_i(t)><psi_i(t)|.

#include "eetsim/model.hpp"
#include "eetsim/noise.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace eetsim {

enum class Method { MD, QJC, HSR };

const char* method_name(Method m);

/// Site index (0-based), pure state, or mixed state.
using InitialState = std::variant<std::size_t, PureState, DensityMatrix>;

struct SimConfig {
  double dt_fs = 1.0;
  double t_total_fs = 1000.0;
  double output_dt_fs = 0.0;  // <= 0: every integration step
  std::size_t n_traj = 1;
  std::uint64_t seed = 0;
  Method method = Method::MD;
  InitialState initial_state = std::size_t{0};
  bool record_propagator = false;
  std::size_t workers = 0;  // 0: hardware concurrency
  double temperature_K = 0.0;  // metadata only

  void validate(std::size_t n_sites) const;
  std::size_t n_steps() const;
  std::size_t output_stride() const;
  std::vector<double> output_times() const;
};

/// Initial state as a density matrix, for any of the accepted forms.
DensityMatrix initial_density(const InitialState& init, std::size_t n_sites);

struct DensityTrace {
  std::vector<double> times_fs;
  std::vector<Eigen::MatrixXcd> rho;
  Method method = Method::MD;
  double temperature_K = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_traj = 0;
  /// Off-diagonal pairs (m < n) that carry data; unset means the full matrix.
  /// Traces read back from CSV only know the pairs that were written.
  std::optional<std::vector<std::pair<std::size_t, std::size_t>>> stored_pairs;

  std::size_t n_times() const { return times_fs.size(); }
  std::size_t n_sites() const { return rho.empty() ? 0 : static_cast<std::size_t>(rho.front().rows()); }
  double population(std::size_t k, std::size_t m) const;
  bool has_pair(std::size_t m, std::size_t n) const;
};

/// Ensemble-averaged site-basis propagator <U(t,0)>.
struct PropagatorRecord {
  std::vector<double> times_fs;
  std::vector<Eigen::MatrixXcd> mean_u;
  std::size_t n_traj = 0;

  double duration_fs() const { return times_fs.empty() ? 0.0 : times_fs.back() - times_fs.front(); }
};

struct EnsembleResult {
  DensityTrace trace;
  std::optional<PropagatorRecord> propagator;
};

/// psi' = exp(-i H dt / hbar) psi through the eigendecomposition of H.
PureState step_unitary(const PureState& psi, const Eigen::MatrixXcd& h, double dt_fs);

/// exp(-i H dt / hbar) for a Hermitian H.
Eigen::MatrixXcd unitary_step_matrix(const Eigen::MatrixXcd& h, double dt_fs);

/// Site energies on the integration grid seen by trajectory `traj_index`:
/// row k holds eps_m(k dt), recorded frames linearly interpolated.
Eigen::MatrixXd trajectory_energies(const SiteSystem& system, const FluctuationModel& fluct,
                                    const SimConfig& config, std::size_t traj_index);

/// Per-trajectory generator seed: splitmix64 hash of (master seed, index, stream).
std::uint64_t trajectory_seed(std::uint64_t master_seed, std::size_t traj_index, std::uint64_t stream);

struct TrajectoryRecord {
  std::vector<double> times_fs;
  std::vector<PureState> states;
  std::vector<Eigen::MatrixXcd> propagators;  // U(t,0)
};

/// One unitary trajectory from a pure initial state (site index or PureState).
TrajectoryRecord run_trajectory(const SiteSystem& system, const FluctuationModel& fluct, const SimConfig& config,
                                std::size_t traj_index);

/// Ensemble average over config.n_traj unitary trajectories. Mixed initial
/// states are propagated exactly: every trajectory contributes U rho0 U^dagger.
/// Output is bit-identical for any worker count.
EnsembleResult run_ensemble(const SiteSystem& system, const FluctuationModel& fluct, const SimConfig& config);

}  // namespace eetsim
