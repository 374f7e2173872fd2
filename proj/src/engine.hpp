#pragma once

// Internal machinery shared by the MD and QJC ensemble drivers.

#include "eetsim/model.hpp"
#include "eetsim/noise.hpp"
#include "eetsim/propagator.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace eetsim::detail {

inline constexpr std::uint64_t kNoiseStream = 0;
inline constexpr std::uint64_t kJumpStream = 1;

std::uint64_t splitmix64(std::uint64_t x);

/// Site energies on the integration grid for one trajectory. Static sources
/// store a single row.
struct EnergyPath {
  bool is_static = false;
  Eigen::MatrixXd energies;

  auto row(std::size_t k) const { return energies.row(is_static ? 0 : static_cast<Eigen::Index>(k)); }
};

EnergyPath make_energy_path(const SiteSystem& system, const FluctuationModel& fluct, const SimConfig& config, Rng& rng);

/// Reusable real-symmetric eigensolver for the per-step Hamiltonian.
class InstantaneousBasis {
 public:
  explicit InstantaneousBasis(const SiteSystem& system);

  const RealEigen& update(const Eigen::Ref<const Eigen::RowVectorXd>& energies);
  const RealEigen& current() const { return eig_; }

 private:
  Eigen::MatrixXd h_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver_;
  RealEigen eig_;
};

/// exp(-i H dt / hbar) applied through an eigendecomposition. With a dense
/// matrix cached (static H) the step is a single product.
class StepKernel {
 public:
  void reset(const RealEigen& eig, double dt_fs, bool cache_dense);
  void apply(Eigen::MatrixXcd& x) const;
  const Eigen::VectorXcd& phases() const { return phase_; }

 private:
  const RealEigen* eig_ = nullptr;
  Eigen::VectorXcd phase_;
  Eigen::MatrixXcd dense_;
  bool dense_valid_ = false;
  mutable Eigen::MatrixXcd work_;
};

/// Adds one trajectory's contribution into a flat accumulator.
using TrajectoryKernel = std::function<void(std::size_t traj_index, std::vector<Complex>& acc)>;

/// Runs n_traj trajectories in a fixed block layout and folds block sums in
/// block order, so the result does not depend on the number of workers.
std::vector<Complex> reduce_trajectories(std::size_t n_traj, std::size_t workers, std::size_t acc_size,
                                         const TrajectoryKernel& kernel);

std::size_t resolve_workers(std::size_t requested);

}  // namespace eetsim::detail
