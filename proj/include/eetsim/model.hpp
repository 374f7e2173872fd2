#pragma once

// Frenkel-exciton model: static site description, instantaneous Hamiltonians,
// states and the instantaneous eigen (exciton) basis.

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace eetsim {

using Complex = std::complex<double>;
using Vec3 = std::array<double, 3>;

/// Site geometry used by the dichroism spectra.
struct Geometry {
  std::vector<Vec3> positions_A;  // R_m
  std::vector<Vec3> dipoles;      // d_m
  Vec3 symmetry_axis{0.0, 0.0, 1.0};
};

/// Static N-site exciton model. Mean site energies and couplings in cm^-1.
class SiteSystem {
 public:
  SiteSystem(std::vector<double> mean_energies, Eigen::MatrixXd couplings,
             std::optional<Geometry> geometry = std::nullopt);

  std::size_t n_sites() const { return mean_energies_.size(); }
  const std::vector<double>& mean_energies() const { return mean_energies_; }
  const Eigen::MatrixXd& couplings() const { return couplings_; }
  const std::optional<Geometry>& geometry() const { return geometry_; }

  /// Time-independent H_S: mean energies on the diagonal plus couplings.
  Eigen::MatrixXd mean_hamiltonian() const;

 private:
  std::vector<double> mean_energies_;
  Eigen::MatrixXd couplings_;
  std::optional<Geometry> geometry_;
};

/// Time-discretized site energies, frames(k, m) = eps_m(k * dt_frame) in cm^-1.
struct EnergyTrajectory {
  double dt_frame_fs = 0.0;
  Eigen::MatrixXd frames;
  std::string label;

  std::size_t n_frames() const { return static_cast<std::size_t>(frames.rows()); }
  std::size_t n_sites() const { return static_cast<std::size_t>(frames.cols()); }
  double duration_fs() const { return dt_frame_fs * static_cast<double>(n_frames() - 1); }

  /// Throws InvalidInput unless dt > 0, n_frames >= 2 and all entries are finite.
  void validate() const;
};

/// Normalized state vector in the site basis.
class PureState {
 public:
  explicit PureState(Eigen::VectorXcd amplitudes);

  static PureState site(std::size_t n_sites, std::size_t index);

  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }
  std::size_t dim() const { return static_cast<std::size_t>(amplitudes_.size()); }

 private:
  Eigen::VectorXcd amplitudes_;
};

/// Hermitian, unit-trace, positive semidefinite density matrix.
class DensityMatrix {
 public:
  explicit DensityMatrix(Eigen::MatrixXcd elements);

  static DensityMatrix from_pure(const PureState& psi);

  const Eigen::MatrixXcd& elements() const { return elements_; }
  std::size_t dim() const { return static_cast<std::size_t>(elements_.rows()); }
  double purity() const;

 private:
  Eigen::MatrixXcd elements_;
};

/// Eigenvalues (ascending) and eigenvectors (columns) of an instantaneous
/// Hamiltonian. Each column is phased so its largest-magnitude component is
/// real and positive. Inside an exactly degenerate block any orthonormal basis
/// may be returned; rates and populations are invariant under that choice.
struct ExcitonBasis {
  Eigen::VectorXd energies;
  Eigen::MatrixXcd coefficients;  // coefficients(m, M) = c_m(M)

  std::size_t dim() const { return static_cast<std::size_t>(energies.size()); }
  double transition_energy(std::size_t from, std::size_t to) const {
    return energies(static_cast<Eigen::Index>(from)) - energies(static_cast<Eigen::Index>(to));
  }
};

/// Bath temperature and the derived inverse energy beta = 1 / (k_B T), in cm.
class ThermalParams {
 public:
  explicit ThermalParams(double temperature_K);

  double temperature() const { return temperature_; }
  double beta() const { return beta_; }

 private:
  double temperature_;
  double beta_;
};

/// H_eff = diag(instantaneous_energies) + couplings.
Eigen::MatrixXd build_hamiltonian(const SiteSystem& system, const std::vector<double>& instantaneous_energies);
Eigen::MatrixXd build_hamiltonian(const SiteSystem& system, const Eigen::Ref<const Eigen::VectorXd>& instantaneous_energies);

/// Throws InvalidInput if `h` is not square or not Hermitian within `tol`.
void require_hermitian(const Eigen::MatrixXcd& h, double tol = 1e-10);

ExcitonBasis exciton_basis(const Eigen::MatrixXcd& h);
ExcitonBasis exciton_basis(const Eigen::MatrixXd& h);

/// 2 |rho_mn|, the pairwise coherence (concurrence) of sites m != n.
double pairwise_coherence(const DensityMatrix& rho, std::size_t m, std::size_t n);
double pairwise_coherence(const Eigen::MatrixXcd& rho, std::size_t m, std::size_t n);

/// Populations of the exciton states, <M| rho |M>.
Eigen::VectorXd exciton_populations(const Eigen::MatrixXcd& rho, const ExcitonBasis& basis);

namespace detail {

// Real-symmetric eigendecomposition with the sign convention applied; used on
// hot paths where H is real.
struct RealEigen {
  Eigen::VectorXd energies;
  Eigen::MatrixXd vectors;
};

RealEigen real_eigen(const Eigen::MatrixXd& h);

// Flips each column so its largest-magnitude component is positive.
void apply_sign_convention(Eigen::MatrixXd& vectors);

}  // namespace detail

}  // namespace eetsim
