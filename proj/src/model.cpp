#include "eetsim/model.hpp"

#include "eetsim/error.hpp"
#include "eetsim/units.hpp"

#include <cmath>
#include <string>

namespace eetsim {

namespace {

constexpr double kSymmetryTol = 1e-12;

// Index of the first component whose magnitude is within rounding of the largest.
template <class Column>
Eigen::Index dominant_component(const Column& v) {
  double vmax = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) vmax = std::max(vmax, std::abs(v(i)));
  const double cut = vmax * (1.0 - 1e-10);
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) >= cut) return i;
  return 0;
}

}  // namespace

SiteSystem::SiteSystem(std::vector<double> mean_energies, Eigen::MatrixXd couplings, std::optional<Geometry> geometry)
    : mean_energies_(std::move(mean_energies)), couplings_(std::move(couplings)), geometry_(std::move(geometry)) {
  const auto n = static_cast<Eigen::Index>(mean_energies_.size());
  if (n < 1) throw InvalidInput("site system needs at least one site", "n_sites");
  if (couplings_.rows() != n || couplings_.cols() != n)
    throw InvalidInput("couplings must be an n_sites x n_sites matrix", "couplings_cm1");
  for (double e : mean_energies_)
    if (!std::isfinite(e)) throw InvalidInput("mean energies must be finite", "mean_energies_cm1");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (couplings_(i, i) != 0.0) throw InvalidInput("coupling diagonal must be zero", "couplings_cm1");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!std::isfinite(couplings_(i, j))) throw InvalidInput("couplings must be finite", "couplings_cm1");
      if (std::abs(couplings_(i, j) - couplings_(j, i)) > kSymmetryTol)
        throw InvalidInput("couplings must be symmetric", "couplings_cm1");
    }
  }
  if (geometry_) {
    const auto ns = static_cast<std::size_t>(n);
    if (geometry_->positions_A.size() != ns) throw InvalidInput("one position per site required", "geometry.positions_A");
    if (geometry_->dipoles.size() != ns) throw InvalidInput("one dipole per site required", "geometry.dipoles");
    const auto& r = geometry_->symmetry_axis;
    const double norm = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
    if (std::abs(norm - 1.0) > 1e-12) throw InvalidInput("symmetry axis must be a unit vector", "geometry.symmetry_axis");
  }
}

Eigen::MatrixXd SiteSystem::mean_hamiltonian() const {
  Eigen::MatrixXd h = couplings_;
  for (std::size_t m = 0; m < n_sites(); ++m) h(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)) = mean_energies_[m];
  return h;
}

void EnergyTrajectory::validate() const {
  if (!(dt_frame_fs > 0.0) || !std::isfinite(dt_frame_fs)) throw InvalidInput("frame spacing must be positive", "dt_frame_fs");
  if (frames.rows() < 2) throw InvalidInput("trajectory needs at least two frames", "frames");
  if (frames.cols() < 1) throw InvalidInput("trajectory needs at least one site", "frames");
  if (!frames.allFinite()) throw InvalidInput("trajectory contains non-finite energies", "frames");
}

PureState::PureState(Eigen::VectorXcd amplitudes) : amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() == 0) throw InvalidInput("empty state vector", "initial_state");
  if (std::abs(amplitudes_.squaredNorm() - 1.0) > 1e-10) throw InvalidInput("state vector must be normalized", "initial_state");
}

PureState PureState::site(std::size_t n_sites, std::size_t index) {
  if (index >= n_sites) throw InvalidInput("site index out of range", "initial_state");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n_sites));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return PureState(std::move(v));
}

DensityMatrix::DensityMatrix(Eigen::MatrixXcd elements) : elements_(std::move(elements)) {
  if (elements_.rows() == 0 || elements_.rows() != elements_.cols()) throw InvalidInput("density matrix must be square", "initial_state");
  if ((elements_ - elements_.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw InvalidInput("density matrix must be Hermitian", "initial_state");
  if (std::abs(elements_.trace() - Complex(1.0)) > 1e-10) throw InvalidInput("density matrix must have unit trace", "initial_state");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(elements_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-8) throw InvalidInput("density matrix must be positive semidefinite", "initial_state");
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
  return DensityMatrix(psi.amplitudes() * psi.amplitudes().adjoint());
}

double DensityMatrix::purity() const { return (elements_ * elements_).trace().real(); }

ThermalParams::ThermalParams(double temperature_K) : temperature_(temperature_K) {
  if (!(temperature_K > 0.0) || !std::isfinite(temperature_K)) throw InvalidInput("temperature must be positive", "temperature_K");
  beta_ = 1.0 / (units::kB_cm1_per_K * temperature_K);
}

Eigen::MatrixXd build_hamiltonian(const SiteSystem& system, const Eigen::Ref<const Eigen::VectorXd>& energies) {
  if (static_cast<std::size_t>(energies.size()) != system.n_sites())
    throw InvalidInput("energy vector length must equal n_sites (" + std::to_string(system.n_sites()) + ")", "energies");
  Eigen::MatrixXd h = system.couplings();
  h.diagonal() = energies;
  return h;
}

Eigen::MatrixXd build_hamiltonian(const SiteSystem& system, const std::vector<double>& energies) {
  return build_hamiltonian(system, Eigen::Map<const Eigen::VectorXd>(energies.data(), static_cast<Eigen::Index>(energies.size())));
}

void require_hermitian(const Eigen::MatrixXcd& h, double tol) {
  if (h.rows() == 0 || h.rows() != h.cols()) throw InvalidInput("Hamiltonian must be square and non-empty", "hamiltonian");
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > tol) throw InvalidInput("Hamiltonian is not Hermitian", "hamiltonian");
}

ExcitonBasis exciton_basis(const Eigen::MatrixXcd& h) {
  require_hermitian(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  ExcitonBasis b{es.eigenvalues(), es.eigenvectors()};
  for (Eigen::Index c = 0; c < b.coefficients.cols(); ++c) {
    auto col = b.coefficients.col(c);
    const Eigen::Index k = dominant_component(col);
    const Complex lead = col(k);
    col *= std::conj(lead) / std::abs(lead);
    col(k) = std::abs(col(k));
  }
  return b;
}

ExcitonBasis exciton_basis(const Eigen::MatrixXd& h) {
  if (h.rows() == 0 || h.rows() != h.cols()) throw InvalidInput("Hamiltonian must be square and non-empty", "hamiltonian");
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10) throw InvalidInput("Hamiltonian is not Hermitian", "hamiltonian");
  auto re = detail::real_eigen(h);
  return ExcitonBasis{std::move(re.energies), re.vectors.cast<Complex>()};
}

namespace detail {

RealEigen real_eigen(const Eigen::MatrixXd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  RealEigen out{es.eigenvalues(), es.eigenvectors()};
  apply_sign_convention(out.vectors);
  return out;
}

void apply_sign_convention(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    auto col = vectors.col(c);
    if (col(dominant_component(col)) < 0.0) col = -col;
  }
}

}  // namespace detail

double pairwise_coherence(const Eigen::MatrixXcd& rho, std::size_t m, std::size_t n) {
  const auto dim = static_cast<std::size_t>(rho.rows());
  if (m == n) throw InvalidInput("pairwise coherence needs two distinct sites", "pair");
  if (m >= dim || n >= dim) throw InvalidInput("site index out of range", "pair");
  return 2.0 * std::abs(rho(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)));
}

double pairwise_coherence(const DensityMatrix& rho, std::size_t m, std::size_t n) {
  return pairwise_coherence(rho.elements(), m, n);
}

Eigen::VectorXd exciton_populations(const Eigen::MatrixXcd& rho, const ExcitonBasis& basis) {
  const Eigen::MatrixXcd r = basis.coefficients.adjoint() * rho * basis.coefficients;
  return r.diagonal().real();
}

}  // namespace eetsim
