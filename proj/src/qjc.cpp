#include "eetsim/qjc.hpp"

#include "engine.hpp"

#include "eetsim/error.hpp"
#include "eetsim/units.hpp"

#include <cmath>
#include <sstream>

namespace eetsim {

namespace {

// rates(M, N) from eigenvalues and squared eigenvector magnitudes.
Eigen::MatrixXd rate_matrix(const Eigen::VectorXd& energies, const Eigen::MatrixXd& weights, const SpectralDensity& sd) {
  const Eigen::Index n = energies.size();
  const Eigen::MatrixXd overlap = weights.transpose() * weights;
  Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const double w = energies(a) - energies(b);
      if (w <= kDegenerateGap_cm1) continue;
      rates(a, b) = 2.0 * units::pi * sd(w) / units::hbar_cm1_fs * overlap(a, b);
    }
  }
  return rates;
}

void check_step(const Eigen::VectorXd& total_out, double dt_fs) {
  const double worst = total_out.size() ? total_out.maxCoeff() * dt_fs : 0.0;
  if (worst >= kMaxJumpProbability) {
    std::ostringstream os;
    os << "jump probability per step " << worst << " exceeds " << kMaxJumpProbability << "; reduce dt_fs below "
       << dt_fs * kMaxJumpProbability / worst << " fs";
    throw StepSizeError(os.str());
  }
}

// One jump-or-damp update on eigenbasis amplitudes c. Returns true on a jump.
bool jump_or_damp(Eigen::VectorXcd& c, const Eigen::VectorXd& energies, const Eigen::MatrixXd& rates,
                  const Eigen::VectorXd& total_out, double dt_fs, Rng& rng) {
  const Eigen::Index n = c.size();
  const Eigen::VectorXd pop = c.cwiseAbs2();
  double p_total = 0.0;
  for (Eigen::Index a = 0; a < n; ++a) p_total += dt_fs * total_out(a) * pop(a);
  if (p_total > 1.0) throw StepSizeError("total jump probability exceeds one; reduce dt_fs");

  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(rng);
  const double f = dt_fs / units::hbar_cm1_fs;
  if (u < p_total) {
    double acc = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        acc += dt_fs * rates(a, b) * pop(a);
        if (u < acc) {
          c.setZero();
          c(b) = std::polar(1.0, -energies(b) * f);
          return true;
        }
      }
    }
    // Rounding left u just above the last partial sum: take the last open channel.
    for (Eigen::Index a = n - 1; a >= 0; --a)
      for (Eigen::Index b = n - 1; b >= 0; --b)
        if (rates(a, b) > 0.0 && pop(a) > 0.0) {
          c.setZero();
          c(b) = std::polar(1.0, -energies(b) * f);
          return true;
        }
  }
  for (Eigen::Index a = 0; a < n; ++a) c(a) *= std::polar(std::exp(-0.5 * total_out(a) * dt_fs), -energies(a) * f);
  c /= c.norm();
  return false;
}

}  // namespace

RateTable zp_rates(const ExcitonBasis& basis, const SpectralDensity& sd) {
  if (basis.dim() == 0 || basis.coefficients.rows() != basis.coefficients.cols() ||
      static_cast<std::size_t>(basis.coefficients.rows()) != basis.dim())
    throw InvalidInput("exciton basis dimensions are inconsistent", "basis");
  return RateTable{basis, rate_matrix(basis.energies, basis.coefficients.cwiseAbs2(), sd)};
}

PureState mcwf_step(const PureState& psi, const Eigen::MatrixXcd& h, const RateTable& rates, double dt_fs, Rng& rng) {
  require_hermitian(h);
  const auto n = static_cast<Eigen::Index>(psi.dim());
  if (h.rows() != n || static_cast<Eigen::Index>(rates.basis.dim()) != n || rates.rates.rows() != n)
    throw InvalidInput("state, Hamiltonian and rate table dimensions differ", "rates");
  if (!(dt_fs > 0.0)) throw InvalidInput("dt_fs must be positive", "dt_fs");
  const Eigen::VectorXd total_out = rates.total_out();
  if (total_out.maxCoeff() == 0.0) return step_unitary(psi, h, dt_fs);
  check_step(total_out, dt_fs);

  const Eigen::MatrixXcd& v = rates.basis.coefficients;
  Eigen::VectorXcd c = v.adjoint() * psi.amplitudes();
  jump_or_damp(c, rates.basis.energies, rates.rates, total_out, dt_fs, rng);
  Eigen::VectorXcd next = v * c;
  next /= next.norm();
  return PureState(std::move(next));
}

DensityTrace run_ensemble_qjc(const SiteSystem& system, const FluctuationModel& fluct, const SpectralDensity& sd,
                              const SimConfig& config) {
  const std::size_t n = system.n_sites();
  config.validate(n);
  validate_fluctuation(fluct, n);
  if (config.record_propagator) throw InvalidInput("propagator records are only available for the MD method", "record_propagator");

  const auto times = config.output_times();
  const std::size_t n_out = times.size();
  const std::size_t nn = n * n;
  const auto ni = static_cast<Eigen::Index>(n);

  // Pure components (weight, state) of the initial density matrix.
  std::vector<std::pair<double, Eigen::VectorXcd>> components;
  if (const auto* rho = std::get_if<DensityMatrix>(&config.initial_state)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho->elements());
    for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j)
      if (es.eigenvalues()(j) > 1e-14) components.emplace_back(es.eigenvalues()(j), es.eigenvectors().col(j));
  } else if (const auto* psi = std::get_if<PureState>(&config.initial_state)) {
    components.emplace_back(1.0, psi->amplitudes());
  } else {
    components.emplace_back(1.0, PureState::site(n, std::get<std::size_t>(config.initial_state)).amplitudes());
  }

  auto kernel = [&](std::size_t i, std::vector<Complex>& acc) {
    Rng noise(trajectory_seed(config.seed, i, detail::kNoiseStream));
    Rng jumps(trajectory_seed(config.seed, i, detail::kJumpStream));
    const auto path = detail::make_energy_path(system, fluct, config, noise);
    detail::InstantaneousBasis basis(system);
    detail::StepKernel step;
    Eigen::MatrixXd rates;
    Eigen::VectorXd total_out;
    auto refresh = [&](const detail::RealEigen& eig, bool cache) {
      step.reset(eig, config.dt_fs, cache);
      rates = rate_matrix(eig.energies, eig.vectors.cwiseAbs2(), sd);
      total_out = rates.rowwise().sum();
      check_step(total_out, config.dt_fs);
    };

    for (const auto& [weight, psi0] : components) {
      Eigen::MatrixXcd x = psi0;
      auto record = [&](std::size_t k) {
        Eigen::Map<Eigen::MatrixXcd> rho(acc.data() + k * nn, ni, ni);
        if (weight == 1.0) {
          rho.noalias() += x * x.adjoint();
        } else {
          rho.noalias() += weight * (x * x.adjoint());
        }
      };
      if (path.is_static) refresh(basis.update(path.row(0)), true);
      record(0);
      const std::size_t stride = config.output_stride();
      Eigen::VectorXcd c(ni);
      for (std::size_t k = 0; k < config.n_steps(); ++k) {
        if (!path.is_static) refresh(basis.update(path.row(k)), false);
        if (total_out.maxCoeff() == 0.0) {
          step.apply(x);
        } else {
          const auto& eig = basis.current();
          c.noalias() = eig.vectors.transpose() * x.col(0);
          jump_or_damp(c, eig.energies, rates, total_out, config.dt_fs, jumps);
          x.col(0).noalias() = eig.vectors * c;
          x.col(0) /= x.col(0).norm();
        }
        if ((k + 1) % stride == 0) record((k + 1) / stride);
      }
    }
  };
  const auto total = detail::reduce_trajectories(config.n_traj, config.workers, n_out * nn, kernel);

  const double inv_m = 1.0 / static_cast<double>(config.n_traj);
  DensityTrace trace;
  trace.times_fs = times;
  trace.method = Method::QJC;
  trace.temperature_K = config.temperature_K;
  trace.seed = config.seed;
  trace.n_traj = config.n_traj;
  for (std::size_t k = 0; k < n_out; ++k) {
    Eigen::MatrixXcd r = Eigen::Map<const Eigen::MatrixXcd>(total.data() + k * nn, ni, ni) * inv_m;
    r = 0.5 * (r + r.adjoint()).eval();
    trace.rho.push_back(std::move(r));
  }
  return trace;
}

}  // namespace eetsim
