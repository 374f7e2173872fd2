#include "eetsim/propagator.hpp"

#include "engine.hpp"

#include "eetsim/error.hpp"
#include "eetsim/units.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace eetsim {

namespace {

std::size_t exact_ratio(double num, double den, const char* field, const char* what) {
  const double r = num / den;
  const double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > 1e-9 * std::max(1.0, n))
    throw InvalidInput(std::string(what) + " must be a positive integer multiple of dt_fs", field);
  return static_cast<std::size_t>(n);
}

// Columns X0 with rho0 = X0 X0^dagger.
Eigen::MatrixXcd state_factor(const InitialState& init, std::size_t n) {
  if (const auto* site = std::get_if<std::size_t>(&init)) return PureState::site(n, *site).amplitudes();
  if (const auto* psi = std::get_if<PureState>(&init)) return psi->amplitudes();
  const auto& rho = std::get<DensityMatrix>(init).elements();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j)
    if (es.eigenvalues()(j) > 1e-14) keep.push_back(j);
  Eigen::MatrixXcd x(rho.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    x.col(static_cast<Eigen::Index>(c)) = std::sqrt(es.eigenvalues()(keep[c])) * es.eigenvectors().col(keep[c]);
  return x;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::MD: return "MD";
    case Method::QJC: return "QJC";
    case Method::HSR: return "HSR";
  }
  return "?";
}

void SimConfig::validate(std::size_t n_sites) const {
  if (!(dt_fs > 0.0) || !std::isfinite(dt_fs)) throw InvalidInput("dt_fs must be positive", "dt_fs");
  if (!(t_total_fs >= dt_fs) || !std::isfinite(t_total_fs)) throw InvalidInput("t_total_fs must be at least dt_fs", "t_total_fs");
  if (n_traj < 1) throw InvalidInput("n_traj must be at least 1", "n_traj");
  exact_ratio(t_total_fs, dt_fs, "t_total_fs", "t_total_fs");
  if (output_dt_fs > 0.0) {
    exact_ratio(output_dt_fs, dt_fs, "output_dt_fs", "output_dt_fs");
    if (n_steps() % output_stride() != 0) throw InvalidInput("t_total_fs must be a multiple of output_dt_fs", "output_dt_fs");
  }
  std::visit(
      [n_sites](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, std::size_t>) {
          if (s >= n_sites) throw InvalidInput("initial site index out of range", "initial_state");
        } else {
          if (s.dim() != n_sites) throw InvalidInput("initial state dimension does not match n_sites", "initial_state");
        }
      },
      initial_state);
}

std::size_t SimConfig::n_steps() const { return static_cast<std::size_t>(std::llround(t_total_fs / dt_fs)); }

std::size_t SimConfig::output_stride() const {
  return output_dt_fs > 0.0 ? static_cast<std::size_t>(std::llround(output_dt_fs / dt_fs)) : 1;
}

std::vector<double> SimConfig::output_times() const {
  const std::size_t stride = output_stride();
  std::vector<double> t;
  for (std::size_t k = 0; k <= n_steps(); k += stride) t.push_back(dt_fs * static_cast<double>(k));
  return t;
}

DensityMatrix initial_density(const InitialState& init, std::size_t n_sites) {
  if (const auto* rho = std::get_if<DensityMatrix>(&init)) {
    if (rho->dim() != n_sites) throw InvalidInput("initial state dimension does not match n_sites", "initial_state");
    return *rho;
  }
  const Eigen::MatrixXcd x = state_factor(init, n_sites);
  if (static_cast<std::size_t>(x.rows()) != n_sites) throw InvalidInput("initial state dimension does not match n_sites", "initial_state");
  return DensityMatrix(x * x.adjoint());
}

double DensityTrace::population(std::size_t k, std::size_t m) const {
  return rho.at(k)(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)).real();
}

bool DensityTrace::has_pair(std::size_t m, std::size_t n) const {
  if (!stored_pairs) return true;
  const std::pair<std::size_t, std::size_t> p(std::min(m, n), std::max(m, n));
  return std::find(stored_pairs->begin(), stored_pairs->end(), p) != stored_pairs->end();
}

Eigen::MatrixXcd unitary_step_matrix(const Eigen::MatrixXcd& h, double dt_fs) {
  require_hermitian(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const double f = dt_fs / units::hbar_cm1_fs;
  Eigen::VectorXcd phase(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < phase.size(); ++i) phase(i) = std::polar(1.0, -es.eigenvalues()(i) * f);
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

PureState step_unitary(const PureState& psi, const Eigen::MatrixXcd& h, double dt_fs) {
  if (static_cast<std::size_t>(h.rows()) != psi.dim()) throw InvalidInput("Hamiltonian and state dimensions differ", "hamiltonian");
  Eigen::VectorXcd next = unitary_step_matrix(h, dt_fs) * psi.amplitudes();
  next /= next.norm();
  return PureState(std::move(next));
}

std::uint64_t trajectory_seed(std::uint64_t master_seed, std::size_t traj_index, std::uint64_t stream) {
  using detail::splitmix64;
  return splitmix64(splitmix64(splitmix64(master_seed) ^ static_cast<std::uint64_t>(traj_index)) ^ (stream + 1));
}

Eigen::MatrixXd trajectory_energies(const SiteSystem& system, const FluctuationModel& fluct, const SimConfig& config,
                                    std::size_t traj_index) {
  config.validate(system.n_sites());
  validate_fluctuation(fluct, system.n_sites());
  Rng rng(trajectory_seed(config.seed, traj_index, detail::kNoiseStream));
  const auto path = detail::make_energy_path(system, fluct, config, rng);
  if (!path.is_static) return path.energies;
  return path.energies.replicate(static_cast<Eigen::Index>(config.n_steps() + 1), 1);
}

namespace {

// Propagates the column block x under one trajectory's Hamiltonian, calling
// visit(output_index, x) at every output time.
template <class Visit>
void propagate(const SiteSystem& system, const detail::EnergyPath& path, const SimConfig& config, Eigen::MatrixXcd& x,
               Visit&& visit) {
  detail::InstantaneousBasis basis(system);
  detail::StepKernel kernel;
  const std::size_t steps = config.n_steps();
  const std::size_t stride = config.output_stride();
  if (path.is_static) kernel.reset(basis.update(path.row(0)), config.dt_fs, true);
  visit(std::size_t{0}, x);
  for (std::size_t k = 0; k < steps; ++k) {
    if (!path.is_static) kernel.reset(basis.update(path.row(k)), config.dt_fs, false);
    kernel.apply(x);
    if ((k + 1) % stride == 0) visit((k + 1) / stride, x);
  }
}

}  // namespace

TrajectoryRecord run_trajectory(const SiteSystem& system, const FluctuationModel& fluct, const SimConfig& config,
                                std::size_t traj_index) {
  const std::size_t n = system.n_sites();
  config.validate(n);
  validate_fluctuation(fluct, n);
  if (std::holds_alternative<DensityMatrix>(config.initial_state))
    throw InvalidInput("single trajectories need a pure initial state", "initial_state");
  const Eigen::VectorXcd psi0 = state_factor(config.initial_state, n).col(0);

  Rng rng(trajectory_seed(config.seed, traj_index, detail::kNoiseStream));
  const auto path = detail::make_energy_path(system, fluct, config, rng);

  TrajectoryRecord rec;
  rec.times_fs = config.output_times();
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  propagate(system, path, config, u, [&](std::size_t, const Eigen::MatrixXcd& x) {
    rec.propagators.push_back(x);
    Eigen::VectorXcd psi = x * psi0;
    psi /= psi.norm();
    rec.states.emplace_back(std::move(psi));
  });
  return rec;
}

EnsembleResult run_ensemble(const SiteSystem& system, const FluctuationModel& fluct, const SimConfig& config) {
  const std::size_t n = system.n_sites();
  config.validate(n);
  validate_fluctuation(fluct, n);

  const auto times = config.output_times();
  const std::size_t n_out = times.size();
  const std::size_t nn = n * n;
  const bool with_u = config.record_propagator;
  const auto ni = static_cast<Eigen::Index>(n);

  const DensityMatrix rho0 = initial_density(config.initial_state, n);
  const Eigen::MatrixXcd x0 = with_u ? Eigen::MatrixXcd::Identity(ni, ni) : state_factor(config.initial_state, n);

  const std::size_t acc_size = n_out * nn * (with_u ? 2 : 1);
  auto kernel = [&](std::size_t i, std::vector<Complex>& acc) {
    Rng rng(trajectory_seed(config.seed, i, detail::kNoiseStream));
    const auto path = detail::make_energy_path(system, fluct, config, rng);
    Eigen::MatrixXcd x = x0;
    propagate(system, path, config, x, [&](std::size_t k, const Eigen::MatrixXcd& xk) {
      Eigen::Map<Eigen::MatrixXcd> rho(acc.data() + k * nn, ni, ni);
      if (with_u) {
        rho.noalias() += xk * rho0.elements() * xk.adjoint();
        Eigen::Map<Eigen::MatrixXcd>(acc.data() + (n_out + k) * nn, ni, ni) += xk;
      } else {
        rho.noalias() += xk * xk.adjoint();
      }
    });
  };
  const auto total = detail::reduce_trajectories(config.n_traj, config.workers, acc_size, kernel);

  const double inv_m = 1.0 / static_cast<double>(config.n_traj);
  EnsembleResult out;
  out.trace.times_fs = times;
  out.trace.method = Method::MD;
  out.trace.temperature_K = config.temperature_K;
  out.trace.seed = config.seed;
  out.trace.n_traj = config.n_traj;
  out.trace.rho.reserve(n_out);
  for (std::size_t k = 0; k < n_out; ++k) {
    Eigen::MatrixXcd r = Eigen::Map<const Eigen::MatrixXcd>(total.data() + k * nn, ni, ni) * inv_m;
    r = 0.5 * (r + r.adjoint()).eval();
    out.trace.rho.push_back(std::move(r));
  }
  if (with_u) {
    PropagatorRecord rec;
    rec.times_fs = times;
    rec.n_traj = config.n_traj;
    for (std::size_t k = 0; k < n_out; ++k)
      rec.mean_u.emplace_back(Eigen::Map<const Eigen::MatrixXcd>(total.data() + (n_out + k) * nn, ni, ni) * inv_m);
    out.propagator = std::move(rec);
  }
  return out;
}

}  // namespace eetsim
