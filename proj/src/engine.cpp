#include "engine.hpp"

#include "eetsim/error.hpp"
#include "eetsim/units.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

namespace eetsim::detail {

namespace {

constexpr std::size_t kMaxBlocks = 64;

// Position of time t on a grid of spacing dt, snapped to the nearest node
// when within rounding of it.
void grid_position(double t, double dt, std::size_t& index, double& frac) {
  double s = t / dt;
  const double r = std::round(s);
  if (std::abs(s - r) < 1e-9) s = r;
  index = static_cast<std::size_t>(std::floor(s));
  frac = s - static_cast<double>(index);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

EnergyPath make_energy_path(const SiteSystem& system, const FluctuationModel& fluct, const SimConfig& config, Rng& rng) {
  const std::size_t n = system.n_sites();
  const auto ni = static_cast<Eigen::Index>(n);
  const std::size_t n_points = config.n_steps() + 1;
  const Eigen::Map<const Eigen::RowVectorXd> mean(system.mean_energies().data(), ni);

  EnergyPath path;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, NoFluctuation>) {
          path.is_static = true;
          path.energies = mean;
        } else if constexpr (std::is_same_v<T, StaticDisorder>) {
          path.is_static = true;
          path.energies = mean;
          std::normal_distribution<double> normal;
          for (std::size_t m = 0; m < n; ++m) path.energies(0, static_cast<Eigen::Index>(m)) += f.sigma_cm1[m] * normal(rng);
        } else if constexpr (std::is_same_v<T, Ar1Noise>) {
          const auto n_ar = static_cast<std::size_t>(std::ceil(config.t_total_fs / f.dt_fs - 1e-9)) + 2;
          std::vector<double> series(n_ar);
          path.energies.resize(static_cast<Eigen::Index>(n_points), ni);
          for (std::size_t m = 0; m < n; ++m) {
            ar1_fill(rng, f.sigma_cm1[m], f.tau_fs[m], f.dt_fs, series);
            for (std::size_t k = 0; k < n_points; ++k) {
              std::size_t i = 0;
              double frac = 0.0;
              grid_position(config.dt_fs * static_cast<double>(k), f.dt_fs, i, frac);
              const double x = frac == 0.0 ? series[i] : (1.0 - frac) * series[i] + frac * series[i + 1];
              path.energies(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) = mean(static_cast<Eigen::Index>(m)) + x;
            }
          }
        } else if constexpr (std::is_same_v<T, RecordedNoise>) {
          const EnergyTrajectory& traj = *f.trajectory;
          if (f.window_fs < config.t_total_fs * (1.0 - 1e-12))
            throw InvalidInput("recorded window (" + std::to_string(f.window_fs) + " fs) is shorter than t_total",
                               "fluctuation.window_fs");
          const std::size_t start = sample_window_start(traj, f.window_fs, rng);
          path.energies.resize(static_cast<Eigen::Index>(n_points), ni);
          for (std::size_t k = 0; k < n_points; ++k) {
            std::size_t i = 0;
            double frac = 0.0;
            grid_position(config.dt_fs * static_cast<double>(k), traj.dt_frame_fs, i, frac);
            const auto a = static_cast<Eigen::Index>(start + i);
            if (frac == 0.0) {
              path.energies.row(static_cast<Eigen::Index>(k)) = traj.frames.row(a);
            } else {
              path.energies.row(static_cast<Eigen::Index>(k)) = (1.0 - frac) * traj.frames.row(a) + frac * traj.frames.row(a + 1);
            }
          }
        }
      },
      fluct);
  return path;
}

InstantaneousBasis::InstantaneousBasis(const SiteSystem& system)
    : h_(system.couplings()), solver_(static_cast<Eigen::Index>(system.n_sites())) {}

const RealEigen& InstantaneousBasis::update(const Eigen::Ref<const Eigen::RowVectorXd>& energies) {
  h_.diagonal() = energies.transpose();
  solver_.compute(h_);
  if (solver_.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  eig_.energies = solver_.eigenvalues();
  eig_.vectors = solver_.eigenvectors();
  apply_sign_convention(eig_.vectors);
  return eig_;
}

void StepKernel::reset(const RealEigen& eig, double dt_fs, bool cache_dense) {
  eig_ = &eig;
  const double f = dt_fs / units::hbar_cm1_fs;
  phase_.resize(eig.energies.size());
  for (Eigen::Index i = 0; i < eig.energies.size(); ++i) phase_(i) = std::polar(1.0, -eig.energies(i) * f);
  dense_valid_ = cache_dense;
  if (cache_dense) dense_ = eig.vectors.cast<Complex>() * phase_.asDiagonal() * eig.vectors.transpose().cast<Complex>();
}

void StepKernel::apply(Eigen::MatrixXcd& x) const {
  if (dense_valid_) {
    work_.noalias() = dense_ * x;
    x.swap(work_);
    return;
  }
  work_.noalias() = eig_->vectors.transpose() * x;
  work_ = phase_.asDiagonal() * work_;
  x.noalias() = eig_->vectors * work_;
}

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Complex> reduce_trajectories(std::size_t n_traj, std::size_t workers, std::size_t acc_size,
                                         const TrajectoryKernel& kernel) {
  const std::size_t n_blocks = std::min(n_traj, kMaxBlocks);
  std::vector<Complex> total(acc_size, Complex(0.0));
  std::vector<std::unique_ptr<std::vector<Complex>>> pending(n_blocks);
  std::size_t next_fold = 0;
  std::mutex fold_mutex;

  auto run_block = [&](std::size_t b) {
    auto acc = std::make_unique<std::vector<Complex>>(acc_size, Complex(0.0));
    const std::size_t lo = b * n_traj / n_blocks;
    const std::size_t hi = (b + 1) * n_traj / n_blocks;
    for (std::size_t i = lo; i < hi; ++i) kernel(i, *acc);
    std::lock_guard<std::mutex> lock(fold_mutex);
    pending[b] = std::move(acc);
    while (next_fold < n_blocks && pending[next_fold]) {
      const auto& part = *pending[next_fold];
      for (std::size_t j = 0; j < acc_size; ++j) total[j] += part[j];
      pending[next_fold].reset();
      ++next_fold;
    }
  };

  const std::size_t n_workers = std::min(resolve_workers(workers), n_blocks);
  if (n_workers <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
    return total;
  }

  std::atomic<std::size_t> next_block{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        if (failed.load()) return;
        const std::size_t b = next_block.fetch_add(1);
        if (b >= n_blocks) return;
        try {
          run_block(b);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return total;
}

}  // namespace eetsim::detail
