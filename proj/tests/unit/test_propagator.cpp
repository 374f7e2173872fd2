#include <doctest.h>

#include "helpers.hpp"

#include "eetsim/error.hpp"
#include "eetsim/propagator.hpp"

using namespace eetsim;
using testing_util::expm_propagator;
using testing_util::max_abs;

namespace {

SiteSystem dimer(double j, double e1 = 0.0, double e2 = 0.0) {
  Eigen::MatrixXd c(2, 2);
  c << 0, j, j, 0;
  return SiteSystem({e1, e2}, c);
}

SiteSystem fmo() { return SiteSystem(testing_util::fmo_energies(), testing_util::fmo_couplings()); }

SimConfig base_config(double dt, double t_total, std::size_t n_traj) {
  SimConfig c;
  c.dt_fs = dt;
  c.t_total_fs = t_total;
  c.n_traj = n_traj;
  c.seed = 2024;
  c.workers = 1;
  return c;
}

void check_density_invariants(const Eigen::MatrixXcd& rho, double tol = 1e-10) {
  CHECK(std::abs(rho.trace() - Complex(1.0)) < tol);
  CHECK(max_abs(rho - rho.adjoint()) < tol);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
  CHECK(es.eigenvalues().minCoeff() > -tol);
}

}  // namespace

TEST_CASE("step_unitary") {
  SUBCASE("zero Hamiltonian is the identity") {
    const PureState psi = PureState::site(3, 1);
    const auto out = step_unitary(psi, Eigen::MatrixXcd::Zero(3, 3), 10.0);
    CHECK(max_abs(out.amplitudes() - psi.amplitudes()) < 1e-15);
  }
  SUBCASE("diagonal Hamiltonian applies phases") {
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2, 2);
    h(0, 0) = 100.0;
    h(1, 1) = -40.0;
    Eigen::VectorXcd v(2);
    v << 0.6, 0.8;
    const auto out = step_unitary(PureState(v), h, 3.0);
    const double f = 3.0 / units::hbar_cm1_fs;
    CHECK(std::abs(out.amplitudes()(0) - 0.6 * std::polar(1.0, -100.0 * f)) < 1e-14);
    CHECK(std::abs(out.amplitudes()(1) - 0.8 * std::polar(1.0, 40.0 * f)) < 1e-14);
  }
  SUBCASE("Rabi oscillation of a resonant dimer") {
    const double j = 100.0, dt = 1.0;
    Eigen::MatrixXcd h = dimer(j).mean_hamiltonian().cast<Complex>();
    PureState psi = PureState::site(2, 0);
    for (int k = 1; k <= 200; ++k) {
      psi = step_unitary(psi, h, dt);
      const double s = std::sin(j * k * dt / units::hbar_cm1_fs);
      CHECK(std::norm(psi.amplitudes()(1)) == doctest::Approx(s * s).epsilon(1e-6).scale(1.0));
    }
  }
  SUBCASE("agrees with the matrix exponential") {
    std::mt19937_64 rng(4);
    const Eigen::MatrixXcd h = testing_util::random_hermitian(6, rng);
    CHECK(max_abs(unitary_step_matrix(h, 2.5) - expm_propagator(h, 2.5)) < 1e-10);
  }
  SUBCASE("non-Hermitian Hamiltonian") {
    Eigen::MatrixXcd h(2, 2);
    h << 0, 1, 0, 0;
    CHECK_THROWS_AS(step_unitary(PureState::site(2, 0), h, 1.0), InvalidInput);
  }
}

TEST_CASE("SimConfig validation") {
  auto c = base_config(1.0, 100.0, 1);
  CHECK(c.n_steps() == 100);
  CHECK(c.output_times().size() == 101);
  c.output_dt_fs = 10.0;
  CHECK(c.output_stride() == 10);
  CHECK(c.output_times().back() == doctest::Approx(100.0));
  c.output_dt_fs = 2.5;
  CHECK_THROWS_AS(c.validate(2), InvalidInput);
  c.output_dt_fs = 30.0;
  CHECK_THROWS_AS(c.validate(2), InvalidInput);
  c = base_config(0.0, 100.0, 1);
  CHECK_THROWS_AS(c.validate(2), InvalidInput);
  c = base_config(1.0, 100.0, 0);
  CHECK_THROWS_AS(c.validate(2), InvalidInput);
  c = base_config(1.0, 100.0, 1);
  c.initial_state = std::size_t{5};
  CHECK_THROWS_AS(c.validate(2), InvalidInput);
}

TEST_CASE("no fluctuations reproduce exp(-iHt/hbar)") {
  const SiteSystem sys = fmo();
  auto c = base_config(1.0, 400.0, 1);
  c.output_dt_fs = 50.0;
  c.record_propagator = true;
  c.initial_state = std::size_t{0};
  const auto res = run_ensemble(sys, NoFluctuation{}, c);
  REQUIRE(res.propagator.has_value());
  const Eigen::MatrixXcd h = sys.mean_hamiltonian().cast<Complex>();
  for (std::size_t k = 0; k < res.trace.n_times(); ++k) {
    const double t = res.trace.times_fs[k];
    const Eigen::MatrixXcd u = expm_propagator(h, t);
    CHECK(max_abs(res.propagator->mean_u[k] - u) < 1e-8);
    const Eigen::MatrixXcd rho = u.col(0) * u.col(0).adjoint();
    CHECK(max_abs(res.trace.rho[k] - rho) < 1e-8);
  }
}

TEST_CASE("single trajectory") {
  const SiteSystem sys = fmo();
  const Ar1Noise ar{std::vector<double>(7, 100.0), std::vector<double>(7, 50.0), 1.0};
  auto c = base_config(1.0, 300.0, 1);
  const auto rec = run_trajectory(sys, ar, c, 0);
  for (std::size_t k = 0; k < rec.states.size(); ++k) {
    const Eigen::MatrixXcd& u = rec.propagators[k];
    CHECK(max_abs(u.adjoint() * u - Eigen::MatrixXcd::Identity(7, 7)) < 1e-9);
    CHECK(rec.states[k].amplitudes().norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("M = 1 ensemble is pure") {
    const auto res = run_ensemble(sys, ar, c);
    for (const auto& rho : res.trace.rho) {
      CHECK((rho * rho).trace().real() == doctest::Approx(1.0).epsilon(1e-9));
    }
    const auto& psi = rec.states.back().amplitudes();
    CHECK(max_abs(res.trace.rho.back() - psi * psi.adjoint()) < 1e-12);
  }
  SUBCASE("ensemble equals the average of single trajectories") {
    c.n_traj = 12;
    const auto res = run_ensemble(sys, ar, c);
    Eigen::MatrixXcd avg = Eigen::MatrixXcd::Zero(7, 7);
    for (std::size_t i = 0; i < 12; ++i) {
      const Eigen::VectorXcd psi = run_trajectory(sys, ar, c, i).states.back().amplitudes();
      avg += psi * psi.adjoint();
    }
    avg /= 12.0;
    CHECK(max_abs(res.trace.rho.back() - avg) < 1e-12);
    check_density_invariants(res.trace.rho.back());
  }
  SUBCASE("mixed initial states are rejected") {
    c.initial_state = DensityMatrix(Eigen::MatrixXcd::Identity(7, 7) / 7.0);
    CHECK_THROWS_AS(run_trajectory(sys, ar, c, 0), InvalidInput);
  }
}

TEST_CASE("recorded trajectories") {
  auto traj = std::make_shared<EnergyTrajectory>();
  traj->dt_frame_fs = 2.0;
  traj->frames.resize(101, 2);
  for (Eigen::Index k = 0; k <= 100; ++k) {
    traj->frames(k, 0) = 10.0 * static_cast<double>(k);
    traj->frames(k, 1) = -3.0 * static_cast<double>(k);
  }
  const SiteSystem sys = dimer(20.0);

  SUBCASE("frames are linearly interpolated at half steps") {
    auto c = base_config(1.0, 200.0, 1);
    const auto e = trajectory_energies(sys, RecordedNoise{traj, 200.0}, c, 0);
    REQUIRE(e.rows() == 201);
    CHECK(e(1, 0) == doctest::Approx(5.0));
    CHECK(e(3, 1) == doctest::Approx(-4.5));
    CHECK(e(200, 0) == doctest::Approx(1000.0));
  }
  SUBCASE("window shorter than the run") {
    auto c = base_config(1.0, 100.0, 1);
    CHECK_THROWS_AS(run_ensemble(sys, RecordedNoise{traj, 50.0}, c), InvalidInput);
  }
  SUBCASE("window longer than the record") {
    auto c = base_config(1.0, 100.0, 1);
    CHECK_THROWS_AS(run_ensemble(sys, RecordedNoise{traj, 400.0}, c), InvalidInput);
  }
}

TEST_CASE("static disorder dimer against the disorder-averaged Rabi formula") {
  // P2(t | D) = J^2 / (J^2 + D^2/4) sin^2(sqrt(J^2 + D^2/4) t / hbar), D ~ N(0, 2 s^2).
  const double j = 50.0, s = 40.0;
  const std::size_t m_traj = 4000;
  const SiteSystem sys = dimer(j);
  auto c = base_config(1.0, 400.0, m_traj);
  c.output_dt_fs = 20.0;
  const auto res = run_ensemble(sys, StaticDisorder{{s, s}}, c);

  const double sd = std::sqrt(2.0) * s;
  for (std::size_t k = 1; k < res.trace.n_times(); ++k) {
    const double t = res.trace.times_fs[k];
    double m1 = 0.0, m2 = 0.0, wsum = 0.0;
    for (int i = -4000; i <= 4000; ++i) {
      const double d = 8.0 * sd * i / 4000.0;
      const double w = std::exp(-0.5 * d * d / (sd * sd));
      const double om2 = j * j + 0.25 * d * d;
      const double sn = std::sin(std::sqrt(om2) * t / units::hbar_cm1_fs);
      const double p = j * j / om2 * sn * sn;
      m1 += w * p;
      m2 += w * p * p;
      wsum += w;
    }
    m1 /= wsum;
    m2 /= wsum;
    const double se = std::sqrt(std::max(m2 - m1 * m1, 0.0) / static_cast<double>(m_traj));
    const double got = res.trace.population(k, 1);
    CHECK(std::abs(got - m1) <= std::max(0.05 * m1, 3.0 * se));
  }
}

TEST_CASE("reproducibility and worker independence") {
  const SiteSystem sys = fmo();
  const Ar1Noise ar{std::vector<double>(7, 120.0), std::vector<double>(7, 20.0), 1.0};
  auto c = base_config(1.0, 100.0, 130);
  c.record_propagator = true;
  const auto a = run_ensemble(sys, ar, c);
  c.workers = 3;
  const auto b = run_ensemble(sys, ar, c);
  for (std::size_t k = 0; k < a.trace.n_times(); ++k) {
    CHECK(a.trace.rho[k] == b.trace.rho[k]);
    CHECK(a.propagator->mean_u[k] == b.propagator->mean_u[k]);
  }
  c.seed += 1;
  const auto d = run_ensemble(sys, ar, c);
  CHECK(a.trace.rho.back() != d.trace.rho.back());
}

TEST_CASE("mixed initial state") {
  const SiteSystem sys = dimer(60.0, 0.0, 150.0);
  Eigen::MatrixXcd r0(2, 2);
  r0 << 0.7, Complex(0.1, 0.2), Complex(0.1, -0.2), 0.3;
  auto c = base_config(1.0, 300.0, 1);
  c.initial_state = DensityMatrix(r0);
  c.output_dt_fs = 30.0;
  const auto res = run_ensemble(sys, NoFluctuation{}, c);
  const Eigen::MatrixXcd h = sys.mean_hamiltonian().cast<Complex>();
  for (std::size_t k = 0; k < res.trace.n_times(); ++k) {
    const Eigen::MatrixXcd u = expm_propagator(h, res.trace.times_fs[k]);
    CHECK(max_abs(res.trace.rho[k] - u * r0 * u.adjoint()) < 1e-9);
  }
  SUBCASE("with noise the trace stays a density matrix") {
    c.n_traj = 50;
    const auto noisy = run_ensemble(sys, Ar1Noise{{80.0, 80.0}, {30.0, 30.0}, 1.0}, c);
    for (const auto& rho : noisy.trace.rho) check_density_invariants(rho);
  }
}

TEST_CASE("ensemble dephasing lowers purity") {
  const SiteSystem sys = fmo();
  const Ar1Noise ar{std::vector<double>(7, 150.0), std::vector<double>(7, 50.0), 1.0};
  auto c = base_config(1.0, 500.0, 400);
  c.output_dt_fs = 100.0;
  c.initial_state = std::size_t{5};
  const auto res = run_ensemble(sys, ar, c);
  CHECK((res.trace.rho[0] * res.trace.rho[0]).trace().real() == doctest::Approx(1.0));
  const double late = (res.trace.rho.back() * res.trace.rho.back()).trace().real();
  CHECK(late < 0.9);
  CHECK(late >= 1.0 / 7.0 - 1e-12);
  for (const auto& rho : res.trace.rho) check_density_invariants(rho);
  CHECK(res.trace.population(0, 5) == doctest::Approx(1.0));
}
