#include <doctest.h>

#include "helpers.hpp"

#include "eetsim/error.hpp"
#include "eetsim/qjc.hpp"

using namespace eetsim;
using testing_util::max_abs;

namespace {

// Flat J(omega) = level on (0, 20000] cm^-1.
SpectralDensity flat_sd(double level) { return SpectralDensity(TabulatedSpectralDensity{{0.0, 20000.0}, {level, level}}); }

// J level giving a target downhill rate between eigenstates a > b of h.
double level_for_rate(const ExcitonBasis& b, Eigen::Index hi, Eigen::Index lo, double rate_fs1) {
  double overlap = 0.0;
  for (Eigen::Index m = 0; m < b.coefficients.rows(); ++m)
    overlap += std::norm(b.coefficients(m, hi)) * std::norm(b.coefficients(m, lo));
  return rate_fs1 * units::hbar_cm1_fs / (2.0 * units::pi * overlap);
}

SiteSystem dimer(double e2, double v) {
  Eigen::MatrixXd c(2, 2);
  c << 0, v, v, 0;
  return SiteSystem({0.0, e2}, c);
}

SimConfig config(double dt, double t_total, std::size_t n_traj, double out_dt) {
  SimConfig c;
  c.dt_fs = dt;
  c.t_total_fs = t_total;
  c.n_traj = n_traj;
  c.output_dt_fs = out_dt;
  c.seed = 31;
  c.workers = 1;
  c.method = Method::QJC;
  return c;
}

}  // namespace

TEST_CASE("zp_rates") {
  const DrudeLorentz dl{35.0, 1.0 / 50.0};
  SUBCASE("eigenstates on disjoint sites do not couple") {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 3);
    h.diagonal() << 0.0, 150.0, 400.0;
    const auto t = zp_rates(exciton_basis(h), dl);
    CHECK(t.rates.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("delocalized Fourier basis has overlap 1/N") {
    const int n = 7;
    Eigen::MatrixXcd f(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) f(j, k) = std::polar(1.0 / std::sqrt(7.0), 2.0 * units::pi * j * k / n);
    Eigen::VectorXd e(n);
    e << 0, 100, 200, 300, 400, 500, 600;
    const Eigen::MatrixXcd h = f * e.cast<Complex>().asDiagonal() * f.adjoint();
    const auto b = exciton_basis(Eigen::MatrixXcd(0.5 * (h + h.adjoint())));
    const auto t = zp_rates(b, dl);
    const SpectralDensity sd(dl);
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < n; ++c) {
        const double w = b.energies(a) - b.energies(c);
        const double expected = w > 0.0 ? 2.0 * units::pi * sd(w) / units::hbar_cm1_fs / 7.0 : 0.0;
        CHECK(t.rates(a, c) == doctest::Approx(expected).epsilon(1e-9).scale(1e-12));
      }
  }
  SUBCASE("no uphill or degenerate transitions") {
    std::mt19937_64 rng(6);
    const auto b = exciton_basis(testing_util::random_symmetric(6, rng));
    const auto t = zp_rates(b, dl);
    for (Eigen::Index a = 0; a < 6; ++a)
      for (Eigen::Index c = 0; c < 6; ++c) {
        if (b.energies(a) - b.energies(c) <= kDegenerateGap_cm1) CHECK(t.rates(a, c) == 0.0);
        CHECK(t.rates(a, c) >= 0.0);
      }
    Eigen::MatrixXd deg = Eigen::MatrixXd::Zero(2, 2);
    deg.diagonal() << 0.0, 0.05;
    deg(0, 1) = deg(1, 0) = 0.01;
    CHECK(zp_rates(exciton_basis(deg), dl).rates.maxCoeff() == 0.0);
  }
}

TEST_CASE("mcwf_step") {
  const SiteSystem sys = dimer(200.0, 50.0);
  const Eigen::MatrixXcd h = sys.mean_hamiltonian().cast<Complex>();
  const auto basis = exciton_basis(h);

  SUBCASE("zero rates reduce to the unitary step") {
    const auto t = zp_rates(basis, SpectralDensity::zero());
    Rng rng(1);
    Eigen::VectorXcd v(2);
    v << Complex(0.6, 0.0), Complex(0.0, 0.8);
    const PureState psi(v);
    CHECK(max_abs(mcwf_step(psi, h, t, 2.0, rng).amplitudes() - step_unitary(psi, h, 2.0).amplitudes()) < 1e-14);
  }
  SUBCASE("the lowest eigenstate never jumps") {
    const auto t = zp_rates(basis, flat_sd(level_for_rate(basis, 1, 0, 0.05)));
    Rng rng(2);
    PureState psi(basis.coefficients.col(0));
    for (int k = 0; k < 2000; ++k) {
      psi = mcwf_step(psi, h, t, 1.0, rng);
      CHECK(std::abs(basis.coefficients.col(0).dot(psi.amplitudes())) == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
  SUBCASE("without noise the upper state does not change phase by jumping") {
    const auto t = zp_rates(basis, flat_sd(level_for_rate(basis, 1, 0, 0.05)));
    Rng rng(3);
    PureState psi(basis.coefficients.col(1));
    int jumped = 0;
    for (int k = 0; k < 500; ++k) {
      psi = mcwf_step(psi, h, t, 1.0, rng);
      const double p_low = std::norm(basis.coefficients.col(0).dot(psi.amplitudes()));
      CHECK((p_low < 1e-20 || std::abs(p_low - 1.0) < 1e-12));
      jumped += p_low > 0.5;
    }
    CHECK(jumped > 0);
  }
  SUBCASE("too coarse a step") {
    const auto t = zp_rates(basis, flat_sd(level_for_rate(basis, 1, 0, 0.05)));
    Rng rng(4);
    CHECK_THROWS_AS(mcwf_step(PureState::site(2, 0), h, t, 2.5, rng), StepSizeError);
    CHECK_NOTHROW(mcwf_step(PureState::site(2, 0), h, t, 1.9, rng));
  }
}

TEST_CASE("two-level decay is exponential") {
  const double gamma = 0.002, dt = 1.0;
  const std::size_t m_traj = 30000;
  const SiteSystem sys = dimer(200.0, 50.0);
  const auto basis = exciton_basis(sys.mean_hamiltonian());
  const SpectralDensity sd = flat_sd(level_for_rate(basis, 1, 0, gamma));
  REQUIRE(zp_rates(basis, sd).rates(1, 0) == doctest::Approx(gamma).epsilon(1e-12));

  auto c = config(dt, 500.0, m_traj, 50.0);
  c.initial_state = PureState(basis.coefficients.col(1));
  const auto tr = run_ensemble_qjc(sys, NoFluctuation{}, sd, c);
  for (std::size_t k = 0; k < tr.n_times(); ++k) {
    const double p = exciton_populations(tr.rho[k], basis)(1);
    // First-order unravelling survives each step with 1 - gamma dt.
    const double expected = std::exp(-gamma * tr.times_fs[k]);
    CHECK(p == doctest::Approx(expected).epsilon(0.03));
  }
}

TEST_CASE("three-level populations follow the Pauli master equation") {
  Eigen::MatrixXd c(3, 3);
  c << 0, 40, 10, 40, 0, 30, 10, 30, 0;
  const SiteSystem sys({0.0, 120.0, 300.0}, c);
  const auto basis = exciton_basis(sys.mean_hamiltonian());
  const SpectralDensity sd(DrudeLorentz{120.0, 1.0 / 40.0});
  const auto table = zp_rates(basis, sd);
  const double gmax = table.total_out().maxCoeff();
  const double dt = std::min(1.0, 0.005 / gmax);
  const double t_total = std::round(3.0 / table.rates(2, 1) / 10.0) * 10.0;

  auto cfg = config(dt, t_total, 20000, 0.0);
  cfg.output_dt_fs = t_total / 10.0;
  cfg.dt_fs = cfg.output_dt_fs / std::ceil(cfg.output_dt_fs / dt);
  cfg.initial_state = PureState(basis.coefficients.col(2));
  const auto tr = run_ensemble_qjc(sys, NoFluctuation{}, sd, cfg);

  // dp/dt = K p with K(b, a) = rate(a -> b), K(a, a) = -sum_b rate(a -> b).
  Eigen::Matrix3d k = table.rates.transpose();
  k.diagonal() -= table.total_out();
  Eigen::Vector3d p0(0.0, 0.0, 1.0);
  for (std::size_t i = 0; i < tr.n_times(); ++i) {
    const Eigen::Matrix3d m = (k * tr.times_fs[i]).exp();
    const Eigen::Vector3d expected = m * p0;
    const Eigen::VectorXd got = exciton_populations(tr.rho[i], basis);
    for (int a = 0; a < 3; ++a) CHECK(std::abs(got(a) - expected(a)) < 0.012);
  }
}

TEST_CASE("exciton coherence decays at half the population rate") {
  const double gamma = 0.004;
  const SiteSystem sys = dimer(200.0, 50.0);
  const auto basis = exciton_basis(sys.mean_hamiltonian());
  const SpectralDensity sd = flat_sd(level_for_rate(basis, 1, 0, gamma));
  auto c = config(1.0, 500.0, 20000, 50.0);
  c.initial_state = PureState((basis.coefficients.col(0) + basis.coefficients.col(1)) / std::sqrt(2.0));
  const auto tr = run_ensemble_qjc(sys, NoFluctuation{}, sd, c);
  const Eigen::MatrixXcd v = basis.coefficients.cast<Complex>();
  for (std::size_t k = 1; k < tr.n_times(); ++k) {
    const Eigen::MatrixXcd r = v.adjoint() * tr.rho[k] * v;
    CHECK(std::abs(r(0, 1)) == doctest::Approx(0.5 * std::exp(-0.5 * gamma * tr.times_fs[k])).epsilon(0.10));
  }
}

TEST_CASE("zero spectral density reproduces MD bit for bit") {
  const SiteSystem sys(testing_util::fmo_energies(), testing_util::fmo_couplings());
  const Ar1Noise ar{std::vector<double>(7, 100.0), std::vector<double>(7, 30.0), 1.0};
  auto c = config(1.0, 200.0, 40, 10.0);
  const auto q = run_ensemble_qjc(sys, ar, SpectralDensity::zero(), c);
  c.method = Method::MD;
  const auto md = run_ensemble(sys, ar, c);
  REQUIRE(q.n_times() == md.trace.n_times());
  for (std::size_t k = 0; k < q.n_times(); ++k) CHECK(q.rho[k] == md.trace.rho[k]);

  SUBCASE("mixed initial state") {
    Eigen::MatrixXcd r0 = Eigen::MatrixXcd::Zero(7, 7);
    r0(0, 0) = 0.5;
    r0(5, 5) = 0.5;
    c.initial_state = DensityMatrix(r0);
    const auto md2 = run_ensemble(sys, ar, c);
    c.method = Method::QJC;
    const auto q2 = run_ensemble_qjc(sys, ar, SpectralDensity::zero(), c);
    for (std::size_t k = 0; k < q2.n_times(); ++k) CHECK(max_abs(q2.rho[k] - md2.trace.rho[k]) < 1e-12);
  }
}

TEST_CASE("relaxation reaches the lowest exciton") {
  Eigen::MatrixXd c(3, 3);
  c << 0, 40, 10, 40, 0, 30, 10, 30, 0;
  const SiteSystem sys({0.0, 120.0, 300.0}, c);
  const auto basis = exciton_basis(sys.mean_hamiltonian());
  const SpectralDensity sd(DrudeLorentz{120.0, 1.0 / 40.0});
  auto cfg = config(0.5, 8000.0, 200, 200.0);
  cfg.initial_state = std::size_t{2};
  const auto tr = run_ensemble_qjc(sys, NoFluctuation{}, sd, cfg);

  double prev = 1e300;
  for (std::size_t k = 0; k < tr.n_times(); ++k) {
    const Eigen::VectorXd p = exciton_populations(tr.rho[k], basis);
    const double energy = p.dot(basis.energies);
    CHECK(energy <= prev + 1e-9);
    prev = energy;
  }
  CHECK(exciton_populations(tr.rho.back(), basis)(0) > 0.99);
  for (const auto& r : tr.rho) CHECK(std::abs(r.trace() - Complex(1.0)) < 1e-12);
}

TEST_CASE("QJC rejects propagator records and coarse steps") {
  const SiteSystem sys = dimer(200.0, 50.0);
  const auto basis = exciton_basis(sys.mean_hamiltonian());
  auto c = config(1.0, 10.0, 1, 0.0);
  c.record_propagator = true;
  CHECK_THROWS_AS(run_ensemble_qjc(sys, NoFluctuation{}, SpectralDensity::zero(), c), InvalidInput);
  c.record_propagator = false;
  CHECK_THROWS_AS(run_ensemble_qjc(sys, NoFluctuation{}, flat_sd(level_for_rate(basis, 1, 0, 0.2)), c), StepSizeError);
}
