#pragma once

#include "eetsim/model.hpp"
#include "eetsim/units.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

namespace testing_util {

inline Eigen::MatrixXcd random_hermitian(int n, std::mt19937_64& rng, double scale = 100.0) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = {scale * g(rng), scale * g(rng)};
  return 0.5 * (a + a.adjoint());
}

inline Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng, double scale = 100.0) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = scale * g(rng);
  return 0.5 * (a + a.transpose());
}

// exp(-i H t / hbar) by Pade scaling and squaring, independent of the
// eigendecomposition used by the library.
inline Eigen::MatrixXcd expm_propagator(const Eigen::MatrixXcd& h, double t_fs) {
  const Eigen::MatrixXcd a = h * eetsim::Complex(0.0, -t_fs / eetsim::units::hbar_cm1_fs);
  return a.exp();
}

inline double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

// Couplings of the 7-site model used across tests (cm^-1).
inline Eigen::MatrixXd fmo_couplings() {
  Eigen::MatrixXd c(7, 7);
  c << 0, -87.7, 5.5, -5.9, 6.7, -13.7, -9.9,  //
      -87.7, 0, 30.8, 8.2, 0.7, 11.8, 4.3,     //
      5.5, 30.8, 0, -53.5, -2.2, -9.6, 6.0,    //
      -5.9, 8.2, -53.5, 0, -70.7, -17.0, -63.3,  //
      6.7, 0.7, -2.2, -70.7, 0, 81.1, -1.3,    //
      -13.7, 11.8, -9.6, -17.0, 81.1, 0, 39.7,  //
      -9.9, 4.3, 6.0, -63.3, -1.3, 39.7, 0;
  return c;
}

inline std::vector<double> fmo_energies() { return {12620, 12740, 12420, 12530, 12690, 12840, 12650}; }

}  // namespace testing_util
