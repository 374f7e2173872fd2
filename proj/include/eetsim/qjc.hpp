#pragma once

// Zero-point quantum-jump correction. Downhill transitions between
// instantaneous exciton states, unravelled as Monte-Carlo wavefunction jumps
// on top of the stochastic unitary propagation.

#include "eetsim/model.hpp"
#include "eetsim/noise.hpp"
#include "eetsim/propagator.hpp"

namespace eetsim {

/// rates(M, N): rate of the M -> N transition in fs^-1. Nonzero only when
/// E_M - E_N exceeds the degeneracy threshold.
struct RateTable {
  ExcitonBasis basis;
  Eigen::MatrixXd rates;

  /// Total outgoing rate of each exciton state.
  Eigen::VectorXd total_out() const { return rates.rowwise().sum(); }
};

/// Transitions with |E_M - E_N| below this are treated as degenerate (rate 0).
inline constexpr double kDegenerateGap_cm1 = 0.1;

/// Jump steps require dt * (largest total outgoing rate) below this.
inline constexpr double kMaxJumpProbability = 0.1;

/// gamma(w_MN) = 2 pi J(w_MN) / hbar * sum_m |c_m(M)|^2 |c_m(N)|^2.
RateTable zp_rates(const ExcitonBasis& basis, const SpectralDensity& sd);

/// First-order MCWF step. `rates` must be built from the eigenbasis of `h`.
/// A jump M -> N happens with probability dt gamma_MN |<M|psi>|^2; otherwise
/// the state evolves unitarily, each |M> component is damped by
/// exp(-Gamma_M dt / 2), and the result is renormalized.
PureState mcwf_step(const PureState& psi, const Eigen::MatrixXcd& h, const RateTable& rates, double dt_fs, Rng& rng);

/// Ensemble of MCWF trajectories driven by the same fluctuation sources as
/// run_ensemble. With a zero spectral density the output equals run_ensemble
/// bit for bit.
DensityTrace run_ensemble_qjc(const SiteSystem& system, const FluctuationModel& fluct, const SpectralDensity& sd,
                              const SimConfig& config);

}  // namespace eetsim
