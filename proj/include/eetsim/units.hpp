#pragma once

// Unit system: energies in cm^-1, times in fs, temperatures in K.

namespace eetsim::units {

// hbar = 1 / (2 pi c) with c = 2.99792458e-5 cm/fs  ->  5308.84 cm^-1 fs
inline constexpr double hbar_cm1_fs = 5308.837458876145;

// k_B / (h c) with CODATA 2018 exact h, c, k_B  ->  0.695035 cm^-1 / K
inline constexpr double kB_cm1_per_K = 0.6950348004861274;

inline constexpr double pi = 3.14159265358979323846;

// Energy (cm^-1) to angular frequency (fs^-1).
inline constexpr double to_rate(double energy_cm1) { return energy_cm1 / hbar_cm1_fs; }

// Angular frequency (fs^-1) to energy (cm^-1).
inline constexpr double to_energy(double rate_fs1) { return rate_fs1 * hbar_cm1_fs; }

}  // namespace eetsim::units
