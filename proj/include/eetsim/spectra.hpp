#pragma once

// Absorption, linear and circular dichroism from the ensemble-averaged
// site-basis propagator.

#include "eetsim/model.hpp"
#include "eetsim/propagator.hpp"

#include <string>
#include <vector>

namespace eetsim {

enum class SpectrumKind { Abs, LD, CD };

const char* spectrum_kind_name(SpectrumKind k);
SpectrumKind parse_spectrum_kind(const std::string& s);

struct Spectrum {
  std::vector<double> omega_cm1;
  std::vector<double> intensity;
  SpectrumKind kind = SpectrumKind::Abs;
  double shift_cm1 = 0.0;
  /// Set when the record is shorter than five apodization widths.
  bool short_record = false;
};

struct SpectrumOptions {
  double window_fs = 100.0;
  /// Scale to unit max |I|; an identically zero spectrum is left as is.
  bool normalize = true;
};

/// Orientational weights W_mn for each spectrum kind:
///   Abs  d_m . d_n
///   LD   3 (d_m . r)(d_n . r) - d_m . d_n
///   CD   eps_m (R_m - R_n) . (d_m x d_n)
Eigen::MatrixXd spectrum_weights(const SiteSystem& system, SpectrumKind kind);

/// I(w) = Re int_0^T dt e^{i w t / hbar} exp(-t^2 / 2 window^2)
///        sum_mn W_mn (<U_mn(t)> - <U_mn(t)>*), trapezoidal quadrature.
Spectrum compute_spectrum(const PropagatorRecord& record, const SiteSystem& system, SpectrumKind kind,
                          const std::vector<double>& omega_grid_cm1, const SpectrumOptions& opts = {});

/// Translates the grid by -shift; intensities are unchanged.
Spectrum overlay_shift(const Spectrum& spec, double shift_cm1);

}  // namespace eetsim
