#pragma once

#include "eetsim/propagator.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eetsim {

struct LifetimeResult {
  std::optional<double> lifetime_fs;
  double reference = 0.0;    // first envelope maximum
  std::size_t n_maxima = 0;
  std::string diagnostic;
};

/// Envelope threshold crossing of 2|rho_mn(t)|. The envelope joins the
/// parabola-refined local maxima; the lifetime is the first time after which
/// it stays below threshold * (first envelope maximum).
LifetimeResult coherence_lifetime(const DensityTrace& trace, std::size_t m, std::size_t n,
                                  double threshold = 0.36787944117144233);

/// Same criterion on an arbitrary sampled signal.
LifetimeResult envelope_lifetime(std::span<const double> t_fs, std::span<const double> y, double threshold);

/// Least-squares slope of rate against temperature.
double dephasing_slope(std::span<const double> temperatures_K, std::span<const double> rates_cm1);

struct Observable {
  enum class Kind { Population, Coherence } kind = Kind::Population;
  std::size_t m = 0;
  std::size_t n = 0;

  static Observable population(std::size_t site) { return {Kind::Population, site, site}; }
  static Observable coherence(std::size_t a, std::size_t b) { return {Kind::Coherence, a, b}; }
  std::string label() const;  // 1-based, e.g. "pop_1" or "coh_1_2"
};

/// Population rho_mm or pairwise coherence 2|rho_mn| at every time.
std::vector<double> observable_series(const DensityTrace& trace, const Observable& obs);

struct TraceComparison {
  double rmsd = 0.0;
  double max_abs_dev = 0.0;
  double time_of_max_dev = 0.0;
};

TraceComparison compare_traces(const DensityTrace& a, const DensityTrace& b, const Observable& obs);

/// Largest max_abs_dev over all populations.
TraceComparison compare_populations(const DensityTrace& a, const DensityTrace& b);

}  // namespace eetsim
