#include "eetsim/analysis.hpp"

#include "eetsim/error.hpp"

#include <cmath>

namespace eetsim {

namespace {

struct Peak {
  double t;
  double y;
};

// Vertex of the parabola through three samples; falls back to the middle
// sample when the fit is degenerate or the vertex leaves the bracket.
Peak refine(double t0, double y0, double t1, double y1, double t2, double y2) {
  const double d0 = (y1 - y0) / (t1 - t0);
  const double d1 = (y2 - y1) / (t2 - t1);
  const double c = (d1 - d0) / (t2 - t0);
  if (!(c < 0.0)) return {t1, y1};
  const double b = d0 - c * (t0 + t1);
  const double tv = -b / (2.0 * c);
  if (tv < t0 || tv > t2) return {t1, y1};
  const double yv = y1 + (tv - t1) * (d0 + c * (tv - t0));
  return {tv, std::max(yv, y1)};
}

}  // namespace

LifetimeResult envelope_lifetime(std::span<const double> t, std::span<const double> y, double threshold) {
  if (t.size() != y.size()) throw InvalidInput("time and signal lengths differ", "signal");
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidInput("threshold must lie in (0, 1)", "threshold");
  LifetimeResult res;
  const std::size_t n = t.size();
  std::vector<Peak> peaks;
  if (n >= 2 && y[0] > y[1]) peaks.push_back({t[0], y[0]});
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (y[i] > y[i - 1] && y[i] >= y[i + 1]) peaks.push_back(refine(t[i - 1], y[i - 1], t[i], y[i], t[i + 1], y[i + 1]));
  res.n_maxima = peaks.size();
  if (peaks.size() < 3) {
    res.diagnostic = "envelope has " + std::to_string(peaks.size()) + " maxima; at least 3 are needed";
    return res;
  }
  res.reference = peaks.front().y;
  const double cut = threshold * res.reference;
  std::size_t last_above = peaks.size();
  for (std::size_t j = peaks.size(); j-- > 0;) {
    if (peaks[j].y >= cut) {
      last_above = j;
      break;
    }
  }
  if (last_above + 1 >= peaks.size()) {
    res.diagnostic = "envelope does not fall below the threshold within the record";
    return res;
  }
  const Peak& a = peaks[last_above];
  const Peak& b = peaks[last_above + 1];
  res.lifetime_fs = a.t + (a.y - cut) / (a.y - b.y) * (b.t - a.t);
  return res;
}

LifetimeResult coherence_lifetime(const DensityTrace& trace, std::size_t m, std::size_t n, double threshold) {
  const auto y = observable_series(trace, Observable::coherence(m, n));
  return envelope_lifetime(trace.times_fs, y, threshold);
}

double dephasing_slope(std::span<const double> temperatures_K, std::span<const double> rates_cm1) {
  if (temperatures_K.size() != rates_cm1.size()) throw InvalidInput("temperature and rate lists differ in length", "rates");
  if (temperatures_K.size() < 2) throw InvalidInput("at least two points are required", "temperatures_K");
  const double k = static_cast<double>(temperatures_K.size());
  double tm = 0.0, gm = 0.0;
  for (std::size_t i = 0; i < temperatures_K.size(); ++i) {
    tm += temperatures_K[i];
    gm += rates_cm1[i];
  }
  tm /= k;
  gm /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < temperatures_K.size(); ++i) {
    sxx += (temperatures_K[i] - tm) * (temperatures_K[i] - tm);
    sxy += (temperatures_K[i] - tm) * (rates_cm1[i] - gm);
  }
  if (!(sxx > 0.0)) throw InvalidInput("temperatures are degenerate", "temperatures_K");
  return sxy / sxx;
}

std::string Observable::label() const {
  if (kind == Kind::Population) return "pop_" + std::to_string(m + 1);
  return "coh_" + std::to_string(m + 1) + "_" + std::to_string(n + 1);
}

std::vector<double> observable_series(const DensityTrace& trace, const Observable& obs) {
  const std::size_t dim = trace.n_sites();
  if (obs.m >= dim || obs.n >= dim) throw InvalidInput("site index out of range", "observable");
  if (obs.kind == Observable::Kind::Coherence) {
    if (obs.m == obs.n) throw InvalidInput("coherence needs two distinct sites", "observable");
    if (!trace.has_pair(obs.m, obs.n)) throw InvalidInput("trace does not store pair " + obs.label(), "observable");
  }
  std::vector<double> out;
  out.reserve(trace.n_times());
  for (std::size_t k = 0; k < trace.n_times(); ++k)
    out.push_back(obs.kind == Observable::Kind::Population ? trace.population(k, obs.m)
                                                           : pairwise_coherence(trace.rho[k], obs.m, obs.n));
  return out;
}

namespace {

void require_same_grid(const DensityTrace& a, const DensityTrace& b) {
  if (a.n_times() != b.n_times() || a.n_sites() != b.n_sites()) throw InvalidInput("traces have different shapes", "traces");
  for (std::size_t k = 0; k < a.n_times(); ++k)
    if (std::abs(a.times_fs[k] - b.times_fs[k]) > 1e-9 * std::max(1.0, std::abs(a.times_fs[k])))
      throw InvalidInput("traces have different time grids", "traces");
}

}  // namespace

TraceComparison compare_traces(const DensityTrace& a, const DensityTrace& b, const Observable& obs) {
  require_same_grid(a, b);
  const auto ya = observable_series(a, obs);
  const auto yb = observable_series(b, obs);
  TraceComparison c;
  double ss = 0.0;
  for (std::size_t k = 0; k < ya.size(); ++k) {
    const double d = std::abs(ya[k] - yb[k]);
    ss += d * d;
    if (d > c.max_abs_dev) {
      c.max_abs_dev = d;
      c.time_of_max_dev = a.times_fs[k];
    }
  }
  if (!ya.empty()) c.rmsd = std::min(std::sqrt(ss / static_cast<double>(ya.size())), c.max_abs_dev);
  return c;
}

TraceComparison compare_populations(const DensityTrace& a, const DensityTrace& b) {
  require_same_grid(a, b);
  TraceComparison c;
  double ss = 0.0;
  std::size_t count = 0;
  for (std::size_t m = 0; m < a.n_sites(); ++m) {
    for (std::size_t k = 0; k < a.n_times(); ++k) {
      const double d = std::abs(a.population(k, m) - b.population(k, m));
      ss += d * d;
      ++count;
      if (d > c.max_abs_dev) {
        c.max_abs_dev = d;
        c.time_of_max_dev = a.times_fs[k];
      }
    }
  }
  if (count) c.rmsd = std::min(std::sqrt(ss / static_cast<double>(count)), c.max_abs_dev);
  return c;
}

}  // namespace eetsim
