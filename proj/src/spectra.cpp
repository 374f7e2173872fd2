#include "eetsim/spectra.hpp"

#include "eetsim/error.hpp"
#include "eetsim/units.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace eetsim {

namespace {

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

}  // namespace

const char* spectrum_kind_name(SpectrumKind k) {
  switch (k) {
    case SpectrumKind::Abs: return "abs";
    case SpectrumKind::LD: return "ld";
    case SpectrumKind::CD: return "cd";
  }
  return "?";
}

SpectrumKind parse_spectrum_kind(const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (l == "abs" || l == "absorption") return SpectrumKind::Abs;
  if (l == "ld") return SpectrumKind::LD;
  if (l == "cd") return SpectrumKind::CD;
  throw InvalidInput("unknown spectrum kind '" + s + "' (expected abs, ld or cd)", "kind");
}

Eigen::MatrixXd spectrum_weights(const SiteSystem& system, SpectrumKind kind) {
  if (!system.geometry()) throw InvalidInput("spectra need site geometry", "geometry");
  const Geometry& g = *system.geometry();
  const auto n = static_cast<Eigen::Index>(system.n_sites());
  Eigen::MatrixXd w(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& di = g.dipoles[static_cast<std::size_t>(i)];
      const auto& dj = g.dipoles[static_cast<std::size_t>(j)];
      switch (kind) {
        case SpectrumKind::Abs: w(i, j) = dot(di, dj); break;
        case SpectrumKind::LD: w(i, j) = 3.0 * dot(di, g.symmetry_axis) * dot(dj, g.symmetry_axis) - dot(di, dj); break;
        case SpectrumKind::CD: {
          const auto& ri = g.positions_A[static_cast<std::size_t>(i)];
          const auto& rj = g.positions_A[static_cast<std::size_t>(j)];
          const Vec3 dr{ri[0] - rj[0], ri[1] - rj[1], ri[2] - rj[2]};
          w(i, j) = system.mean_energies()[static_cast<std::size_t>(i)] * dot(dr, cross(di, dj));
          break;
        }
      }
    }
  }
  return w;
}

Spectrum compute_spectrum(const PropagatorRecord& record, const SiteSystem& system, SpectrumKind kind,
                          const std::vector<double>& omega_grid_cm1, const SpectrumOptions& opts) {
  const Eigen::MatrixXd w = spectrum_weights(system, kind);
  const std::size_t nt = record.times_fs.size();
  if (nt < 2 || record.mean_u.size() != nt) throw InvalidInput("propagator record needs at least two time points", "record");
  if (record.times_fs.front() != 0.0) throw InvalidInput("propagator record must start at t = 0", "record");
  for (std::size_t k = 1; k < nt; ++k)
    if (!(record.times_fs[k] > record.times_fs[k - 1])) throw InvalidInput("record times must increase", "record");
  for (const auto& u : record.mean_u)
    if (u.rows() != w.rows() || u.cols() != w.cols()) throw InvalidInput("record dimension does not match the system", "record");
  if (omega_grid_cm1.empty()) throw InvalidInput("frequency grid is empty", "grid");
  for (std::size_t i = 1; i < omega_grid_cm1.size(); ++i)
    if (!(omega_grid_cm1[i] > omega_grid_cm1[i - 1])) throw InvalidInput("frequency grid must increase", "grid");
  if (!(opts.window_fs > 0.0)) throw InvalidInput("window must be positive", "window_fs");

  // Response S(t) = sum W_mn (U_mn - U_mn*) = 2i sum W_mn Im U_mn, apodized and
  // multiplied by the trapezoid weight.
  std::vector<double> t(nt), s(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    const double tk = record.times_fs[k];
    const double left = k > 0 ? tk - record.times_fs[k - 1] : 0.0;
    const double right = k + 1 < nt ? record.times_fs[k + 1] - tk : 0.0;
    const double im = (w.array() * record.mean_u[k].imag().array()).sum();
    t[k] = tk / units::hbar_cm1_fs;
    s[k] = 2.0 * im * std::exp(-tk * tk / (2.0 * opts.window_fs * opts.window_fs)) * 0.5 * (left + right);
  }

  Spectrum out;
  out.kind = kind;
  out.omega_cm1 = omega_grid_cm1;
  out.intensity.resize(omega_grid_cm1.size());
  out.short_record = record.duration_fs() < 5.0 * opts.window_fs;
  for (std::size_t i = 0; i < omega_grid_cm1.size(); ++i) {
    // Re(e^{i w t} * 2i A) = -2 A sin(w t)
    double acc = 0.0;
    for (std::size_t k = 0; k < nt; ++k) acc -= s[k] * std::sin(omega_grid_cm1[i] * t[k]);
    out.intensity[i] = acc;
  }
  if (opts.normalize) {
    double peak = 0.0;
    for (double v : out.intensity) peak = std::max(peak, std::abs(v));
    if (peak > 0.0)
      for (double& v : out.intensity) v /= peak;
  }
  return out;
}

Spectrum overlay_shift(const Spectrum& spec, double shift_cm1) {
  Spectrum out = spec;
  for (double& w : out.omega_cm1) w -= shift_cm1;
  out.shift_cm1 = spec.shift_cm1 + shift_cm1;
  return out;
}

}  // namespace eetsim
