#pragma once

// File formats: system JSON, trajectory / trace / propagator / spectrum CSV.
// Numbers are written in shortest round-trip form, so a write followed by a
// read reproduces every double exactly.

#include "eetsim/model.hpp"
#include "eetsim/propagator.hpp"
#include "eetsim/spectra.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace eetsim::io {

/// Shortest decimal string that parses back to the same double.
std::string format_double(double x);

/// Parses a complete field as a double; throws InvalidInput naming `field`.
double parse_double(std::string_view text, const std::string& field);

std::string read_text(const std::filesystem::path& path);

/// Writes via a temporary file in the same directory followed by a rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(const std::string& bytes);
std::string file_sha256(const std::filesystem::path& path);

// System: {"n_sites", "mean_energies_cm1", "couplings_cm1", "geometry"}.
SiteSystem parse_system_json(const std::string& text);
SiteSystem load_system(const std::filesystem::path& path);
std::string system_to_json(const SiteSystem& system);

// Trajectory CSV: t_fs,site1_cm1,...,siteN_cm1. Empty fields are missing
// values; they are filled by linear interpolation in time (nearest value at
// the ends). More than 10% missing in any site column is an error.
EnergyTrajectory parse_trajectory_csv(const std::string& text, std::string label = {});
EnergyTrajectory load_trajectory(const std::filesystem::path& path);
std::string trajectory_to_csv(const EnergyTrajectory& traj);

inline constexpr double kMaxMissingFraction = 0.1;

// Trace CSV: t_fs,pop_1..pop_N,re_rho_m_n,im_rho_m_n,... for the given
// 0-based pairs (m < n); headers use 1-based indices.
using PairList = std::vector<std::pair<std::size_t, std::size_t>>;
PairList all_pairs(std::size_t n_sites);
std::string trace_to_csv(const DensityTrace& trace, const PairList& pairs);
DensityTrace parse_trace_csv(const std::string& text);
DensityTrace load_trace(const std::filesystem::path& path);

// Propagator CSV: t_fs,re_U_1_1,im_U_1_1,re_U_1_2,... row-major.
std::string propagator_to_csv(const PropagatorRecord& record);
PropagatorRecord parse_propagator_csv(const std::string& text);
PropagatorRecord load_propagator(const std::filesystem::path& path);

/// Generic numeric CSV with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  const std::vector<double>& column(const std::string& name) const;
};
Table parse_table(const std::string& text, bool allow_missing = false);
std::string table_to_csv(const Table& table);

}  // namespace eetsim::io
