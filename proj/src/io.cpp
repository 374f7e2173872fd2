#include "eetsim/io.hpp"

#include "eetsim/error.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace eetsim::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) x = 0.0;  // drop the sign of negative zero
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& field) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw InvalidInput("'" + std::string(text) + "' is not a number", field);
  return v;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string file_sha256(const fs::path& path) { return sha256_hex(read_text(path)); }

// ---------------------------------------------------------------------------
// System JSON

namespace {

Vec3 vec3(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw InvalidInput("expected a 3-vector", field);
  Vec3 v{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw InvalidInput("expected a number", field);
    v[i] = j[i].get<double>();
  }
  return v;
}

std::vector<Vec3> vec3_list(const json& j, const std::string& field) {
  if (!j.is_array()) throw InvalidInput("expected a list of 3-vectors", field);
  std::vector<Vec3> out;
  for (const auto& e : j) out.push_back(vec3(e, field));
  return out;
}

}  // namespace

SiteSystem parse_system_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("system JSON does not parse: ") + e.what(), "system");
  }
  if (!j.is_object()) throw InvalidInput("system must be a JSON object", "system");
  for (const auto& [key, _] : j.items())
    if (key != "n_sites" && key != "mean_energies_cm1" && key != "couplings_cm1" && key != "geometry" && key != "label")
      throw InvalidInput("unknown system key '" + key + "'", "system." + key);
  if (!j.contains("mean_energies_cm1") || !j["mean_energies_cm1"].is_array())
    throw InvalidInput("mean_energies_cm1 must be a list", "mean_energies_cm1");
  std::vector<double> energies;
  for (const auto& e : j["mean_energies_cm1"]) {
    if (!e.is_number()) throw InvalidInput("mean energies must be numbers", "mean_energies_cm1");
    energies.push_back(e.get<double>());
  }
  const std::size_t n = energies.size();
  if (j.contains("n_sites")) {
    if (!j["n_sites"].is_number_integer() || j["n_sites"].get<long long>() != static_cast<long long>(n))
      throw InvalidInput("n_sites does not match the number of mean energies", "n_sites");
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (j.contains("couplings_cm1")) {
    const auto& cj = j["couplings_cm1"];
    if (!cj.is_array() || cj.size() != n) throw InvalidInput("couplings must be an n_sites x n_sites matrix", "couplings_cm1");
    for (std::size_t r = 0; r < n; ++r) {
      if (!cj[r].is_array() || cj[r].size() != n) throw InvalidInput("couplings must be an n_sites x n_sites matrix", "couplings_cm1");
      for (std::size_t k = 0; k < n; ++k) {
        if (!cj[r][k].is_number()) throw InvalidInput("couplings must be numbers", "couplings_cm1");
        c(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = cj[r][k].get<double>();
      }
    }
  }
  std::optional<Geometry> geom;
  if (j.contains("geometry") && !j["geometry"].is_null()) {
    const auto& g = j["geometry"];
    if (!g.is_object()) throw InvalidInput("geometry must be an object", "geometry");
    Geometry out;
    if (!g.contains("positions_A")) throw InvalidInput("geometry needs positions_A", "geometry.positions_A");
    if (!g.contains("dipoles")) throw InvalidInput("geometry needs dipoles", "geometry.dipoles");
    out.positions_A = vec3_list(g["positions_A"], "geometry.positions_A");
    out.dipoles = vec3_list(g["dipoles"], "geometry.dipoles");
    if (g.contains("symmetry_axis")) out.symmetry_axis = vec3(g["symmetry_axis"], "geometry.symmetry_axis");
    geom = std::move(out);
  }
  return SiteSystem(std::move(energies), std::move(c), std::move(geom));
}

SiteSystem load_system(const fs::path& path) { return parse_system_json(read_text(path)); }

std::string system_to_json(const SiteSystem& system) {
  json j;
  j["n_sites"] = system.n_sites();
  j["mean_energies_cm1"] = system.mean_energies();
  json c = json::array();
  for (Eigen::Index r = 0; r < system.couplings().rows(); ++r) {
    json row = json::array();
    for (Eigen::Index k = 0; k < system.couplings().cols(); ++k) row.push_back(system.couplings()(r, k));
    c.push_back(row);
  }
  j["couplings_cm1"] = c;
  if (const auto& g = system.geometry()) {
    j["geometry"]["positions_A"] = g->positions_A;
    j["geometry"]["dipoles"] = g->dipoles;
    j["geometry"]["symmetry_axis"] = g->symmetry_axis;
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Tables

namespace {

std::vector<std::string_view> split_lines(const std::string& text) {
  std::vector<std::string_view> lines;
  std::string_view s(text);
  while (!s.empty()) {
    const auto pos = s.find('\n');
    std::string_view line = s.substr(0, pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto pos = line.find(',');
    out.push_back(line.substr(0, pos));
    if (pos == std::string_view::npos) break;
    line.remove_prefix(pos + 1);
  }
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

const std::vector<double>& Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return columns[i];
  throw InvalidInput("missing column '" + name + "'", name);
}

Table parse_table(const std::string& text, bool allow_missing) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw InvalidInput("CSV is empty", "csv");
  Table t;
  for (auto f : split_fields(lines[0])) t.header.push_back(trim(f));
  t.columns.assign(t.header.size(), {});
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_fields(lines[r]);
    if (fields.size() != t.header.size())
      throw InvalidInput("row " + std::to_string(r + 1) + " has " + std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(t.header.size()),
                         "csv");
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string f = trim(fields[c]);
      if (f.empty()) {
        if (!allow_missing) throw InvalidInput("missing value in row " + std::to_string(r + 1), t.header[c]);
        t.columns[c].push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        t.columns[c].push_back(parse_double(f, t.header[c]));
      }
    }
  }
  return t;
}

std::string table_to_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c) out += ',';
    out += table.header[c];
  }
  out += '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) out += ',';
      out += format_double(table.columns[c][r]);
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trajectories

EnergyTrajectory parse_trajectory_csv(const std::string& text, std::string label) {
  const Table t = parse_table(text, true);
  if (t.header.size() < 2 || t.header[0] != "t_fs") throw InvalidInput("trajectory CSV must start with a t_fs column", "t_fs");
  const std::size_t n_frames = t.rows();
  if (n_frames < 2) throw InvalidInput("trajectory needs at least two frames", "frames");
  const auto& time = t.columns[0];
  for (double x : time)
    if (std::isnan(x)) throw InvalidInput("time column has missing values", "t_fs");
  const double dt = (time.back() - time.front()) / static_cast<double>(n_frames - 1);
  if (!(dt > 0.0)) throw InvalidInput("time column must increase", "t_fs");
  for (std::size_t k = 1; k < n_frames; ++k)
    if (std::abs(time[k] - time[k - 1] - dt) > 1e-6 * dt) throw InvalidInput("frames must be evenly spaced", "t_fs");

  EnergyTrajectory traj;
  traj.dt_frame_fs = dt;
  traj.label = std::move(label);
  traj.frames.resize(static_cast<Eigen::Index>(n_frames), static_cast<Eigen::Index>(t.header.size() - 1));
  for (std::size_t m = 1; m < t.header.size(); ++m) {
    const auto& col = t.columns[m];
    std::vector<std::size_t> known;
    for (std::size_t k = 0; k < n_frames; ++k)
      if (!std::isnan(col[k])) known.push_back(k);
    const std::size_t missing = n_frames - known.size();
    if (static_cast<double>(missing) > kMaxMissingFraction * static_cast<double>(n_frames))
      throw InvalidInput("column " + t.header[m] + " has " + std::to_string(missing) + " missing values (more than 10%)",
                         t.header[m]);
    std::size_t next = 0;  // index into known of the first known frame >= k
    for (std::size_t k = 0; k < n_frames; ++k) {
      while (next < known.size() && known[next] < k) ++next;
      double v;
      if (next < known.size() && known[next] == k) {
        v = col[k];
      } else if (next == 0) {
        v = col[known.front()];
      } else if (next == known.size()) {
        v = col[known.back()];
      } else {
        const std::size_t a = known[next - 1], b = known[next];
        const double f = static_cast<double>(k - a) / static_cast<double>(b - a);
        v = (1.0 - f) * col[a] + f * col[b];
      }
      traj.frames(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m - 1)) = v;
    }
  }
  traj.validate();
  return traj;
}

EnergyTrajectory load_trajectory(const fs::path& path) {
  return parse_trajectory_csv(read_text(path), path.filename().string());
}

std::string trajectory_to_csv(const EnergyTrajectory& traj) {
  Table t;
  t.header.push_back("t_fs");
  for (std::size_t m = 0; m < traj.n_sites(); ++m) t.header.push_back("site" + std::to_string(m + 1) + "_cm1");
  t.columns.assign(t.header.size(), {});
  for (std::size_t k = 0; k < traj.n_frames(); ++k) {
    t.columns[0].push_back(traj.dt_frame_fs * static_cast<double>(k));
    for (std::size_t m = 0; m < traj.n_sites(); ++m)
      t.columns[m + 1].push_back(traj.frames(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)));
  }
  return table_to_csv(t);
}

// ---------------------------------------------------------------------------
// Density traces

PairList all_pairs(std::size_t n_sites) {
  PairList p;
  for (std::size_t m = 0; m < n_sites; ++m)
    for (std::size_t n = m + 1; n < n_sites; ++n) p.emplace_back(m, n);
  return p;
}

std::string trace_to_csv(const DensityTrace& trace, const PairList& pairs) {
  const std::size_t n = trace.n_sites();
  Table t;
  t.header.push_back("t_fs");
  for (std::size_t m = 0; m < n; ++m) t.header.push_back("pop_" + std::to_string(m + 1));
  for (const auto& [a, b] : pairs) {
    if (a >= n || b >= n || a == b) throw InvalidInput("coherence pair out of range", "coherence_pairs");
    const std::string s = std::to_string(a + 1) + "_" + std::to_string(b + 1);
    t.header.push_back("re_rho_" + s);
    t.header.push_back("im_rho_" + s);
  }
  t.columns.assign(t.header.size(), {});
  for (std::size_t k = 0; k < trace.n_times(); ++k) {
    std::size_t c = 0;
    t.columns[c++].push_back(trace.times_fs[k]);
    for (std::size_t m = 0; m < n; ++m) t.columns[c++].push_back(trace.population(k, m));
    for (const auto& [a, b] : pairs) {
      const Complex z = trace.rho[k](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      t.columns[c++].push_back(z.real());
      t.columns[c++].push_back(z.imag());
    }
  }
  return table_to_csv(t);
}

namespace {

// "re_rho_3_5" -> (2, 4)
std::pair<std::size_t, std::size_t> parse_pair(const std::string& name, std::size_t prefix) {
  const auto us = name.find('_', prefix);
  if (us == std::string::npos) throw InvalidInput("malformed column '" + name + "'", name);
  const double a = parse_double(std::string_view(name).substr(prefix, us - prefix), name);
  const double b = parse_double(std::string_view(name).substr(us + 1), name);
  if (a < 1 || b < 1) throw InvalidInput("site indices are 1-based", name);
  return {static_cast<std::size_t>(a) - 1, static_cast<std::size_t>(b) - 1};
}

}  // namespace

DensityTrace parse_trace_csv(const std::string& text) {
  const Table t = parse_table(text);
  if (t.header.empty() || t.header[0] != "t_fs") throw InvalidInput("trace CSV must start with a t_fs column", "t_fs");
  std::size_t n = 0;
  while (1 + n < t.header.size() && t.header[1 + n] == "pop_" + std::to_string(n + 1)) ++n;
  if (n == 0) throw InvalidInput("trace CSV has no population columns", "pop_1");
  const std::size_t rest = t.header.size() - 1 - n;
  if (rest % 2) throw InvalidInput("coherence columns must come in re/im pairs", "csv");
  DensityTrace trace;
  trace.times_fs = t.columns[0];
  PairList pairs;
  for (std::size_t c = 1 + n; c < t.header.size(); c += 2) {
    const auto& re = t.header[c];
    const auto& im = t.header[c + 1];
    if (re.rfind("re_rho_", 0) != 0 || im != "im" + re.substr(2)) throw InvalidInput("unexpected column '" + re + "'", re);
    auto p = parse_pair(re, 7);
    if (p.first >= n || p.second >= n || p.first == p.second) throw InvalidInput("pair out of range", re);
    pairs.push_back(p);
  }
  const auto ni = static_cast<Eigen::Index>(n);
  for (std::size_t k = 0; k < t.rows(); ++k) {
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(ni, ni);
    for (std::size_t m = 0; m < n; ++m) r(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)) = t.columns[1 + m][k];
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const Complex z(t.columns[1 + n + 2 * p][k], t.columns[2 + n + 2 * p][k]);
      const auto a = static_cast<Eigen::Index>(pairs[p].first), b = static_cast<Eigen::Index>(pairs[p].second);
      r(a, b) = z;
      r(b, a) = std::conj(z);
    }
    trace.rho.push_back(std::move(r));
  }
  trace.stored_pairs.emplace();
  for (auto p : pairs) trace.stored_pairs->emplace_back(std::min(p.first, p.second), std::max(p.first, p.second));
  return trace;
}

DensityTrace load_trace(const fs::path& path) { return parse_trace_csv(read_text(path)); }

// ---------------------------------------------------------------------------
// Propagator records

std::string propagator_to_csv(const PropagatorRecord& record) {
  const auto n = record.mean_u.empty() ? 0 : static_cast<std::size_t>(record.mean_u.front().rows());
  Table t;
  t.header.push_back("t_fs");
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const std::string s = std::to_string(a + 1) + "_" + std::to_string(b + 1);
      t.header.push_back("re_U_" + s);
      t.header.push_back("im_U_" + s);
    }
  t.columns.assign(t.header.size(), {});
  for (std::size_t k = 0; k < record.times_fs.size(); ++k) {
    std::size_t c = 0;
    t.columns[c++].push_back(record.times_fs[k]);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        const Complex z = record.mean_u[k](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        t.columns[c++].push_back(z.real());
        t.columns[c++].push_back(z.imag());
      }
  }
  return table_to_csv(t);
}

PropagatorRecord parse_propagator_csv(const std::string& text) {
  const Table t = parse_table(text);
  if (t.header.empty() || t.header[0] != "t_fs") throw InvalidInput("propagator CSV must start with a t_fs column", "t_fs");
  const std::size_t nn = (t.header.size() - 1) / 2;
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(nn))));
  if (n == 0 || n * n != nn || 1 + 2 * nn != t.header.size())
    throw InvalidInput("propagator CSV needs 2 n^2 element columns", "csv");
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const std::string s = std::to_string(a + 1) + "_" + std::to_string(b + 1);
      const std::size_t c = 1 + 2 * (a * n + b);
      if (t.header[c] != "re_U_" + s || t.header[c + 1] != "im_U_" + s)
        throw InvalidInput("expected columns re_U_" + s + ",im_U_" + s, t.header[c]);
    }
  PropagatorRecord rec;
  rec.times_fs = t.columns[0];
  const auto ni = static_cast<Eigen::Index>(n);
  for (std::size_t k = 0; k < t.rows(); ++k) {
    Eigen::MatrixXcd u(ni, ni);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t c = 1 + 2 * (a * n + b);
        u(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = Complex(t.columns[c][k], t.columns[c + 1][k]);
      }
    rec.mean_u.push_back(std::move(u));
  }
  return rec;
}

PropagatorRecord load_propagator(const fs::path& path) { return parse_propagator_csv(read_text(path)); }

}  // namespace eetsim::io
