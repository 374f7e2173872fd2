#include "commands.hpp"

#include "eetsim/analysis.hpp"
#include "eetsim/error.hpp"
#include "eetsim/hsr.hpp"
#include "eetsim/io.hpp"
#include "eetsim/noise.hpp"
#include "eetsim/propagator.hpp"
#include "eetsim/qjc.hpp"
#include "eetsim/spectra.hpp"
#include "eetsim/units.hpp"
#include "eetsim/version.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <set>

namespace eetsim::commands {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Typed access to one JSON object. Every key read is recorded so that
// finish() can reject misspelled or unsupported keys.
class Reader {
 public:
  Reader(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw InvalidInput("expected a JSON object", where());
  }

  std::string field(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    if (!has(key)) throw InvalidInput("missing required field", field(key));
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw InvalidInput("expected a number", field(key));
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::uint64_t count(const std::string& key) {
    const json& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) throw InvalidInput("must not be negative", field(key));
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    throw InvalidInput("expected a nonnegative integer", field(key));
  }
  std::uint64_t count(const std::string& key, std::uint64_t fallback) { return has(key) ? count(key) : fallback; }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw InvalidInput("expected a string", field(key));
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) { return has(key) ? string(key) : fallback; }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw InvalidInput("expected true or false", field(key));
    return v.get<bool>();
  }

  /// Scalar broadcast to n entries, or a list of exactly n numbers.
  std::vector<double> per_site(const std::string& key, std::size_t n) {
    const json& v = raw(key);
    if (v.is_number()) return std::vector<double>(n, v.get<double>());
    if (!v.is_array() || v.size() != n) throw InvalidInput("expected a number or a list of " + std::to_string(n), field(key));
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw InvalidInput("expected numbers", field(key));
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) throw InvalidInput("expected a list of numbers", field(key));
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw InvalidInput("expected numbers", field(key));
      out.push_back(e.get<double>());
    }
    return out;
  }

  Reader object(const std::string& key) { return Reader(raw(key), field(key)); }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!used_.count(key)) throw InvalidInput("unknown field", field(key));
  }

 private:
  std::string where() const { return prefix_.empty() ? "config" : prefix_; }

  const json& j_;
  std::string prefix_;
  std::set<std::string> used_;
};

struct Context {
  fs::path base_dir;
  fs::path out_dir;
  std::map<std::string, std::string> inputs;   // path as given -> sha256
  std::map<std::string, std::string> outputs;  // file name -> sha256
  json summary = json::object();
  json warnings = json::array();

  fs::path input(const std::string& path) {
    const fs::path p = fs::path(path).is_absolute() ? fs::path(path) : base_dir / path;
    if (!fs::exists(p)) throw IoError("input file not found: " + p.string());
    inputs[path] = io::file_sha256(p);
    return p;
  }

  void write(const std::string& name, const std::string& content) {
    io::write_atomic(out_dir / name, content);
    outputs[name] = io::sha256_hex(content);
  }
};

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

// 1-based index from JSON into 0-based.
std::size_t site_index(const json& v, std::size_t n, const std::string& field) {
  if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > static_cast<long long>(n))
    throw InvalidInput("site index must be an integer in 1.." + std::to_string(n), field);
  return static_cast<std::size_t>(v.get<long long>() - 1);
}

io::PairList pair_list(const json& v, std::size_t n, const std::string& field) {
  if (!v.is_array()) throw InvalidInput("expected a list of [m, n] pairs", field);
  io::PairList out;
  for (const auto& p : v) {
    if (!p.is_array() || p.size() != 2) throw InvalidInput("expected a list of [m, n] pairs", field);
    const std::size_t a = site_index(p[0], n, field), b = site_index(p[1], n, field);
    if (a == b) throw InvalidInput("pair needs two distinct sites", field);
    out.emplace_back(std::min(a, b), std::max(a, b));
  }
  return out;
}

Complex complex_value(const json& v, const std::string& field) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) return {v[0].get<double>(), v[1].get<double>()};
  throw InvalidInput("expected a number or [re, im]", field);
}

SiteSystem read_system(Reader& r, Context& ctx) {
  const json& v = r.raw("system");
  if (v.is_string()) return io::load_system(ctx.input(v.get<std::string>()));
  if (v.is_object()) return io::parse_system_json(v.dump());
  throw InvalidInput("system must be a file path or an inline object", r.field("system"));
}

std::vector<double> omega_grid(Reader& r, const std::string& key, double lo, double hi, double step) {
  if (r.has(key)) {
    Reader g = r.object(key);
    lo = g.number("min", lo);
    hi = g.number("max", hi);
    step = g.number("step", step);
    g.finish();
  }
  if (!(step > 0.0) || !(hi >= lo)) throw InvalidInput("grid needs min <= max and step > 0", r.field(key));
  if ((hi - lo) / step > 1e6) throw InvalidInput("grid has more than 10^6 points", r.field(key));
  return linear_grid(lo, hi, step);
}

SpectralDensity read_spectral_density(Reader& parent, Context& ctx) {
  if (!parent.has("spectral_density")) return DrudeLorentz{};
  Reader r = parent.object("spectral_density");
  const std::string type = r.string("type", "drude_lorentz");
  SpectralDensity sd = SpectralDensity::zero();
  if (type == "drude_lorentz") {
    DrudeLorentz dl;
    dl.lambda_cm1 = r.number("lambda_cm1", dl.lambda_cm1);
    const double cutoff = r.number("cutoff_fs", 1.0 / dl.gamma_fs1);
    if (!(cutoff > 0.0)) throw InvalidInput("cutoff time must be positive", r.field("cutoff_fs"));
    if (!(dl.lambda_cm1 >= 0.0)) throw InvalidInput("reorganization energy must be nonnegative", r.field("lambda_cm1"));
    dl.gamma_fs1 = 1.0 / cutoff;
    sd = dl;
  } else if (type == "tabulated") {
    const io::Table t = io::parse_table(io::read_text(ctx.input(r.string("file"))));
    sd = TabulatedSpectralDensity{t.column("omega_cm1"), t.column("J_cm1")};
  } else if (type != "none") {
    throw InvalidInput("type must be drude_lorentz, tabulated or none", r.field("type"));
  }
  r.finish();
  return sd;
}

// ---------------------------------------------------------------------------
// simulate

struct FluctuationSpec {
  FluctuationModel model;
  std::shared_ptr<const EnergyTrajectory> recorded;  // when type = recorded
};

FluctuationSpec read_fluctuation(Reader& parent, Context& ctx, std::size_t n, double dt_default, std::uint64_t seed) {
  FluctuationSpec out{NoFluctuation{}, nullptr};
  if (!parent.has("fluctuation")) return out;
  Reader r = parent.object("fluctuation");
  const std::string type = r.string("type");
  if (type == "none") {
  } else if (type == "static") {
    out.model = StaticDisorder{r.per_site("sigma_cm1", n)};
  } else if (type == "ar1") {
    out.model = Ar1Noise{r.per_site("sigma_cm1", n), r.per_site("tau_fs", n), r.number("dt_fs", dt_default)};
  } else if (type == "recorded") {
    auto traj = io::load_trajectory(ctx.input(r.string("trajectory")));
    if (r.boolean("decorrelate", false)) traj = decorrelate(traj, r.count("decorrelate_seed", seed));
    out.recorded = std::make_shared<const EnergyTrajectory>(std::move(traj));
    out.model = RecordedNoise{out.recorded, r.number("window_fs", out.recorded->duration_fs())};
  } else {
    throw InvalidInput("type must be none, static, ar1 or recorded", r.field("type"));
  }
  r.finish();
  validate_fluctuation(out.model, n);
  return out;
}

InitialState read_initial_state(Reader& r, std::size_t n) {
  if (r.has("initial_site") && r.has("initial_state"))
    throw InvalidInput("give either initial_site or initial_state", r.field("initial_state"));
  if (r.has("initial_state")) {
    Reader s = r.object("initial_state");
    InitialState out;
    if (s.has("amplitudes")) {
      const json& a = s.raw("amplitudes");
      if (!a.is_array() || a.size() != n) throw InvalidInput("expected " + std::to_string(n) + " amplitudes", s.field("amplitudes"));
      Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = complex_value(a[i], s.field("amplitudes"));
      out = PureState(std::move(v));
    } else if (s.has("density")) {
      const json& d = s.raw("density");
      if (!d.is_array() || d.size() != n) throw InvalidInput("expected an n x n matrix", s.field("density"));
      Eigen::MatrixXcd rho(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        if (!d[i].is_array() || d[i].size() != n) throw InvalidInput("expected an n x n matrix", s.field("density"));
        for (std::size_t k = 0; k < n; ++k)
          rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = complex_value(d[i][k], s.field("density"));
      }
      out = DensityMatrix(std::move(rho));
    } else {
      throw InvalidInput("initial_state needs amplitudes or density", r.field("initial_state"));
    }
    s.finish();
    return out;
  }
  if (r.has("initial_site")) return site_index(r.raw("initial_site"), n, r.field("initial_site"));
  return std::size_t{0};
}

Method parse_method(const std::string& s, const std::string& field) {
  if (s == "MD") return Method::MD;
  if (s == "QJC") return Method::QJC;
  if (s == "HSR") return Method::HSR;
  throw InvalidInput("method must be MD, QJC or HSR", field);
}

DephasingRates read_hsr_rates(Reader& parent, Context& ctx, const FluctuationSpec& fluct, std::size_t n, double temperature) {
  if (parent.has("hsr")) {
    Reader r = parent.object("hsr");
    DephasingRates rates;
    if (r.has("rates_fs1")) {
      rates = dephasing_rates_explicit(r.per_site("rates_fs1", n));
    } else if (r.has("sigma_cm1")) {
      rates = dephasing_rates(r.per_site("sigma_cm1", n), r.per_site("tau_fs", n), temperature);
    } else if (r.has("trajectory")) {
      const auto traj = io::load_trajectory(ctx.input(r.string("trajectory")));
      if (traj.n_sites() != n) throw InvalidInput("trajectory site count differs from the system", r.field("trajectory"));
      std::optional<double> tau;
      if (r.has("tau_fs")) tau = r.number("tau_fs");
      rates = dephasing_rates_from_trajectory(traj, tau, temperature, r.number("fit_window_fs", 10.0));
    } else {
      throw InvalidInput("hsr needs rates_fs1, sigma_cm1 + tau_fs, or trajectory", parent.field("hsr"));
    }
    r.finish();
    return rates;
  }
  return std::visit(
      [&](const auto& f) -> DephasingRates {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, NoFluctuation>) {
          return dephasing_rates_explicit(std::vector<double>(n, 0.0));
        } else if constexpr (std::is_same_v<T, Ar1Noise>) {
          return dephasing_rates(f.sigma_cm1, f.tau_fs, temperature);
        } else if constexpr (std::is_same_v<T, RecordedNoise>) {
          return dephasing_rates_from_trajectory(*f.trajectory, std::nullopt, temperature);
        } else {
          throw InvalidInput("static disorder has no dephasing rate; give hsr rates explicitly", parent.field("hsr"));
        }
      },
      fluct.model);
}

void cmd_simulate(Reader& r, Context& ctx) {
  const SiteSystem system = read_system(r, ctx);
  const std::size_t n = system.n_sites();
  SimConfig cfg;
  cfg.dt_fs = r.number("dt_fs", cfg.dt_fs);
  cfg.t_total_fs = r.number("t_total_fs", cfg.t_total_fs);
  cfg.output_dt_fs = r.number("output_dt_fs", cfg.output_dt_fs);
  cfg.n_traj = r.count("n_traj", cfg.n_traj);
  cfg.seed = r.count("seed", 0);
  cfg.workers = r.count("workers", 0);
  cfg.method = parse_method(r.string("method", "MD"), r.field("method"));
  cfg.temperature_K = r.number("temperature_K", 0.0);
  cfg.record_propagator = r.boolean("record_propagator", false);
  cfg.initial_state = read_initial_state(r, n);
  const FluctuationSpec fluct = read_fluctuation(r, ctx, n, cfg.dt_fs, cfg.seed);
  const io::PairList pairs = r.has("coherence_pairs") ? pair_list(r.raw("coherence_pairs"), n, r.field("coherence_pairs"))
                                                      : io::all_pairs(n);
  if (cfg.record_propagator && cfg.method != Method::MD)
    throw InvalidInput("propagator records are only available for the MD method", r.field("record_propagator"));

  DensityTrace trace;
  std::optional<PropagatorRecord> record;
  if (cfg.method == Method::MD) {
    r.has("spectral_density");  // accepted and ignored for MD
    auto res = run_ensemble(system, fluct.model, cfg);
    trace = std::move(res.trace);
    record = std::move(res.propagator);
  } else if (cfg.method == Method::QJC) {
    const SpectralDensity sd = read_spectral_density(r, ctx);
    trace = run_ensemble_qjc(system, fluct.model, sd, cfg);
  } else {
    cfg.validate(n);
    const DephasingRates rates = read_hsr_rates(r, ctx, fluct, n, cfg.temperature_K);
    if (rates.size() != n) throw InvalidInput("one dephasing rate per site required", r.field("hsr"));
    trace = hsr_propagate(initial_density(cfg.initial_state, n), system.mean_hamiltonian(), rates, cfg.output_times());
    trace.seed = cfg.seed;
    ctx.summary["hsr_rates_fs1"] = rates.rate_fs1;
  }
  if (cfg.method != Method::HSR) r.has("hsr");
  r.finish();

  ctx.write("trace.csv", io::trace_to_csv(trace, pairs));
  if (record) ctx.write("propagator.csv", io::propagator_to_csv(*record));
  ctx.summary["method"] = method_name(cfg.method);
  ctx.summary["n_sites"] = n;
  ctx.summary["n_times"] = trace.n_times();
  ctx.summary["seed"] = cfg.seed;
}

// ---------------------------------------------------------------------------
// noise

json statistics_json(const EnergyTrajectory& traj, double fit_window_fs, std::optional<double> temperature) {
  json sites = json::array();
  const double max_lag = std::min(fit_window_fs, traj.duration_fs() - traj.dt_frame_fs);
  for (std::size_t m = 0; m < traj.n_sites(); ++m) {
    const auto st = site_statistics(traj, m);
    json s;
    s["site"] = m + 1;
    s["mean_cm1"] = st.mean_cm1;
    s["sigma_cm1"] = st.sigma_cm1;
    double tau = std::numeric_limits<double>::quiet_NaN();
    try {
      tau = fit_correlation_time(correlation(traj, m, m, max_lag), fit_window_fs);
    } catch (const InvalidInput&) {
      // constant or anticorrelated series: no exponential fit
    }
    if (std::isfinite(tau) && tau > 0.0) {
      s["tau_fs"] = tau;
      s["dephasing_rate_fs1"] = dephasing_rate(st.sigma_cm1, tau);
      s["dephasing_width_cm1"] = dephasing_width(st.sigma_cm1, tau);
    } else {
      s["tau_fs"] = nullptr;
    }
    sites.push_back(s);
  }
  json out;
  out["sites"] = sites;
  out["fit_window_fs"] = fit_window_fs;
  if (temperature) out["temperature_K"] = *temperature;
  return out;
}

void cmd_noise(Reader& r, Context& ctx) {
  const std::string mode = r.string("mode");
  const std::uint64_t seed = r.count("seed", 0);
  r.has("workers");  // single-threaded; accepted for uniformity
  if (mode == "ar1") {
    const std::size_t n = r.count("n_sites", 1);
    if (n < 1) throw InvalidInput("n_sites must be at least 1", r.field("n_sites"));
    const auto sigma = r.per_site("sigma_cm1", n);
    const auto tau = r.per_site("tau_fs", n);
    const auto mean = r.has("mean_cm1") ? r.per_site("mean_cm1", n) : std::vector<double>(n, 0.0);
    const double dt = r.number("dt_fs", 1.0);
    const std::size_t steps = r.count("n_steps");
    const double rho = r.number("cross_correlation", 0.0);
    if (steps < 2) throw InvalidInput("n_steps must be at least 2", r.field("n_steps"));
    if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidInput("cross_correlation must lie in [0, 1]", r.field("cross_correlation"));
    if (rho > 0.0)
      for (double t : tau)
        if (t != tau[0]) throw InvalidInput("cross-correlated noise needs one common tau", r.field("tau_fs"));
    EnergyTrajectory traj;
    traj.dt_frame_fs = dt;
    traj.frames.resize(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(n));
    // Unit processes: independent parts per site plus one shared part with
    // equal-time correlation rho between any two sites.
    std::vector<double> shared(steps, 0.0);
    if (rho > 0.0) shared = ar1_generate(1.0, tau[0], dt, steps, trajectory_seed(seed, n, 0));
    for (std::size_t m = 0; m < n; ++m) {
      const auto own = ar1_generate(1.0, tau[m], dt, steps, trajectory_seed(seed, m, 0));
      for (std::size_t k = 0; k < steps; ++k)
        traj.frames(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) =
            mean[m] + sigma[m] * (std::sqrt(1.0 - rho) * own[k] + std::sqrt(rho) * shared[k]);
    }
    if (!(dt > 0.0)) throw InvalidInput("dt_fs must be positive", r.field("dt_fs"));
    r.finish();
    ctx.write("trajectory.csv", io::trajectory_to_csv(traj));
    ctx.summary["n_sites"] = n;
    ctx.summary["n_frames"] = steps;
  } else if (mode == "decorrelate") {
    const auto traj = io::load_trajectory(ctx.input(r.string("trajectory")));
    r.finish();
    ctx.write("trajectory.csv", io::trajectory_to_csv(decorrelate(traj, seed)));
    std::vector<std::size_t> off = decorrelation_offsets(traj.n_frames(), traj.n_sites(), seed);
    ctx.summary["offsets_frames"] = off;
  } else if (mode == "correlation") {
    const auto traj = io::load_trajectory(ctx.input(r.string("trajectory")));
    std::size_t m = 0, n = 0;
    if (r.has("sites")) {
      const json& s = r.raw("sites");
      if (!s.is_array() || s.size() != 2) throw InvalidInput("expected [m, n]", r.field("sites"));
      m = site_index(s[0], traj.n_sites(), r.field("sites"));
      n = site_index(s[1], traj.n_sites(), r.field("sites"));
    } else {
      m = n = site_index(r.has("site") ? r.raw("site") : json(1), traj.n_sites(), r.field("site"));
    }
    const double max_lag = r.number("max_lag_fs");
    CosineTransformOptions opts;
    opts.window_fs = r.number("window_fs", 0.0);
    const auto omega = omega_grid(r, "omega_cm1", 0.0, 1000.0, 5.0);
    const double fit_window = r.number("fit_window_fs", 10.0);
    std::optional<double> temperature;
    if (r.has("temperature_K")) temperature = r.number("temperature_K");
    r.finish();

    const auto corr = correlation(traj, m, n, max_lag);
    io::Table ct{{"t_fs", "C_cm2"}, {{}, corr.values}};
    for (std::size_t k = 0; k < corr.values.size(); ++k) ct.columns[0].push_back(corr.dt_lag_fs * static_cast<double>(k));
    ctx.write("correlation.csv", io::table_to_csv(ct));
    ctx.write("cosine_transform.csv", io::table_to_csv({{"omega_cm1", "raw_cm2_fs"}, {omega, cosine_transform(corr, omega, opts)}}));
    if (corr.is_auto()) {
      if (!temperature) throw InvalidInput("spectral density needs temperature_K", r.field("temperature_K"));
      const auto sd = spectral_density(corr, ThermalParams(*temperature), omega, opts);
      ctx.write("spectral_density.csv", io::table_to_csv({{"omega_cm1", "J_cm1"}, {omega, sd.tabulated().j_cm1}}));
    }
    ctx.write("statistics.json", json_text(statistics_json(traj, fit_window, temperature)));
    ctx.summary["n_samples"] = corr.n_samples;
  } else {
    throw InvalidInput("mode must be ar1, decorrelate or correlation", r.field("mode"));
  }
  ctx.summary["mode"] = mode;
}

// ---------------------------------------------------------------------------
// spectrum

void cmd_spectrum(Reader& r, Context& ctx) {
  const SiteSystem system = read_system(r, ctx);
  const PropagatorRecord record = io::load_propagator(ctx.input(r.string("propagator")));
  std::vector<SpectrumKind> kinds;
  const json& k = r.has("kind") ? r.raw("kind") : json("abs");
  if (k.is_string()) {
    kinds.push_back(parse_spectrum_kind(k.get<std::string>()));
  } else if (k.is_array()) {
    for (const auto& e : k) {
      if (!e.is_string()) throw InvalidInput("expected spectrum kind names", r.field("kind"));
      kinds.push_back(parse_spectrum_kind(e.get<std::string>()));
    }
  } else {
    throw InvalidInput("kind must be a name or a list of names", r.field("kind"));
  }
  SpectrumOptions opts;
  opts.window_fs = r.number("window_fs", opts.window_fs);
  opts.normalize = r.boolean("normalize", true);
  double lo = 0.0, hi = 0.0;
  {
    const auto& e = system.mean_energies();
    lo = *std::min_element(e.begin(), e.end()) - 1000.0;
    hi = *std::max_element(e.begin(), e.end()) + 1000.0;
  }
  const auto grid = omega_grid(r, "omega_cm1", lo, hi, 1.0);
  const double shift = r.number("shift_cm1", 0.0);
  std::optional<io::Table> experiment;
  if (r.has("experimental")) experiment = io::parse_table(io::read_text(ctx.input(r.string("experimental"))));
  r.has("workers");
  r.has("seed");
  r.finish();

  json flags = json::object();
  for (SpectrumKind kind : kinds) {
    const Spectrum s = compute_spectrum(record, system, kind, grid, opts);
    const std::string name = spectrum_kind_name(kind);
    ctx.write("spectrum_" + name + ".csv", io::table_to_csv({{"omega_cm1", "intensity"}, {s.omega_cm1, s.intensity}}));
    if (s.short_record)
      ctx.warnings.push_back("short_record: " + name + " record is shorter than five apodization windows");
    flags[name] = {{"short_record", s.short_record}};
    if (shift != 0.0 || experiment) {
      const Spectrum o = overlay_shift(s, shift);
      io::Table t{{"omega_cm1", "intensity"}, {o.omega_cm1, o.intensity}};
      if (experiment) {
        const auto& ew = experiment->column("omega_cm1");
        const auto& ei = experiment->column("intensity");
        std::vector<double> col;
        for (double w : o.omega_cm1) {
          double v = std::numeric_limits<double>::quiet_NaN();
          const auto it = std::lower_bound(ew.begin(), ew.end(), w);
          if (it != ew.end() && it != ew.begin()) {
            const std::size_t j = static_cast<std::size_t>(it - ew.begin());
            const double f = (w - ew[j - 1]) / (ew[j] - ew[j - 1]);
            v = (1.0 - f) * ei[j - 1] + f * ei[j];
          } else if (it != ew.end() && *it == w) {
            v = ei[static_cast<std::size_t>(it - ew.begin())];
          }
          col.push_back(v);
        }
        t.header.push_back("experimental");
        t.columns.push_back(std::move(col));
      }
      ctx.write("overlay_" + name + ".csv", io::table_to_csv(t));
    }
  }
  ctx.summary["spectra"] = flags;
  ctx.summary["shift_cm1"] = shift;
}

// ---------------------------------------------------------------------------
// analyze / compare

void cmd_analyze(Reader& r, Context& ctx) {
  json result = json::object();
  if (r.has("trace")) {
    const DensityTrace trace = io::load_trace(ctx.input(r.string("trace")));
    const std::size_t n = trace.n_sites();
    const double threshold = r.number("threshold", std::exp(-1.0));
    const io::PairList pairs = r.has("pairs") ? pair_list(r.raw("pairs"), n, r.field("pairs"))
                                              : io::PairList{{0, std::min<std::size_t>(1, n - 1)}};
    json lifetimes = json::array();
    for (const auto& [a, b] : pairs) {
      const auto lt = coherence_lifetime(trace, a, b, threshold);
      json e;
      e["pair"] = {a + 1, b + 1};
      e["lifetime_fs"] = lt.lifetime_fs ? json(*lt.lifetime_fs) : json(nullptr);
      e["reference"] = lt.reference;
      e["n_maxima"] = lt.n_maxima;
      if (!lt.diagnostic.empty()) e["diagnostic"] = lt.diagnostic;
      lifetimes.push_back(e);
    }
    result["threshold"] = threshold;
    result["coherence_lifetimes"] = lifetimes;
  }
  if (r.has("dephasing")) {
    Reader d = r.object("dephasing");
    std::vector<double> temps, rates;
    json detail = json::array();
    if (d.has("trajectories")) {
      const json& list = d.raw("trajectories");
      if (!list.is_array()) throw InvalidInput("expected a list", d.field("trajectories"));
      std::optional<double> tau;
      if (d.has("tau_fs")) tau = d.number("tau_fs");
      const double fit_window = d.number("fit_window_fs", 10.0);
      for (std::size_t i = 0; i < list.size(); ++i) {
        Reader e(list[i], d.field("trajectories") + "[" + std::to_string(i) + "]");
        const auto traj = io::load_trajectory(ctx.input(e.string("file")));
        const double t = e.number("temperature_K");
        e.finish();
        const auto dr = dephasing_rates_from_trajectory(traj, tau, t, fit_window);
        double mean = 0.0;
        json widths = json::array();
        for (double g : dr.rate_fs1) {
          widths.push_back(g * units::hbar_cm1_fs);
          mean += g * units::hbar_cm1_fs;
        }
        mean /= static_cast<double>(dr.size());
        temps.push_back(t);
        rates.push_back(mean);
        detail.push_back({{"temperature_K", t}, {"site_widths_cm1", widths}, {"mean_width_cm1", mean}, {"tau_fs", dr.tau_fs}});
      }
    } else {
      temps = d.numbers("temperatures_K");
      rates = d.numbers("rates_cm1");
    }
    d.finish();
    result["dephasing"] = {{"temperatures_K", temps}, {"rates_cm1", rates}, {"slope_cm1_per_K", dephasing_slope(temps, rates)}};
    if (!detail.empty()) result["dephasing"]["points"] = detail;
  }
  r.has("workers");
  r.has("seed");
  r.finish();
  if (result.empty()) throw InvalidInput("analyze needs trace and/or dephasing", "trace");
  ctx.write("analysis.json", json_text(result));
  ctx.summary["analysis"] = result;
}

void cmd_compare(Reader& r, Context& ctx) {
  const DensityTrace a = io::load_trace(ctx.input(r.string("a")));
  const DensityTrace b = io::load_trace(ctx.input(r.string("b")));
  std::vector<Observable> obs;
  if (r.has("observables")) {
    const json& list = r.raw("observables");
    if (!list.is_array()) throw InvalidInput("expected a list", r.field("observables"));
    for (const auto& o : list) {
      if (o.is_object() && o.contains("population") && o.size() == 1) {
        obs.push_back(Observable::population(site_index(o["population"], a.n_sites(), r.field("observables"))));
      } else if (o.is_object() && o.contains("coherence") && o.size() == 1) {
        const auto p = pair_list(json::array({o["coherence"]}), a.n_sites(), r.field("observables"));
        obs.push_back(Observable::coherence(p[0].first, p[0].second));
      } else {
        throw InvalidInput("observables are {\"population\": m} or {\"coherence\": [m, n]}", r.field("observables"));
      }
    }
  } else {
    for (std::size_t m = 0; m < a.n_sites(); ++m) obs.push_back(Observable::population(m));
  }
  r.has("workers");
  r.has("seed");
  r.finish();
  auto to_json = [](const TraceComparison& c) {
    return json{{"rmsd", c.rmsd}, {"max_abs_dev", c.max_abs_dev}, {"time_of_max_dev", c.time_of_max_dev}};
  };
  json result;
  result["populations"] = to_json(compare_populations(a, b));
  json per = json::object();
  for (const auto& o : obs) per[o.label()] = to_json(compare_traces(a, b, o));
  result["observables"] = per;
  ctx.write("comparison.json", json_text(result));
  ctx.summary["comparison"] = result;
}

}  // namespace

json run(const json& config, const fs::path& base_dir, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  Reader r(config, "");
  const std::string command = r.string("command");
  Context ctx;
  ctx.base_dir = base_dir;
  ctx.out_dir = out_dir;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output directory " + out_dir.string());

  if (command == "simulate") {
    cmd_simulate(r, ctx);
  } else if (command == "noise") {
    cmd_noise(r, ctx);
  } else if (command == "spectrum") {
    cmd_spectrum(r, ctx);
  } else if (command == "analyze") {
    cmd_analyze(r, ctx);
  } else if (command == "compare") {
    cmd_compare(r, ctx);
  } else {
    throw InvalidInput("command must be simulate, noise, spectrum, analyze or compare", "command");
  }

  json manifest;
  manifest["command"] = command;
  manifest["config_sha256"] = io::sha256_hex(config.dump());
  manifest["seed"] = config.contains("seed") ? config["seed"] : json(nullptr);
  manifest["workers"] = config.contains("workers") ? config["workers"] : json(0);
  manifest["versions"] = {{"eetsim", version_string()},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                        std::to_string(EIGEN_MINOR_VERSION)},
                          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  manifest["inputs"] = ctx.inputs;
  manifest["outputs"] = ctx.outputs;
  manifest["warnings"] = ctx.warnings;
  manifest["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  io::write_atomic(out_dir / "manifest.json", json_text(manifest));

  json summary = ctx.summary;
  summary["command"] = command;
  summary["out_dir"] = out_dir.string();
  json outs = json::array();
  for (const auto& [name, _] : ctx.outputs) outs.push_back(name);
  outs.push_back("manifest.json");
  summary["outputs"] = outs;
  summary["warnings"] = ctx.warnings;
  return summary;
}

}  // namespace eetsim::commands
