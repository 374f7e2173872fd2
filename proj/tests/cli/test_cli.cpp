// Drives the eetsim executable end to end: exit codes, error reports, output
// headers and byte-identical reruns across worker counts.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void expect(bool ok, const std::string& what) {
  if (!ok) {
    std::cerr << "FAILED: " << what << "\n";
    ++failures;
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

const fs::path scratch = EETSIM_SCRATCH_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::string& args) {
  const fs::path o = scratch / "stdout.txt", e = scratch / "stderr.txt";
  const std::string cmd = std::string("\"") + EETSIM_CLI_PATH + "\" " + args + " >\"" + o.string() + "\" 2>\"" + e.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(o), slurp(e)};
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

// Every file of `a` except the manifest (which carries wall-clock time) must
// match `b` byte for byte.
bool same_outputs(const fs::path& a, const fs::path& b) {
  bool ok = true;
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    if (name == "manifest.json") continue;
    ++files;
    if (!fs::exists(b / name) || slurp(entry.path()) != slurp(b / name)) {
      std::cerr << "  differs: " << name << "\n";
      ok = false;
    }
  }
  return ok && files > 0;
}

void check_workers_invariant(const std::string& name, const std::string& config) {
  const fs::path cfg = scratch / (name + ".json");
  write(cfg, config);
  const fs::path a = scratch / (name + "_w1"), b = scratch / (name + "_w3");
  const Result ra = run(name.substr(0, name.find('_')) + " \"" + cfg.string() + "\" --out \"" + a.string() + "\" --workers 1");
  const Result rb = run(name.substr(0, name.find('_')) + " \"" + cfg.string() + "\" --out \"" + b.string() + "\" --workers 3");
  expect(ra.code == 0 && rb.code == 0, name + " exits 0 (" + ra.err + rb.err + ")");
  expect(same_outputs(a, b), name + " outputs identical for 1 and 3 workers");
  expect(fs::exists(a / "manifest.json"), name + " writes a manifest");
}

}  // namespace

int main() {
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  const std::string system = R"({"n_sites": 2, "mean_energies_cm1": [12000, 12000],
    "couplings_cm1": [[0, 100], [100, 0]],
    "geometry": {"positions_A": [[0,0,0],[5,0,0]], "dipoles": [[0,1,0],[0,0.6,0.8]], "symmetry_axis": [0,0,1]}})";
  write(scratch / "dimer.json", system);

  // simulate, every method
  check_workers_invariant("simulate_md", R"({"command": "simulate", "system": "dimer.json", "dt_fs": 0.5,
    "t_total_fs": 200, "output_dt_fs": 5, "n_traj": 70, "seed": 11, "method": "MD", "initial_site": 1,
    "record_propagator": true, "fluctuation": {"type": "ar1", "sigma_cm1": 80, "tau_fs": 30}})");
  check_workers_invariant("simulate_qjc", R"({"command": "simulate", "system": "dimer.json", "dt_fs": 0.5,
    "t_total_fs": 200, "output_dt_fs": 5, "n_traj": 70, "seed": 11, "method": "QJC", "initial_site": 1,
    "temperature_K": 300, "fluctuation": {"type": "static", "sigma_cm1": [40, 60]},
    "spectral_density": {"type": "drude_lorentz", "lambda_cm1": 35, "cutoff_fs": 50}})");
  check_workers_invariant("simulate_hsr", R"({"command": "simulate", "system": "dimer.json", "dt_fs": 0.5,
    "t_total_fs": 200, "output_dt_fs": 5, "method": "HSR", "initial_site": 1,
    "hsr": {"sigma_cm1": 100, "tau_fs": 5}})");

  const std::string header = first_line(slurp(scratch / "simulate_md_w1" / "trace.csv"));
  expect(header == "t_fs,pop_1,pop_2,re_rho_1_2,im_rho_1_2", "trace header: " + header);
  expect(fs::exists(scratch / "simulate_md_w1" / "propagator.csv"), "propagator recorded");

  // noise: generate, decorrelate, correlate
  check_workers_invariant("noise_ar1", R"({"command": "noise", "mode": "ar1", "n_sites": 2, "sigma_cm1": 100,
    "tau_fs": 20, "mean_cm1": [12000, 12100], "dt_fs": 1, "n_steps": 5000, "seed": 4, "cross_correlation": 0.3})");
  fs::copy_file(scratch / "noise_ar1_w1" / "trajectory.csv", scratch / "traj.csv");
  check_workers_invariant("noise_decorrelate", R"({"command": "noise", "mode": "decorrelate", "trajectory": "traj.csv", "seed": 8})");
  check_workers_invariant("noise_correlation", R"({"command": "noise", "mode": "correlation", "trajectory": "traj.csv",
    "site": 1, "max_lag_fs": 200, "temperature_K": 300})");
  expect(first_line(slurp(scratch / "noise_correlation_w1" / "spectral_density.csv")) == "omega_cm1,J_cm1",
         "spectral density header");

  // spectrum from the recorded propagator
  fs::copy_file(scratch / "simulate_md_w1" / "propagator.csv", scratch / "prop.csv");
  check_workers_invariant("spectrum_all", R"({"command": "spectrum", "system": "dimer.json", "propagator": "prop.csv",
    "kind": ["abs", "ld", "cd"], "window_fs": 30, "omega_cm1": {"min": 11500, "max": 12500, "step": 2}})");
  expect(fs::exists(scratch / "spectrum_all_w1" / "spectrum_cd.csv"), "cd spectrum written");

  // analyze and compare
  fs::copy_file(scratch / "simulate_md_w1" / "trace.csv", scratch / "md.csv");
  fs::copy_file(scratch / "simulate_hsr_w1" / "trace.csv", scratch / "hsr.csv");
  check_workers_invariant("analyze_trace", R"({"command": "analyze", "trace": "md.csv", "threshold": 0.5,
    "dephasing": {"temperatures_K": [77, 150, 300], "rates_cm1": [40, 75, 150]}})");
  expect(slurp(scratch / "analyze_trace_w1" / "analysis.json").find("slope") != std::string::npos, "slope reported");
  check_workers_invariant("compare_traces", R"({"command": "compare", "a": "md.csv", "b": "hsr.csv",
    "observables": [{"population": 1}, {"coherence": [1, 2]}]})");

  // reruns with the same seed are identical, a new seed is not
  const fs::path cfg = scratch / "simulate_md.json";
  run("simulate \"" + cfg.string() + "\" --out \"" + (scratch / "rerun").string() + "\"");
  expect(slurp(scratch / "rerun" / "trace.csv") == slurp(scratch / "simulate_md_w1" / "trace.csv"), "rerun identical");
  run("simulate \"" + cfg.string() + "\" --out \"" + (scratch / "reseed").string() + "\" --seed 12");
  expect(slurp(scratch / "reseed" / "trace.csv") != slurp(scratch / "simulate_md_w1" / "trace.csv"), "seed override takes effect");

  // errors
  write(scratch / "bad_traj.json", R"({"command": "simulate", "system": "dimer.json", "n_traj": 0})");
  Result r = run("simulate \"" + (scratch / "bad_traj.json").string() + "\" --out \"" + (scratch / "bad").string() + "\"");
  expect(r.code == 2, "invalid n_traj exits 2");
  expect(r.err.find("\"field\":\"n_traj\"") != std::string::npos, "error names the field: " + r.err);

  write(scratch / "unknown.json", R"({"command": "simulate", "system": "dimer.json", "n_trajectories": 5})");
  r = run("simulate \"" + (scratch / "unknown.json").string() + "\" --out \"" + (scratch / "bad").string() + "\"");
  expect(r.code == 2 && r.err.find("n_trajectories") != std::string::npos, "unknown key rejected: " + r.err);

  write(scratch / "mismatch.json", R"({"command": "noise"})");
  r = run("simulate \"" + (scratch / "mismatch.json").string() + "\"");
  expect(r.code == 2, "command mismatch exits 2");

  write(scratch / "broken.json", "{not json");
  r = run("simulate \"" + (scratch / "broken.json").string() + "\"");
  expect(r.code == 2, "malformed JSON exits 2");

  r = run("simulate \"" + (scratch / "absent.json").string() + "\"");
  expect(r.code == 1, "unreadable config exits 1");

  r = run("transmogrify x.json");
  expect(r.code == 2, "unknown subcommand exits 2");

  write(scratch / "coarse.json", R"({"command": "simulate", "system": "dimer.json", "dt_fs": 5, "t_total_fs": 50,
    "method": "QJC", "spectral_density": {"type": "drude_lorentz", "lambda_cm1": 3000, "cutoff_fs": 5}})");
  r = run("simulate \"" + (scratch / "coarse.json").string() + "\" --out \"" + (scratch / "bad").string() + "\"");
  expect(r.code == 1 && r.err.find("step_size") != std::string::npos, "step-size error exits 1: " + r.err);

  r = run("--version");
  expect(r.code == 0 && !r.out.empty(), "--version");

  if (failures) {
    std::cerr << failures << " CLI check(s) failed\n";
    return 1;
  }
  std::cout << "cli: all checks passed\n";
  return 0;
}
