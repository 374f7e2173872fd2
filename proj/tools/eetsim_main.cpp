// eetsim command-line front end.
//
//   eetsim <simulate|noise|spectrum|analyze|compare> CONFIG.json [--out DIR]
//          [--seed N] [--workers N]
//
// Exit status: 0 success, 2 invalid configuration or usage, 1 runtime error.
// Errors are reported on stderr as {"error": {"kind", "field", "message"}}.

#include "eetsim/eetsim.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInvalid = 2;

int report(const std::string& kind, const std::string& field, const std::string& message, int code) {
  json err;
  err["error"] = {{"kind", kind}, {"field", field}, {"message", message}};
  std::cerr << err.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exciton energy-transfer simulator"};
  app.set_version_flag("--version", std::string(eet_version()));

  std::string command;
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> workers;

  app.add_option("command", command, "simulate, noise, spectrum, analyze or compare")
      ->required()
      ->check(CLI::IsMember({"simulate", "noise", "spectrum", "analyze", "compare"}));
  app.add_option("config", config_path, "JSON configuration file")->required();
  app.add_option("-o,--out", out_dir, "output directory (default: $EETSIM_OUTPUT_DIR or ./eetsim-out)");
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--workers", workers, "override the config worker count (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", "", e.what(), kExitInvalid);
  }

  std::ifstream in(config_path, std::ios::binary);
  if (!in) return report("io", "config", "cannot read " + config_path, kExitRuntime);
  std::stringstream text;
  text << in.rdbuf();

  json config;
  try {
    config = json::parse(text.str());
  } catch (const json::parse_error& e) {
    return report("invalid_input", "config", e.what(), kExitInvalid);
  }
  if (!config.is_object()) return report("invalid_input", "config", "config must be a JSON object", kExitInvalid);
  if (config.contains("command") && config["command"] != command)
    return report("invalid_input", "command", "config command does not match the subcommand", kExitInvalid);
  config["command"] = command;
  if (seed) config["seed"] = *seed;
  if (workers) config["workers"] = *workers;

  if (out_dir.empty()) {
    const char* env = std::getenv("EETSIM_OUTPUT_DIR");
    out_dir = env && *env ? env : "eetsim-out";
  }
  const std::string base_dir = std::filesystem::absolute(config_path).parent_path().string();

  char* summary = nullptr;
  const eet_status st = eet_run_command(config.dump().c_str(), base_dir.c_str(), out_dir.c_str(), &summary);
  if (st != EET_OK) {
    const int code = st == EET_ERR_INVALID_INPUT || st == EET_ERR_NULL_ARG ? kExitInvalid : kExitRuntime;
    return report(eet_status_name(st), eet_last_error_field(), eet_last_error(), code);
  }
  std::cout << summary << "\n";
  eet_string_free(summary);
  return kExitOk;
}
