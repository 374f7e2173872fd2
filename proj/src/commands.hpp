#pragma once

// Batch commands driven by one JSON config document with a "command"
// discriminator. Shared by the C API and, through it, the CLI.

#include <json.hpp>

#include <filesystem>

namespace eetsim::commands {

/// Runs the command described by `config`. Relative input paths resolve
/// against `base_dir`; every artifact and manifest.json go to `out_dir`,
/// which is created if needed. Returns a JSON summary of the run.
nlohmann::json run(const nlohmann::json& config, const std::filesystem::path& base_dir,
                   const std::filesystem::path& out_dir);

}  // namespace eetsim::commands
