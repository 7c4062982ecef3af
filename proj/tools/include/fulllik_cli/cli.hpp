#pragma once

// The fulllik command-line front end as a library: every command is a pure
// function of (command name, resolved JSON config, output directory), so a
// run can be replayed from the manifest it writes.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace fulllik::cli {

inline constexpr int kManifestSchema = 1;
inline constexpr int kReportSchema = 1;

std::vector<std::string> command_names();

/// Default configuration of a command (every key it accepts).
nlohmann::json default_config(const std::string& command);

/// Fills unspecified keys from the defaults and rejects unknown keys or
/// mistyped values with InvalidArgument.
nlohmann::json resolve_config(const std::string& command, const nlohmann::json& overrides);

/// Runs a command with a resolved config, writing its artifacts and
/// manifest.json into `out_dir` (created if needed). Returns the artifact
/// paths relative to `out_dir`, manifest last.
std::vector<std::string> run_command(const std::string& command, const nlohmann::json& config,
                                     const std::filesystem::path& out_dir);

/// Re-runs the command recorded in a manifest into `out_dir`.
std::vector<std::string> replay(const std::filesystem::path& manifest, const std::filesystem::path& out_dir);

/// Process entry point: 0 on success, 2 on usage errors, 1 on run failures.
int main(int argc, char** argv);

}  // namespace fulllik::cli
