#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "advattrib/config.hpp"

namespace advattrib {

/// Everything needed to re-run a command and what it produced.
struct RunManifest {
    std::string command;
    nlohmann::ordered_json arguments;
    nlohmann::ordered_json configSnapshot;
    nlohmann::ordered_json seeds;
    std::vector<std::string> artifactPaths;
};

nlohmann::ordered_json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

/// Master seed precedence: explicit flag, then ADVATTRIB_SEED, then the
/// config file, then the built-in default.
AppConfig load_config(const std::optional<std::filesystem::path>& configPath,
                      std::optional<std::uint64_t> seedFlag);

/// Reads ADVATTRIB_SEED; throws ConfigError when it is set but not a number.
std::optional<std::uint64_t> seed_from_environment();

struct CommandIo {
    std::ostream* out;
    std::ostream* err;
};

/// Runs one command. `arguments` holds the command's options as JSON (paths
/// as strings); the same object is recorded in the manifest so `replay` can
/// repeat the call. Returns the process exit status.
int run_command(const std::string& command, const AppConfig& config,
                const nlohmann::ordered_json& arguments, const CommandIo& io);

/// Re-runs a manifest. `outOverride` redirects the primary output (file or
/// directory, as the command defines it) so results can be compared.
int replay_manifest(const std::filesystem::path& manifestPath,
                    const std::optional<std::string>& outOverride, const CommandIo& io);

/// Reads a tests file and classifies each listed document with a defended
/// session, returning "<name> -> <id>" lines.
std::string classify_listing(const std::filesystem::path& testsFile, const MaskBank& bank,
                             const NormalcyBaseline& baseline, const DefensePolicy& policy,
                             std::uint64_t sessionSeed, bool utf8Arrow);

}  // namespace advattrib
