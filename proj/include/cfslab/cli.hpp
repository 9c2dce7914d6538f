#pragma once

// Subcommand drivers behind the `cfslab` executable. Each reads one JSON
// config, writes CSV/JSON results into the output directory, and finishes with
// manifest.json. Result files start with a header naming the command, the
// FNV-1a hash of the config bytes, the seed and the tool version.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cfslab::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutEnv = "CFSLAB_OUT";

enum ExitCode : int { ok = 0, failure = 1, config_error = 2, numerical_error = 3 };

struct RunOptions {
    std::string command;
    std::filesystem::path config_path;
    std::optional<std::filesystem::path> out_dir;  // falls back to $CFSLAB_OUT, then ./cfslab-out
    std::optional<std::uint64_t> seed;
    int threads = 0;  // 0 leaves the OpenMP default
    std::optional<double> tol;
};

const std::vector<std::string>& commands();

std::uint64_t fnv1a(const std::string& bytes);
std::filesystem::path resolve_out_dir(const RunOptions& opts);

// Runs one subcommand; diagnostics go to `err`. Never throws.
int run(const RunOptions& opts, std::ostream& err);

}  // namespace cfslab::cli
