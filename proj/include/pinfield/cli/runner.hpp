#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pinfield/cli/config.hpp"

namespace pinfield::cli {

inline constexpr const char* kVersion = "0.1.0";

struct Artifact {
  std::string name;
  std::string content;
};

/// Runs the command and returns its files. Output bytes depend only on the
/// config, never on `jobs`.
std::vector<Artifact> execute(const ExperimentConfig& cfg, int jobs, std::ostream& log);

struct RunOptions {
  int jobs = 1;
  /// Empty: PINFIELD_OUTPUT_DIR, then the `output_dir` key, then "out".
  std::filesystem::path output_dir;
};

std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg, const RunOptions& opts);

/// Validates, writes the manifest, executes, writes artifacts atomically and
/// finalizes the manifest. Returns 0, 2 (config), 3 (numerical) or 4 (resource).
int run(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out, std::ostream& err);

std::string sha256_hex(const std::string& bytes);

}  // namespace pinfield::cli
