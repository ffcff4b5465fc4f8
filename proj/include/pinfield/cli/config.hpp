#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "pinfield/lattice.hpp"

namespace pinfield::cli {

/// Flat `key = value` experiment description for one command.
struct ExperimentConfig {
  std::string command;
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  long integer(const std::string& key, long fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<long> integers(const std::string& key) const;
  Point point(const std::string& key, const Point& fallback) const;
  std::uint64_t seed() const;
};

const std::vector<std::string>& commands();
/// Keys accepted by `command`; anything else is a violation.
const std::vector<std::string>& allowed_keys(const std::string& command);

/// `#` starts a comment; blank lines are skipped; a key may appear once.
ExperimentConfig parse_config(std::istream& in, const std::string& command);
ExperimentConfig load_config(const std::filesystem::path& path, const std::string& command);
/// Applies `key=value` overrides on top of a parsed config.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

/// Empty iff the run would start. Each entry names the key and the constraint.
std::vector<std::string> validate(const ExperimentConfig& cfg);

}  // namespace pinfield::cli
