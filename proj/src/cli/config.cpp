#include "pinfield/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pinfield/csv.hpp"
#include "pinfield/scaling.hpp"

namespace pinfield::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long> parse_long(const std::string& s) {
  long v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::optional<bool> parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  return std::nullopt;
}

std::optional<Point> parse_point(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == ';' || ch == ',') {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(trim(cur));
  if (parts.empty() || parts.size() > 4) return std::nullopt;
  Point p{};
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto v = parse_long(parts[i]);
    if (!v) return std::nullopt;
    p[static_cast<int>(i)] = static_cast<int>(*v);
  }
  return p;
}

const std::vector<std::string> kKernelKeys = {"kernel", "dim", "lazify", "beta"};
const std::vector<std::string> kChainKeys = {"sweeps", "burnin", "thin", "chains", "batches",
                                             "sampler", "window_radius"};

std::vector<std::string> join(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out = {"seed", "output_dir"};
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

const std::map<std::string, std::vector<std::string>>& key_table() {
  static const std::map<std::string, std::vector<std::string>> t = {
      {"kernel-info", join({kKernelKeys, {"n"}})},
      {"green-probe", join({kKernelKeys, {"radii", "x", "y", "tolerance"}})},
      {"pins-sample", join({kKernelKeys, kChainKeys, {"box_radius", "epsilon"}})},
      {"fkg-check", join({kKernelKeys, {"sides", "eps_list"}})},
      {"domination-check",
       join({kKernelKeys, {"box_radius", "pin_window", "eps_list", "distance"}})},
      {"variance-scan", join({kKernelKeys, kChainKeys,
                              {"eps_list", "box_c", "min_radius", "box_radius", "eta", "cross_check"}})},
      {"mass-scan",
       join({kKernelKeys, kChainKeys,
             {"mode", "eps_list", "budget", "nmax_policy", "nmax_factor", "fit_window", "mapping",
              "mapping_constant", "curve", "weight_floor"}})},
      {"range-stats", join({kKernelKeys, {"n", "reps", "kappa"}})},
      {"renewal1d", join({{"eps_list", "tol"}})},
      {"box-stability", join({kKernelKeys, kChainKeys, {"epsilon", "radii", "probe"}})},
  };
  return t;
}

// Collects violations; every check is a no-op when the key is absent unless
// it is required.
class Checker {
 public:
  explicit Checker(const ExperimentConfig& c) : c_(c) {}

  void require(const std::string& key) {
    if (!c_.has(key)) add(key + ": required");
  }
  std::optional<double> real(const std::string& key, double lo, bool lo_open, double hi = INFINITY,
                             bool hi_open = true) {
    if (!c_.has(key)) return std::nullopt;
    const auto v = parse_double(c_.values.at(key));
    if (!v) {
      add(key + ": must be a number");
      return std::nullopt;
    }
    if ((lo_open ? *v <= lo : *v < lo) || (hi_open ? *v >= hi : *v > hi)) {
      if (lo == 0.0 && lo_open && std::isinf(hi)) {
        add(key + ": " + (key == "epsilon" ? "epsilon" : std::string("value")) + " must be positive");
        return std::nullopt;
      }
      add(key + ": must lie in " + std::string(lo_open ? "(" : "[") + format_number(lo) + ", " +
          format_number(hi) + (hi_open ? ")" : "]"));
      return std::nullopt;
    }
    return v;
  }
  std::optional<long> whole(const std::string& key, long lo, long hi = 1L << 40) {
    if (!c_.has(key)) return std::nullopt;
    const auto v = parse_long(c_.values.at(key));
    if (!v) {
      add(key + ": must be an integer");
      return std::nullopt;
    }
    if (*v < lo || *v > hi) {
      add(key + ": must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return std::nullopt;
    }
    return v;
  }
  void boolean(const std::string& key) {
    if (c_.has(key) && !parse_bool(c_.values.at(key))) add(key + ": must be true or false");
  }
  void choice(const std::string& key, std::initializer_list<const char*> options) {
    if (!c_.has(key)) return;
    const auto& v = c_.values.at(key);
    for (const char* o : options) {
      if (v == o) return;
    }
    std::string all;
    for (const char* o : options) all += (all.empty() ? "" : ", ") + std::string(o);
    add(key + ": must be one of " + all);
  }
  void point(const std::string& key) {
    if (c_.has(key) && !parse_point(c_.values.at(key)))
      add(key + ": must be a lattice point like 3;0");
  }
  // Epsilon lists: positive always; below 1 and strictly decreasing for scans.
  std::vector<double> eps_list(const std::string& key, bool scan) {
    std::vector<double> out;
    if (!c_.has(key)) return out;
    const auto items = split_list(c_.values.at(key));
    if (items.empty()) add(key + ": must list at least one epsilon");
    for (const auto& s : items) {
      const auto v = parse_double(s);
      if (!v) {
        add(key + ": '" + s + "' is not a number");
        return {};
      }
      out.push_back(*v);
    }
    for (double e : out) {
      if (!(e > 0.0)) {
        add(key + ": epsilon must be positive");
        return {};
      }
      if (scan && !(e < 1.0)) {
        add(key + ": epsilon must be below 1");
        return {};
      }
    }
    if (scan) {
      for (std::size_t i = 1; i < out.size(); ++i) {
        if (!(out[i] < out[i - 1])) {
          add(key + ": epsilon grid must be strictly decreasing");
          return {};
        }
      }
    }
    return out;
  }
  std::vector<long> int_list(const std::string& key, long lo, bool increasing) {
    std::vector<long> out;
    if (!c_.has(key)) return out;
    const auto items = split_list(c_.values.at(key));
    if (items.empty()) add(key + ": must not be empty");
    for (const auto& s : items) {
      const auto v = parse_long(s);
      if (!v || *v < lo) {
        add(key + ": entries must be integers >= " + std::to_string(lo));
        return {};
      }
      out.push_back(*v);
    }
    for (std::size_t i = 1; increasing && i < out.size(); ++i) {
      if (out[i] <= out[i - 1]) {
        add(key + ": entries must be strictly increasing");
        return {};
      }
    }
    return out;
  }
  void add(std::string v) { out_.push_back(std::move(v)); }
  std::vector<std::string> take() { return std::move(out_); }

 private:
  const ExperimentConfig& c_;
  std::vector<std::string> out_;
};

void check_kernel(Checker& ch, const ExperimentConfig& c) {
  if (c.has("kernel") && (c.has("dim") || c.has("lazify") || c.has("beta"))) {
    ch.add("kernel: give either a kernel file or dim/lazify/beta, not both");
  }
  if (c.has("kernel")) {
    if (!std::filesystem::exists(c.values.at("kernel")))
      ch.add("kernel: file " + c.values.at("kernel") + " does not exist");
  } else {
    ch.require("dim");
  }
  ch.whole("dim", 1, 4);
  ch.boolean("lazify");
  ch.real("beta", 0.0, true);
}

void check_chain(Checker& ch, const ExperimentConfig& c) {
  const auto sweeps = ch.whole("sweeps", 1);
  ch.whole("burnin", 0);
  const auto thin = ch.whole("thin", 1);
  const auto chains = ch.whole("chains", 1, 4096);
  ch.whole("window_radius", 0, 1000);
  if (sweeps && *sweeps < (thin ? *thin : 1) * (chains ? *chains : 1))
    ch.add("sweeps: must cover at least one recorded sweep per chain (sweeps >= thin * chains)");
  (void)c;
  ch.whole("batches", 2, 1000);
  ch.choice("sampler", {"auto", "collapsed", "augmented"});
}

}  // namespace

std::string ExperimentConfig::text(const std::string& key, const std::string& fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double ExperimentConfig::number(const std::string& key, double fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  const auto v = parse_double(it->second);
  if (!v) throw std::invalid_argument(key + ": must be a number");
  return *v;
}

long ExperimentConfig::integer(const std::string& key, long fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  const auto v = parse_long(it->second);
  if (!v) throw std::invalid_argument(key + ": must be an integer");
  return *v;
}

bool ExperimentConfig::flag(const std::string& key, bool fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  const auto v = parse_bool(it->second);
  if (!v) throw std::invalid_argument(key + ": must be true or false");
  return *v;
}

std::vector<double> ExperimentConfig::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split_list(text(key, ""))) {
    const auto v = parse_double(s);
    if (!v) throw std::invalid_argument(key + ": '" + s + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

std::vector<long> ExperimentConfig::integers(const std::string& key) const {
  std::vector<long> out;
  for (const auto& s : split_list(text(key, ""))) {
    const auto v = parse_long(s);
    if (!v) throw std::invalid_argument(key + ": '" + s + "' is not an integer");
    out.push_back(*v);
  }
  return out;
}

Point ExperimentConfig::point(const std::string& key, const Point& fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  const auto v = parse_point(it->second);
  if (!v) throw std::invalid_argument(key + ": must be a lattice point");
  return *v;
}

std::uint64_t ExperimentConfig::seed() const {
  const auto it = values.find("seed");
  if (it == values.end()) throw std::invalid_argument("seed: required");
  std::uint64_t v = 0;
  const auto& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("seed: must be a non-negative integer");
  return v;
}

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : key_table()) v.push_back(k);
    return v;
  }();
  return names;
}

const std::vector<std::string>& allowed_keys(const std::string& command) {
  const auto it = key_table().find(command);
  if (it == key_table().end()) throw std::invalid_argument("unknown command " + command);
  return it->second;
}

ExperimentConfig parse_config(std::istream& in, const std::string& command) {
  ExperimentConfig c;
  c.command = command;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    if (!c.values.emplace(key, value).second)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": duplicate key " + key);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::string& command) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  return parse_config(in, command);
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("override must be key=value: " + assignment);
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw std::invalid_argument("override has an empty key: " + assignment);
  cfg.values[key] = trim(assignment.substr(eq + 1));
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  Checker ch(c);
  const auto table = key_table().find(c.command);
  if (table == key_table().end()) {
    ch.add("command: unknown command '" + c.command + "'");
    return ch.take();
  }
  const std::set<std::string> allowed(table->second.begin(), table->second.end());
  for (const auto& [k, _] : c.values) {
    if (!allowed.count(k)) ch.add(k + ": unknown key for " + c.command);
  }
  ch.require("seed");
  if (c.has("seed")) {
    try {
      (void)c.seed();
    } catch (const std::invalid_argument& e) {
      ch.add(e.what());
    }
  }
  const std::string& cmd = c.command;
  if (cmd != "renewal1d") check_kernel(ch, c);
  if (allowed.count("sweeps")) check_chain(ch, c);

  if (cmd == "kernel-info") {
    ch.whole("n", 1, 100000);
  } else if (cmd == "green-probe") {
    ch.require("radii");
    ch.int_list("radii", 0, true);
    ch.point("x");
    ch.point("y");
    ch.real("tolerance", 0.0, true, 1.0);
  } else if (cmd == "pins-sample") {
    ch.require("box_radius");
    ch.require("epsilon");
    ch.whole("box_radius", 0, 200);
    ch.real("epsilon", 0.0, true);
  } else if (cmd == "fkg-check") {
    ch.require("sides");
    ch.require("eps_list");
    for (long s : ch.int_list("sides", 1, false)) {
      if (s > 3) ch.add("sides: boxes above 9 sites are out of reach of the exhaustive check");
    }
    ch.eps_list("eps_list", false);
  } else if (cmd == "domination-check") {
    ch.require("box_radius");
    ch.require("eps_list");
    ch.whole("box_radius", 1, 30);
    ch.whole("pin_window", 0, 2);
    ch.whole("distance", 0, 30);
    ch.eps_list("eps_list", false);
  } else if (cmd == "variance-scan") {
    ch.require("eps_list");
    const auto eps = ch.eps_list("eps_list", true);
    const auto c_box = ch.real("box_c", 0.0, true);
    const auto min_r = ch.whole("min_radius", 1, 1000);
    const auto radius = ch.whole("box_radius", 1, 1000);
    ch.real("eta", 0.0, true);
    ch.boolean("cross_check");
    if (radius) {
      BoxPolicy policy;
      if (c_box) policy.c = *c_box;
      if (min_r) policy.min_radius = static_cast<int>(*min_r);
      for (double e : eps) {
        const int floor = policy.radius_for(e);
        if (*radius < floor) {
          ch.add("box_radius: " + std::to_string(*radius) + " is below the box policy floor " +
                 std::to_string(floor) + " at epsilon " + format_number(e) + " (policy " +
                 policy.describe() + ")");
        }
      }
    }
  } else if (cmd == "mass-scan") {
    ch.require("eps_list");
    ch.eps_list("eps_list", true);
    ch.choice("mode", {"bernoulli-surrogate", "pinning-exact"});
    ch.whole("budget", 1);
    ch.choice("nmax_policy", {"diffusive", "linear"});
    ch.real("nmax_factor", 0.0, true);
    ch.choice("mapping", {"standard", "linear"});
    ch.real("mapping_constant", 0.0, true);
    ch.choice("curve", {"slab", "axis"});
    ch.real("weight_floor", 0.0, false, 1.0);
    if (c.has("fit_window")) {
      const auto parts = split_list(
          [s = c.values.at("fit_window")]() mutable {
            std::replace(s.begin(), s.end(), ':', ' ');
            return s;
          }());
      const auto lo = parts.size() == 2 ? parse_double(parts[0]) : std::nullopt;
      const auto hi = parts.size() == 2 ? parse_double(parts[1]) : std::nullopt;
      if (!lo || !hi || !(*lo > 0.0) || !(*hi > *lo))
        ch.add("fit_window: must be lo:hi with 0 < lo < hi (correlation lengths)");
    }
  } else if (cmd == "range-stats") {
    ch.require("n");
    ch.require("reps");
    ch.whole("n", 3, 100000000);
    ch.whole("reps", 1, 100000000);
    ch.real("kappa", 0.0, true);
  } else if (cmd == "renewal1d") {
    ch.require("eps_list");
    ch.eps_list("eps_list", false);
    ch.real("tol", 0.0, true, 1.0);
  } else if (cmd == "box-stability") {
    ch.require("epsilon");
    ch.require("radii");
    ch.real("epsilon", 0.0, true);
    ch.int_list("radii", 0, true);
    ch.choice("probe", {"origin-unpinned", "variance-origin"});
  }
  return ch.take();
}

}  // namespace pinfield::cli
