#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "pinfield/cli/config.hpp"
#include "pinfield/cli/runner.hpp"

using namespace pinfield::cli;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text, const std::string& cmd) {
  std::istringstream in(text);
  return parse_config(in, cmd);
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("pinfield_cli_test_" + name);
  fs::remove_all(d);
  return d;
}

int quiet_run(const ExperimentConfig& c, RunOptions o) {
  std::ostringstream out, err;
  return run(c, o, out, err);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("parsing") {
    const auto c = parse("# comment\nseed = 4\neps_list = 0.1, 0.01  # trailing\n\n", "renewal1d");
    CHECK(c.seed() == 4);
    CHECK(c.numbers("eps_list") == std::vector<double>{0.1, 0.01});
    CHECK_THROWS_AS(parse("seed = 1\nseed = 2\n", "renewal1d"), std::invalid_argument);
    auto d = c;
    apply_override(d, "seed=9");
    CHECK(d.seed() == 9);
    CHECK_THROWS(apply_override(d, "novalue"));
    CHECK(commands().size() == 10);
  }

  TEST_CASE("validation messages") {
    CHECK(validate(parse("seed = 1\neps_list = 0.1, 0.01\n", "renewal1d")).empty());
    CHECK(mentions(validate(parse("eps_list = 0.1\n", "renewal1d")), "seed"));
    CHECK(mentions(validate(parse("seed = 1\neps_list = 0\n", "renewal1d")), "epsilon must be positive"));
    CHECK(mentions(validate(parse("seed = 1\nepsilon = 0\nbox_radius = 1\n", "pins-sample")),
                   "epsilon must be positive"));
    CHECK(mentions(validate(parse("seed = 1\neps_list = 0.1\ncolour = red\n", "renewal1d")),
                   "colour: unknown key"));
    const auto v = validate(parse("seed = 1\ndim = 2\nlazify = true\neps_list = 0.3, 0.1, 0.03\nbox_radius = 10\n",
                                  "variance-scan"));
    CHECK(mentions(v, "box_radius"));
    CHECK(mentions(v, "policy"));
    CHECK(validate(parse("seed = 1\ndim = 2\nlazify = true\neps_list = 0.3, 0.1, 0.03\n", "variance-scan")).empty());
  }

  TEST_CASE("missing seed exits with status 2") {
    const auto dir = scratch("noseed");
    RunOptions o;
    o.output_dir = dir;
    CHECK(quiet_run(parse("eps_list = 0.1\n", "renewal1d"), o) == 2);
    CHECK_FALSE(fs::exists(dir / "renewal.csv"));
  }

  TEST_CASE("renewal run writes the documented columns") {
    const auto dir = scratch("renewal");
    RunOptions o;
    o.output_dir = dir;
    REQUIRE(quiet_run(parse("seed = 1\neps_list = 0.1, 0.01\n", "renewal1d"), o) == 0);
    const auto csv = slurp(dir / "renewal.csv");
    CHECK(csv.rfind("epsilon,lambda,lambda_over_eps2_half,M,M_times_eps3,variance,variance_times_2eps2\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    const auto manifest = slurp(dir / "manifest.txt");
    CHECK(manifest.find("status: ok") != std::string::npos);
    CHECK(manifest.find("file: renewal.csv sha256 " + sha256_hex(csv)) != std::string::npos);
    CHECK_FALSE(fs::exists(dir / ".renewal.csv.tmp"));
  }

  TEST_CASE("reruns and job counts give identical bytes") {
    const std::string text =
        "seed = 11\ndim = 2\nlazify = true\nbox_radius = 1\nepsilon = 0.5\nsweeps = 400\nchains = 2\n";
    std::vector<std::string> outputs;
    for (int jobs : {1, 1, 4}) {
      const auto dir = scratch("pins" + std::to_string(outputs.size()));
      RunOptions o;
      o.output_dir = dir;
      o.jobs = jobs;
      REQUIRE(quiet_run(parse(text, "pins-sample"), o) == 0);
      outputs.push_back(slurp(dir / "pins.csv") + slurp(dir / "states.csv") + slurp(dir / "summary.csv"));
    }
    CHECK(outputs[0] == outputs[1]);
    CHECK(outputs[0] == outputs[2]);
  }

  TEST_CASE("every emitted file is listed with its checksum") {
    const auto dir = scratch("kernel");
    RunOptions o;
    o.output_dir = dir;
    REQUIRE(quiet_run(parse("seed = 1\ndim = 2\nn = 4\n", "kernel-info"), o) == 0);
    const auto manifest = slurp(dir / "manifest.txt");
    std::size_t listed = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
      const auto name = e.path().filename().string();
      if (name == "manifest.txt") continue;
      ++listed;
      CHECK(manifest.find("file: " + name + " sha256 " + sha256_hex(slurp(e.path()))) != std::string::npos);
    }
    CHECK(listed == 2);
  }

  TEST_CASE("output directory precedence") {
    const auto c = parse("seed = 1\noutput_dir = from_config\n", "renewal1d");
    RunOptions o;
    ::unsetenv("PINFIELD_OUTPUT_DIR");
    CHECK(resolve_output_dir(c, o) == fs::path("from_config"));
    o.output_dir = "explicit";
    CHECK(resolve_output_dir(c, o) == fs::path("explicit"));
    ::setenv("PINFIELD_OUTPUT_DIR", "from_env", 1);
    CHECK(resolve_output_dir(c, RunOptions{}) == fs::path("from_env"));
    ::unsetenv("PINFIELD_OUTPUT_DIR");
  }

  TEST_CASE("sha256 of a known string") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }
}
