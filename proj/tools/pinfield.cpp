// Command-line front end: pinfield <command> <config> [--jobs N] [--set key=value]...
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pinfield/cli/config.hpp"
#include "pinfield/cli/runner.hpp"

int main(int argc, char** argv) {
  namespace pc = pinfield::cli;
  CLI::App app{"Pinned lattice free field experiments"};
  app.set_version_flag("--version", std::string(pc::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  int jobs = 1;
  std::string output_dir;
  std::vector<std::string> overrides;
  bool validate_only = false;

  for (const auto& name : pc::commands()) {
    auto* sub = app.add_subcommand(name, "run " + name);
    sub->add_option("config", config_path, "flat key = value config file")->required();
    sub->add_option("--jobs,-j", jobs, "worker threads; never changes output bytes")
        ->check(CLI::PositiveNumber);
    sub->add_option("--output-dir,-o", output_dir, "overrides PINFIELD_OUTPUT_DIR and output_dir");
    sub->add_option("--set", overrides, "key=value applied on top of the config");
    sub->add_flag("--validate", validate_only, "report config violations and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  pc::ExperimentConfig cfg;
  try {
    cfg = pc::load_config(config_path, command);
    for (const auto& o : overrides) pc::apply_override(cfg, o);
  } catch (const std::exception& e) {
    std::cerr << "config: " << e.what() << "\n";
    return 2;
  }
  if (validate_only) {
    const auto v = pc::validate(cfg);
    for (const auto& s : v) std::cout << s << "\n";
    return v.empty() ? 0 : 2;
  }
  pc::RunOptions opts;
  opts.jobs = jobs;
  opts.output_dir = output_dir;
  return pc::run(cfg, opts, std::cout, std::cerr);
}
