// Command line front end: `shrinklab run <config> [--seed N] [--out DIR] [--quiet]`
// and `shrinklab validate <config>`.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "shrinklab/errors.hpp"
#include "shrinklab/experiments.hpp"

namespace {

std::optional<std::string> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace shrinklab;

  CLI::App app{"Shrinking target experiments on toral rotations and time-changed linear flows"};
  app.require_subcommand(1);

  std::string run_path, validate_path, out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("config", run_path, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--out", out_dir, "Override the output directory");
  run->add_flag("--quiet", quiet, "Only report errors");

  auto* validate = app.add_subcommand("validate", "List the problems of a config without running it");
  validate->add_option("config", validate_path, "Experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? exit_ok : exit_config_invalid;
  }

  const std::string& path = run->parsed() ? run_path : validate_path;
  const auto text = slurp(path);
  if (!text) {
    std::cerr << "config: cannot read " << path << '\n';
    return exit_config_invalid;
  }

  if (validate->parsed()) {
    const auto violations = validate_config_text(*text);
    for (const auto& v : violations) std::cout << v << '\n';
    if (violations.empty()) std::cout << "ok\n";
    return violations.empty() ? exit_ok : exit_config_invalid;
  }

  ExperimentConfig config;
  try {
    config = parse_config(*text, seed);
  } catch (const ConfigInvalid& e) {
    std::cerr << e.what() << '\n';
    return exit_config_invalid;
  }
  if (!out_dir.empty()) config.output_dir = out_dir;

  const auto result = run_experiment(config, quiet ? nullptr : &std::cout);
  if (result.exit_code != exit_ok && quiet) std::cerr << result.message << '\n';
  return result.exit_code;
}
