#include <CLI11.hpp>

#include <iostream>

#include "pdn/cmd.hpp"
#include "pdn/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator for private delivery networks"};
  app.set_version_flag("--version", pdn::kToolVersion);
  app.require_subcommand(1);

  std::string scenario, out, knob, values, bundle, spec;
  unsigned parallelism = 1;

  auto* run = app.add_subcommand("run", "Simulate a scenario and write a results bundle");
  run->add_option("scenario", scenario, "Scenario YAML file")->required();
  run->add_option("--out", out, "Output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "Run one scenario per knob value and write frontier.csv");
  sweep->add_option("scenario", scenario, "Scenario YAML file")->required();
  sweep->add_option("--knob", knob, "Dotted numeric field, e.g. mix.X")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--out", out, "Output directory")->required();
  sweep->add_option("--parallelism", parallelism, "Concurrent sweep points")
      ->check(CLI::PositiveNumber);

  auto* attack = app.add_subcommand("attack", "Re-run attacks on a saved bundle");
  attack->add_option("bundle", bundle, "Bundle directory")->required();
  attack->add_option("--spec", spec, "Attack spec YAML")->required();

  auto* report = app.add_subcommand("report", "Print a bundle's results");
  report->add_option("bundle", bundle, "Bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? pdn::kExitOk : pdn::kExitConfig;
  }

  if (*run) return pdn::cmd_run(scenario, out, std::cerr);
  if (*sweep) {
    std::vector<double> parsed;
    try {
      parsed = pdn::parse_values(values);
    } catch (const pdn::ConfigError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return pdn::kExitConfig;
    }
    return pdn::cmd_sweep(scenario, knob, parsed, out, parallelism, std::cerr);
  }
  if (*attack) return pdn::cmd_attack(bundle, spec, std::cerr);
  return pdn::cmd_report(bundle, std::cout, std::cerr);
}
