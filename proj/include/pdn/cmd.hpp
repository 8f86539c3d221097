#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdn/metrics.hpp"

namespace pdn {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitInternal = 2 };

/// Writes results.csv, observations.log, views.log and manifest.txt.
void write_bundle(const std::filesystem::path& dir, const RunResult& run, const Summary& summary);

/// Scenario recorded in a bundle's manifest.txt.
Scenario read_bundle_scenario(const std::filesystem::path& dir);

int cmd_run(const std::filesystem::path& scenario, const std::filesystem::path& out,
            std::ostream& err);

/// One sub-bundle per value under `out`, then frontier.csv. Points run on up
/// to `parallelism` threads; output does not depend on it.
int cmd_sweep(const std::filesystem::path& scenario, const std::string& knob,
              const std::vector<double>& values, const std::filesystem::path& out,
              unsigned parallelism, std::ostream& err);

/// Re-runs attacks on a saved bundle. The spec file is YAML with optional
/// keys name, seed, correlation_mode, collusion_sets and reident {p, trials,
/// time_bin}. Writes attack-<name>-{correlation,collusion,reident}.csv
/// and never changes an existing file.
int cmd_attack(const std::filesystem::path& bundle, const std::filesystem::path& spec,
               std::ostream& err);

/// Prints a bundle's results (and frontier, if any) as an aligned table.
int cmd_report(const std::filesystem::path& bundle, std::ostream& out, std::ostream& err);

/// Parses "1,2,4" into numbers. Throws InvalidParam on malformed entries.
std::vector<double> parse_values(const std::string& csv);

}  // namespace pdn
