#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "pdn/sim_engine.hpp"

namespace pdn {

/// Reads a YAML scenario file. Unknown keys and malformed values raise
/// ParseError; well-formed but invalid values raise ValidationError. Both
/// carry the dotted document path of the offending field. An unreadable file
/// raises ConfigError naming the file.
Scenario parse_scenario(const std::filesystem::path& file);
Scenario parse_scenario_text(std::string_view text);

/// Canonical YAML for a scenario: fixed key order, every field explicit,
/// shortest round-trip numbers. parse_scenario_text(dump_scenario(s)) == s.
std::string dump_scenario(const Scenario& s);

/// Sets the numeric field named by a dotted key (e.g. "mix.X", "topology.k",
/// "latency.mean"). Throws UnknownKnob when the key is not a numeric field of
/// this scenario, InvalidParam when an integer field gets a fractional value.
void apply_knob(Scenario& s, std::string_view key, double value);

/// Honors SIM_SEED when set. Throws ValidationError for a malformed value.
void apply_env_overrides(Scenario& s);

}  // namespace pdn
