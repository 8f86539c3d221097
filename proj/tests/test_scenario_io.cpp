#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "pdn/errors.hpp"
#include "pdn/scenario_io.hpp"

using namespace pdn;

namespace {

template <class E>
std::string error_path(std::string_view text) {
  try {
    parse_scenario_text(text);
  } catch (const E& e) {
    return e.path();
  }
  ADD_FAILURE() << "no error for: " << text;
  return {};
}

struct SeedEnv {
  explicit SeedEnv(const char* v) { ::setenv("SIM_SEED", v, 1); }
  ~SeedEnv() { ::unsetenv("SIM_SEED"); }
};

}  // namespace

TEST(ScenarioIo, EmptyDocumentIsDefaults) {
  EXPECT_EQ(parse_scenario_text(""), Scenario{});
  EXPECT_EQ(parse_scenario_text("{}"), Scenario{});
}

TEST(ScenarioIo, ReadsFields) {
  const Scenario s = parse_scenario_text(R"(
topology: {kind: dpdn, k: 3}
counts: {customers: 40, vendors: 3, dpn_sites: 3}
mix: {kind: pool, pool_min: 5, flush_prob: 0.5}
latency: {dist: exponential, mean: 2.5}
common_class: S2
seed: 99
attacks:
  collusion_sets: [vendor+dpn, sniff]
)");
  EXPECT_EQ(s.topology.kind, Topology::Kind::Dpdn);
  EXPECT_EQ(s.topology.hops, 3u);
  EXPECT_EQ(s.counts.customers, 40u);
  EXPECT_EQ(s.counts.vendors, 3u);
  ASSERT_TRUE(std::holds_alternative<PoolMix>(s.mix));
  EXPECT_EQ(std::get<PoolMix>(s.mix).pool_min, 5u);
  EXPECT_EQ(s.latency.kind, Distribution::Kind::Exponential);
  EXPECT_EQ(s.latency.a, 2.5);
  EXPECT_EQ(s.common_class, SizeClass::S2);
  EXPECT_EQ(s.seed, 99u);
  EXPECT_EQ(s.attacks.collusion_sets, (std::vector<std::string>{"vendor+dpn", "sniff"}));
}

TEST(ScenarioIo, ValidationErrorsNameTheField) {
  EXPECT_EQ(error_path<ValidationError>("mix: {kind: threshold, X: 0}"), "mix.X");
  EXPECT_EQ(error_path<ValidationError>("counts: {customers: 0}"), "counts.customers");
  EXPECT_EQ(error_path<ValidationError>("topology: {kind: dpdn, k: 0}"), "topology.k");
  EXPECT_EQ(error_path<ValidationError>("horizon: -1"), "horizon");
  EXPECT_EQ(error_path<ValidationError>("topology: {kind: ring}"), "topology.kind");
  EXPECT_EQ(error_path<ValidationError>("common_class: S9"), "common_class");
  EXPECT_EQ(error_path<DirectoryTooSmall>("topology: {kind: dpdn, k: 3}"), "counts.dpn_sites");
}

TEST(ScenarioIo, ParseErrorsNameTheField) {
  EXPECT_EQ(error_path<ParseError>("mixx: {X: 2}"), "mixx");
  EXPECT_EQ(error_path<ParseError>("mix: {kind: threshold, X: two}"), "mix.X");
  EXPECT_THROW(parse_scenario_text("topology: [unclosed"), ParseError);
}

TEST(ScenarioIo, MissingFileIsConfigError) {
  EXPECT_THROW(parse_scenario("/nonexistent/scenario.yaml"), ConfigError);
}

TEST(ScenarioIo, DumpRoundTrips) {
  Scenario s;
  s.topology = Topology::dpdn(4);
  s.counts.dpn_sites = 4;
  s.mix = PoolMix{3, 0.25};
  s.latency = Distribution::uniform(0.5, 1.75);
  s.cost.per_rewrap = 0.1;
  s.horizon = 12.5;
  s.seed = 123456789012345ull;
  s.attacks.collusion_sets = {"adversary", "pman:4"};
  s.attacks.correlation_mode = CorrelationMode::Candidate;
  EXPECT_EQ(parse_scenario_text(dump_scenario(s)), s);
  EXPECT_EQ(dump_scenario(parse_scenario_text(dump_scenario(s))), dump_scenario(s));
  EXPECT_EQ(parse_scenario_text(dump_scenario(Scenario{})), Scenario{});
}

TEST(ScenarioIo, ReadsFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "pdn_scenario_io_test.yaml";
  std::ofstream(path) << "mix: {kind: threshold, X: 7}\n";
  const Scenario s = parse_scenario(path);
  EXPECT_EQ(std::get<ThresholdMix>(s.mix).x, 7u);
  std::filesystem::remove(path);
}

TEST(Knob, SetsNumericFields) {
  Scenario s;
  apply_knob(s, "mix.X", 8);
  EXPECT_EQ(std::get<ThresholdMix>(s.mix).x, 8u);
  apply_knob(s, "topology.k", 3);
  EXPECT_EQ(s.topology.hops, 3u);
  apply_knob(s, "latency.value", 2.5);
  EXPECT_EQ(s.latency.a, 2.5);
  apply_knob(s, "profile.order_rate", 0.25);
  EXPECT_EQ(s.profile.order_rate, 0.25);
}

TEST(Knob, RejectsUnknownAndFractional) {
  Scenario s;
  EXPECT_THROW(apply_knob(s, "mix.Y", 1), UnknownKnob);
  EXPECT_THROW(apply_knob(s, "topology", 1), UnknownKnob);
  // latency.mean only exists for an exponential distribution
  EXPECT_THROW(apply_knob(s, "latency.mean", 1), UnknownKnob);
  EXPECT_THROW(apply_knob(s, "mix.X", 2.5), InvalidParam);
  EXPECT_THROW(apply_knob(s, "counts.customers", -1), InvalidParam);
}

TEST(Env, SeedOverride) {
  Scenario s;
  {
    SeedEnv env("4242");
    apply_env_overrides(s);
    EXPECT_EQ(s.seed, 4242u);
  }
  apply_env_overrides(s);
  EXPECT_EQ(s.seed, 4242u);
  SeedEnv bad("12x");
  try {
    apply_env_overrides(s);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.path(), "SIM_SEED");
  }
}
