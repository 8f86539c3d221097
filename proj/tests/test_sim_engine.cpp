#include <gtest/gtest.h>

#include <map>
#include <set>

#include "pdn/errors.hpp"
#include "pdn/sim_engine.hpp"

using namespace pdn;

namespace {

Scenario base(Topology t, std::size_t customers = 10) {
  Scenario s;
  s.topology = t;
  s.counts.customers = customers;
  s.counts.vendors = 2;
  s.counts.dpn_sites = std::max<std::size_t>(t.hops, 1);
  s.horizon = 30;
  return s;
}

// Orders and requests stop at `cutoff` but the run continues to the
// scenario horizon, so every parcel can finish its route.
RunResult run_to_completion(Scenario s, Time cutoff) {
  Scenario gen = s;
  gen.horizon = cutoff;
  const Directory dir = Directory::build(s.counts);
  return simulate(s, generate_workload(gen, dir));
}

}  // namespace

TEST(EventQueue, EqualTimesDequeueInInsertionOrder) {
  EventQueue q;
  q.schedule(1.0, EventKind::MixTimer, 7);
  q.schedule(1.0, EventKind::OrderPlaced, 8);
  q.schedule(0.5, EventKind::PmanCycle, 9);
  q.schedule(1.0, EventKind::RunEnd, 10);
  std::vector<std::size_t> order;
  while (!q.empty()) order.push_back(q.pop().payload);
  EXPECT_EQ(order, (std::vector<std::size_t>{9, 7, 8, 10}));
}

TEST(EventQueue, SeqUniqueAndClockAdvances) {
  EventQueue q;
  std::set<std::uint64_t> seqs;
  for (int i = 0; i < 50; ++i) seqs.insert(q.schedule(i % 5, EventKind::MixTimer).seq);
  EXPECT_EQ(seqs.size(), 50u);
  Time last = 0;
  while (!q.empty()) {
    const Event e = q.pop();
    EXPECT_GE(e.time, last);
    last = e.time;
    EXPECT_EQ(q.clock(), e.time);
  }
}

TEST(EventQueue, SchedulingInThePastIsTimeTravel) {
  EventQueue q;
  q.schedule(5.0, EventKind::MixTimer);
  (void)q.pop();
  EXPECT_THROW(q.schedule(4.0, EventKind::MixTimer), TimeTravel);
  EXPECT_NO_THROW(q.schedule(5.0, EventKind::MixTimer));
}

TEST(EventQueue, PendingLeavesQueueIntact) {
  EventQueue q;
  q.schedule(2.0, EventKind::MixTimer, 1);
  q.schedule(1.0, EventKind::MixTimer, 2);
  const auto p = q.pending();
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].payload, 2u);
  EXPECT_EQ(q.size(), 2u);
}

TEST(Accrue, Counting) {
  const CostModel cost{1.5, 0.25};
  DeliveryRecord direct;
  accrue(direct, cost, {AccrualKind::Hop, 1.0});
  EXPECT_EQ(direct.cost, 1.5);

  DeliveryRecord dpn;
  accrue(dpn, cost, {AccrualKind::Hop, 1.0});
  accrue(dpn, cost, {AccrualKind::Rewrap, 0});
  accrue(dpn, cost, {AccrualKind::Dwell, 2.0});
  accrue(dpn, cost, {AccrualKind::Hop, 1.0});
  EXPECT_EQ(dpn.cost, 2 * 1.5 + 0.25);
  EXPECT_EQ(dpn.latency_accrued, 4.0);
  EXPECT_EQ(dpn.hops, 2u);
  EXPECT_EQ(dpn.rewraps, 1u);
}

TEST(Run, EmptyWorkloadEndsAtHorizon) {
  Scenario s = base(Topology::dpn());
  const RunResult r = simulate(s, {});
  EXPECT_TRUE(r.deliveries.empty());
  EXPECT_TRUE(r.observations.empty());
  EXPECT_FALSE(r.truncated);
}

TEST(Run, ConventionalSingleOrderArithmetic) {
  Scenario s = base(Topology::conventional(), 1);
  s.latency = Distribution::constant(0.5);
  s.cost = {2.0, 9.0};
  Order o;
  o.id = OrderId{0};
  o.customer = CustomerId{0};
  o.vendor = EntityId{1};
  o.self_items = {ItemId{1}};
  o.placed_at = 3.0;
  const RunResult r = simulate(s, {{o}, {}});
  ASSERT_EQ(r.deliveries.size(), 1u);
  const auto& d = r.deliveries[0];
  ASSERT_TRUE(d.delivered_at);
  EXPECT_DOUBLE_EQ(*d.delivered_at, 3.5);
  EXPECT_EQ(d.hops, 1u);
  EXPECT_EQ(d.rewraps, 0u);
  EXPECT_DOUBLE_EQ(d.cost, 2.0);
  EXPECT_EQ(r.observations.size(), 2u);  // departure and arrival records
}

TEST(Run, SameScenarioSameBytes) {
  for (auto t : {Topology::conventional(), Topology::dpn(), Topology::dpn_pman(), Topology::dpdn(3)}) {
    Scenario s = base(t);
    s.counts.dpn_sites = 4;
    s.profile.noise_budget = 2;
    s.counts.secondary_recipients = 3;
    EXPECT_EQ(serialize(run_scenario(s)), serialize(run_scenario(s)));
  }
}

TEST(Run, SeedChangesTheRun) {
  Scenario s = base(Topology::dpn());
  Scenario t = s;
  t.seed = 2;
  EXPECT_NE(serialize(run_scenario(s)), serialize(run_scenario(t)));
}

TEST(Run, RouteShapeHopsAndCost) {
  for (unsigned k = 1; k <= 5; ++k) {
    Scenario s = base(Topology::dpdn(k));
    s.counts.dpn_sites = 5;
    s.mix = ThresholdMix{1};
    s.cost = {1.0, 0.5};
    const RunResult r = run_to_completion(s, 20);
    ASSERT_FALSE(r.deliveries.empty());
    for (const auto& d : r.deliveries) {
      ASSERT_TRUE(d.delivered_at);
      EXPECT_EQ(d.hops, k + 1);
      EXPECT_EQ(d.rewraps, k);
      EXPECT_DOUBLE_EQ(d.cost, (k + 1) * 1.0 + k * 0.5);
      EXPECT_GE(*d.delivered_at, d.placed_at);
    }
  }
  Scenario s = base(Topology::dpn());
  s.mix = ThresholdMix{1};
  for (const auto& d : run_to_completion(s, 20).deliveries) {
    EXPECT_EQ(d.hops, 2u);
    EXPECT_DOUBLE_EQ(d.cost, 2 * 1.0 + 0.5);
  }
}

TEST(Run, OnionUnwrapTraceEqualsPlannedRoute) {
  for (unsigned k : {2u, 3u, 4u}) {
    Scenario s = base(Topology::dpdn(k));
    s.counts.dpn_sites = 5;
    s.mix = ThresholdMix{2};
    const RunResult r = run_scenario(s);
    std::size_t checked = 0;
    for (const auto& d : r.deliveries) {
      if (!d.delivered_at) continue;
      std::vector<EntityId> planned;
      for (std::size_t i = 1; i < d.route.hops.size(); ++i) planned.push_back(d.route.hops[i].entity);
      EXPECT_EQ(d.unwrap_trace, planned);
      ++checked;
    }
    EXPECT_GT(checked, 0u);
  }
}

TEST(Run, NoLostOrDuplicatedParcels) {
  for (auto t : {Topology::dpn(), Topology::dpn_pman(), Topology::dpdn(2)}) {
    Scenario s = base(t);
    s.counts.dpn_sites = 3;
    s.profile.noise_budget = 2;
    s.counts.secondary_recipients = 2;
    const RunResult r = run_scenario(s);
    std::map<std::uint64_t, int> records;
    for (const auto& e : r.observations) ++records[e.surface.value];
    std::size_t unfinished = 0;
    for (const auto& [surface, n] : records) {
      EXPECT_LE(n, 2);
      unfinished += n == 1;
    }
    EXPECT_EQ(unfinished, r.in_flight_packages);
    EXPECT_TRUE(r.clock_monotone);
    for (std::size_t i = 1; i < r.observations.size(); ++i) {
      EXPECT_LE(r.observations[i - 1].time, r.observations[i].time);
    }
  }
}

TEST(Run, RewrapAlwaysAtMixNodes) {
  Scenario s = base(Topology::dpdn(3));
  s.counts.dpn_sites = 4;
  const RunResult r = run_scenario(s);
  std::map<std::uint64_t, std::set<std::uint64_t>> arrived_at, departed_from;
  std::set<std::uint64_t> seen;
  for (const auto& e : r.observations) {
    const bool first = seen.insert(e.surface.value).second;
    if (first && e.src.kind == AddressKind::DpnSite) departed_from[e.src.entity.value].insert(e.surface.value);
    if (!first && e.dst.kind == AddressKind::DpnSite) arrived_at[e.dst.entity.value].insert(e.surface.value);
  }
  for (const auto& [node, out] : departed_from) {
    for (auto s_out : out) EXPECT_FALSE(arrived_at[node].count(s_out));
  }
}

TEST(Run, ThresholdNodesHoldFewerThanX) {
  Scenario s = base(Topology::dpn());
  s.mix = ThresholdMix{4};
  const RunResult r = run_scenario(s);
  EXPECT_LT(r.held_packages, 4u * s.counts.dpn_sites);
  if (r.held_packages > 0) {
    EXPECT_TRUE(r.truncated);
  }
}

TEST(Run, GoodsConservedEveryTopology) {
  for (auto t : {Topology::conventional(), Topology::dpn(), Topology::dpn_pman(), Topology::dpdn(2)}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Scenario s = base(t);
      s.seed = seed;
      s.counts.dpn_sites = 3;
      s.profile.noise_budget = 3;
      s.counts.secondary_recipients = 4;
      s.request_rate = 0.5;
      const RunResult r = run_scenario(s);
      EXPECT_TRUE(r.goods.conserved()) << to_string(t.kind) << " seed " << seed;
      EXPECT_EQ(r.goods.donations_received, r.goods.dispatched + r.goods.pman_residual);
      EXPECT_LE(r.goods.redistributed, r.goods.dispatched);
      EXPECT_LE(r.goods.donations_received, r.goods.donated);
    }
  }
}

TEST(Run, RedistributionConservationAtCompletion) {
  Scenario s = base(Topology::dpn_pman(), 20);
  s.mix = ThresholdMix{1};
  s.profile.noise_budget = 3;
  s.counts.secondary_recipients = 5;
  s.request_rate = 1.0;
  s.horizon = 1000;
  const RunResult r = run_to_completion(s, 30);
  EXPECT_EQ(r.in_flight_packages, 0u);
  EXPECT_GT(r.goods.donated, 0u);
  EXPECT_GT(r.goods.redistributed, 0u);
  EXPECT_EQ(r.goods.donated, r.goods.redistributed + r.goods.pman_residual);
}

TEST(Run, NoNoiseOutsidePmanTopology) {
  Scenario s = base(Topology::dpn());
  s.profile.noise_budget = 5;
  for (const auto& o : run_scenario(s).orders) EXPECT_TRUE(o.noise_items.empty());
}

TEST(Run, InvalidScenarioIsConfigError) {
  Scenario s = base(Topology::dpn());
  s.horizon = 0;
  EXPECT_THROW(run_scenario(s), ValidationError);
  s = base(Topology::dpdn(3));
  s.counts.dpn_sites = 2;
  EXPECT_THROW(run_scenario(s), DirectoryTooSmall);
  s = base(Topology::dpn());
  s.mix = ThresholdMix{0};
  try {
    run_scenario(s);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "mix.X");
  }
}

TEST(Run, ChangingOneKnobLeavesWorkloadUntouched) {
  Scenario s = base(Topology::dpn());
  Scenario t = s;
  t.mix = ThresholdMix{2};
  t.latency = Distribution::exponential(3);
  EXPECT_EQ(run_scenario(s).orders, run_scenario(t).orders);
}
