#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "pdn/core_model.hpp"
#include "pdn/knowledge.hpp"
#include "pdn/protocols.hpp"
#include "pdn/rng.hpp"
#include "pdn/workload.hpp"

namespace pdn {

enum class EventKind { OrderPlaced, PackageDeparted, PackageArrived, MixTimer, PmanCycle, RunEnd };

struct Event {
  Time time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::RunEnd;
  std::size_t payload = 0;  // index into the engine's side table for `kind`
};

/// Min-queue on (time, seq). Equal times dequeue in insertion order.
class EventQueue {
 public:
  /// Throws TimeTravel when `time` precedes the clock.
  Event schedule(Time time, EventKind kind, std::size_t payload = 0);
  Event pop();
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  Time clock() const { return clock_; }
  /// Remaining events in dequeue order; leaves the queue untouched.
  std::vector<Event> pending() const;

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time > b.time || (a.time == b.time && a.seq > b.seq);
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_seq_ = 0;
  Time clock_ = 0.0;
};

enum class CorrelationMode { Exact, Candidate };

struct ReidentConfig {
  std::size_t p = 2;
  std::size_t trials = 1000;
  double time_bin = 10.0;  // width of the time bins in purchase traces

  friend bool operator==(const ReidentConfig&, const ReidentConfig&) = default;
};

struct AttackConfig {
  CorrelationMode correlation_mode = CorrelationMode::Exact;
  std::vector<std::string> collusion_sets;
  ReidentConfig reident;

  friend bool operator==(const AttackConfig&, const AttackConfig&) = default;
};

struct CostModel {
  double per_hop = 1.0;
  double per_rewrap = 0.5;

  friend bool operator==(const CostModel&, const CostModel&) = default;
};

struct Scenario {
  Topology topology = Topology::dpn();
  Counts counts;
  std::size_t catalog_n = 50;
  double catalog_zipf_s = 1.0;
  ProfileParams profile;
  std::size_t items_per_order = 1;
  NoiseDraw noise_draw = NoiseDraw::Uniform;
  double request_rate = 0.1;
  std::size_t items_per_request = 1;
  MixPolicy mix = ThresholdMix{4};
  SizeClass common_class = SizeClass::S1;
  Distribution latency = Distribution::constant(1.0);
  CostModel cost;
  DonationRouting donation_routing = DonationRouting::ViaDpn;
  Time horizon = 100.0;
  std::uint64_t seed = 1;
  AttackConfig attacks;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Throws ConfigError naming the first offending field.
void validate(const Scenario& s);

struct Workload {
  std::vector<Order> orders;
  std::vector<SecondaryRequest> requests;
};

Workload generate_workload(const Scenario& s, const Directory& dir);

struct DeliveryRecord {
  OrderId order;
  CustomerId customer;
  Time placed_at = 0.0;
  std::optional<Time> delivered_at;
  unsigned hops = 0;
  unsigned rewraps = 0;
  double cost = 0.0;
  double latency_accrued = 0.0;
  RouteSpec route;
  std::vector<EntityId> unwrap_trace;  // entities that opened a layer, in order
  SurfaceId shipped_as;                // surface leaving the vendor

  std::optional<double> latency() const {
    if (!delivered_at) return std::nullopt;
    return *delivered_at - placed_at;
  }
};

enum class AccrualKind { Hop, Rewrap, Dwell };

struct Accrual {
  AccrualKind kind = AccrualKind::Hop;
  double delay = 0.0;  // hop transit time or mix dwell
};

void accrue(DeliveryRecord& record, const CostModel& cost, const Accrual& step);

/// Item counts by location at the end of a run.
struct GoodsLedger {
  std::uint64_t shipped = 0;
  std::uint64_t at_customers = 0;
  std::uint64_t at_recipients = 0;
  std::uint64_t pman_residual = 0;
  std::uint64_t in_flight = 0;
  std::uint64_t donated = 0;           // left customer homes as donations
  std::uint64_t donations_received = 0;  // reached a PMAN
  std::uint64_t dispatched = 0;        // sent from a PMAN to recipients
  std::uint64_t redistributed = 0;     // reached secondary recipients

  bool conserved() const {
    return shipped == at_customers + at_recipients + pman_residual + in_flight;
  }
};

struct MixNodeInfo {
  EntityId node;
  SizeClass common_class = SizeClass::S0;
};

struct RunResult {
  Scenario scenario;
  Directory directory;
  std::vector<Pseudonym> pseudonyms;  // indexed by customer
  std::vector<Order> orders;
  std::vector<SecondaryRequest> requests;
  std::vector<DeliveryRecord> deliveries;  // indexed by order id
  ObservationLog observations;
  std::vector<KnowledgeView> views;    // one per entity (id order), then the adversary
  std::vector<KnowledgeView> sniffed;  // per DPN site: what opening parcels would add
  std::vector<MixNodeInfo> mix_nodes;
  GoodsLedger goods;
  double overhead_cost = 0.0;  // donation and redistribution traffic
  bool truncated = false;
  std::size_t in_flight_packages = 0;
  std::size_t held_packages = 0;
  std::uint64_t surfaces_minted = 0;
  std::size_t events_processed = 0;
  bool clock_monotone = true;
};

/// Generates the workload from the scenario and simulates it.
RunResult run_scenario(const Scenario& s);

/// Simulates a caller-supplied workload. Order ids must equal their index.
RunResult simulate(const Scenario& s, Workload workload);

/// Canonical text of a run (log, views, delivery records); equal runs give
/// equal bytes.
std::string serialize(const RunResult& run);

}  // namespace pdn
