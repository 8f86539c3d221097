#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pdn/knowledge.hpp"
#include "pdn/sim_engine.hpp"

namespace pdn {

// ---------------------------------------------------------------------------
// Knowledge views

/// Legitimate view of one entity; EntityId{0} is the global adversary.
/// Throws UnknownEntity for ids outside the run's directory.
const KnowledgeView& view_of(EntityId entity, const RunResult& run);

/// The DPN's own view plus the manifest of every parcel it could open one
/// layer past its legitimate access. Throws UnknownEntity unless `node` is a
/// DPN site of the run.
KnowledgeView sniffing_dpn(const RunResult& run, EntityId node);

// ---------------------------------------------------------------------------
// Movements

/// One physical movement, joined from its departure and arrival records.
struct Movement {
  SurfaceId surface;
  Address src;
  Address dst;
  SizeClass size = SizeClass::S0;
  Time departed = 0.0;
  std::size_t depart_index = 0;
  std::optional<Time> arrived;
  std::optional<std::size_t> arrive_index;
};

class MovementIndex {
 public:
  MovementIndex() = default;
  /// Throws InvariantViolation when a surface appears more than twice or the
  /// log is not time-ordered.
  explicit MovementIndex(const ObservationLog& log);

  const Movement* find(SurfaceId s) const;
  const std::vector<Movement>& movements() const { return moves_; }
  const ObservationLog& log() const { return *log_; }
  /// True for arrival records (the second record of a surface).
  bool is_arrival(std::size_t record) const { return arrival_[record]; }

 private:
  const ObservationLog* log_ = nullptr;
  std::vector<Movement> moves_;
  std::vector<bool> arrival_;
  std::unordered_map<std::uint64_t, std::size_t> by_surface_;
};

// ---------------------------------------------------------------------------
// Correlation attack

struct Candidate {
  SurfaceId inbound;
  double weight = 0.0;
};

struct PackagePosterior {
  SurfaceId outbound;
  Time departed = 0.0;
  std::vector<Candidate> candidates;  // positive weights, sorted by surface
  SurfaceId map_guess;                // highest weight; ties to lowest surface
};

/// One flush of a mix node: consecutive departures at one instant with no
/// arrival in between.
struct EpochPosterior {
  Time time = 0.0;
  std::vector<PackagePosterior> packages;
  bool exact = true;
};

struct Posterior {
  EntityId node;
  std::vector<EpochPosterior> epochs;
  bool exact = true;

  const PackagePosterior* find(SurfaceId outbound) const;
  /// Distribution over outbound surfaces for a parcel that arrived as
  /// `inbound`. Empty when it never left (still held at the horizon).
  std::span<const Candidate> forward(SurfaceId inbound) const;

  /// Rebuilds the lookup tables after `epochs` is filled.
  void index();

 private:
  std::unordered_map<std::uint64_t, std::pair<std::size_t, std::size_t>> by_outbound_;
  std::unordered_map<std::uint64_t, std::vector<Candidate>> forward_;
};

/// Correlates inbound and outbound parcels of one mix node. Feasible pairs:
/// the inbound arrived before the outbound left, and the outbound size equals
/// max(inbound size, node common class). Throws Infeasible when no matching is
/// consistent with the log.
Posterior correlation_attack(const MovementIndex& moves, const MixNodeInfo& node,
                             CorrelationMode mode);
Posterior correlation_attack(const ObservationLog& log, const MixNodeInfo& node,
                             CorrelationMode mode);

/// Destination distribution of one shipped parcel, propagated through every
/// node's posterior.
struct Linkage {
  SurfaceId start;
  std::vector<std::pair<Address, double>> destinations;  // normalized, sorted by address
  double reached = 0.0;  // probability mass that ended at a destination

  std::optional<Address> map_guess() const;
};

/// All mix nodes of one log, attacked together. `log` must outlive this.
///
/// When `route_hops` is known (it is public protocol knowledge), linkage only
/// follows paths through exactly that many distinct mix nodes before a
/// destination; other paths are inconsistent and dropped.
class TrafficAnalysis {
 public:
  TrafficAnalysis(const ObservationLog& log, std::span<const MixNodeInfo> nodes,
                  CorrelationMode mode, std::optional<std::size_t> route_hops = std::nullopt,
                  bool parallel = true);

  const MovementIndex& moves() const { return moves_; }
  const std::vector<Posterior>& posteriors() const { return posteriors_; }
  Linkage link(SurfaceId shipped) const;

 private:
  MovementIndex moves_;
  std::vector<Posterior> posteriors_;
  std::unordered_map<std::uint64_t, std::size_t> node_slot_;
  std::optional<std::size_t> route_hops_;
};

/// Serial reference for the per-node attack loop.
std::vector<Posterior> correlate_nodes_serial(const MovementIndex& moves,
                                              std::span<const MixNodeInfo> nodes,
                                              CorrelationMode mode);
/// OpenMP version; identical output.
std::vector<Posterior> correlate_nodes(const MovementIndex& moves,
                                       std::span<const MixNodeInfo> nodes, CorrelationMode mode);

// ---------------------------------------------------------------------------
// Ground truth (evaluation only; assembled from every entity's own view)

struct GroundTruth {
  std::unordered_map<std::uint64_t, SurfaceId> forwarded;  // inbound -> outbound
  std::unordered_map<std::uint64_t, SurfaceId> came_from;  // outbound -> inbound
  std::map<Pseudonym, Address> home_of;
  std::map<OrderId, Pseudonym> buyer;
  std::map<OrderId, SurfaceId> shipped_as;
  /// Orders whose parcel reached a customer home, and that home.
  std::map<OrderId, Address> delivered_to;
  std::set<Address> delivered_homes;
  std::set<Address> homes;

  /// Follows forwarding from `s` to the last surface of the chain.
  SurfaceId final_surface(SurfaceId s) const;
};

GroundTruth derive_truth(std::span<const KnowledgeView> views, const ObservationLog& log);

// ---------------------------------------------------------------------------
// Intersection attack

struct Round {
  ObservationLog log;
  std::vector<MixNodeInfo> mix_nodes;
  std::optional<std::size_t> route_hops;
  std::vector<SurfaceId> target_shipments;  // every parcel shipped to the target
};

/// Extracts one round for `target` from a run, using the vendor views.
Round round_of(const RunResult& run, Pseudonym target);

struct IntersectionResult {
  std::vector<std::set<EntityId>> per_round;   // candidate customer homes
  std::vector<std::set<EntityId>> cumulative;  // running intersection
  std::optional<std::size_t> rounds_to_unique;  // 1-based; nullopt = never
};

/// Throws InvalidParam for a round in which the target shipped nothing.
IntersectionResult intersection_attack(std::span<const Round> rounds, CorrelationMode mode);
/// Intersection step on precomputed per-round candidate sets.
IntersectionResult intersect_candidates(std::vector<std::set<EntityId>> per_round);

// ---------------------------------------------------------------------------
// Collusion

/// Views named by a collusion set such as "vendor+dpn:5". Tokens are role
/// names, optionally `role:entity`; "sniff" also brings in the DPN's own
/// view. Throws ValidationError for unknown tokens.
std::vector<KnowledgeView> select_views(const RunResult& run, std::string_view set);
std::vector<KnowledgeView> select_views(std::span<const KnowledgeView> all, std::string_view set);

struct CollusionResult {
  KnowledgeView merged;
  /// Fact indices (into merged.facts) of every joined composite.
  std::vector<std::vector<std::size_t>> composites;
  /// Per delivered customer home.
  std::map<Address, bool> link_exposed;

  double exposed_rate() const;
};

/// Union of the views closed under joins on shared order ids, surface ids,
/// pseudonyms and home addresses. A customer is exposed when one composite
/// holds goods it bought (or goods sniffed on their way to it) together with
/// its home address. `truth` supplies the pseudonym of each customer.
CollusionResult collude(std::span<const KnowledgeView> views, const GroundTruth& truth);

}  // namespace pdn
