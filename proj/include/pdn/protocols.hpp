#pragma once

#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pdn/core_model.hpp"
#include "pdn/rng.hpp"
#include "pdn/workload.hpp"

namespace pdn {

struct Topology {
  enum class Kind { Conventional, Dpn, DpnPman, Dpdn };

  Kind kind = Kind::Dpn;
  unsigned hops = 1;  // DPDN chain length; 1 for the single-DPN kinds

  static Topology conventional() { return {Kind::Conventional, 0}; }
  static Topology dpn() { return {Kind::Dpn, 1}; }
  static Topology dpn_pman() { return {Kind::DpnPman, 1}; }
  static Topology dpdn(unsigned k) { return {Kind::Dpdn, k}; }

  bool carries_noise() const { return kind == Kind::DpnPman; }
  /// Intermediaries on a delivery route.
  unsigned intermediaries() const {
    return kind == Kind::Conventional ? 0 : kind == Kind::Dpdn ? hops : 1;
  }

  friend bool operator==(const Topology&, const Topology&) = default;
};

std::string_view to_string(Topology::Kind k);
std::optional<Topology::Kind> parse_topology_kind(std::string_view text);

struct Counts {
  std::size_t customers = 1;
  std::size_t vendors = 1;
  std::size_t dpn_sites = 1;
  std::size_t pman_sites = 1;
  std::size_t secondary_recipients = 0;

  friend bool operator==(const Counts&, const Counts&) = default;
};

/// Registry of every participant and its address. Entity ids are dense and
/// start at 1, allocated in the order vendors, DPN sites, PMAN sites,
/// customer homes, secondary recipients.
class Directory {
 public:
  static Directory build(const Counts& counts);

  std::span<const Address> vendors() const { return vendors_; }
  std::span<const Address> dpn_sites() const { return dpn_sites_; }
  std::span<const Address> pman_sites() const { return pman_sites_; }
  std::span<const Address> customer_homes() const { return homes_; }
  std::span<const Address> recipient_homes() const { return recipients_; }

  std::optional<Address> find(EntityId e) const;
  Address home_of(CustomerId c) const { return homes_.at(c.value); }
  std::optional<CustomerId> customer_at(EntityId home) const;
  /// The DPN a customer names as its delivery location.
  Address dpn_for(CustomerId c) const { return dpn_sites_.at(c.value % dpn_sites_.size()); }
  Address pman_for_customer(CustomerId c) const {
    return pman_sites_.at(c.value % pman_sites_.size());
  }
  Address pman_for_recipient(EntityId recipient) const;
  std::size_t entity_count() const { return all_.size(); }

 private:
  std::vector<Address> vendors_, dpn_sites_, pman_sites_, homes_, recipients_, all_;
};

enum class DonationRouting { ViaDpn, Direct };

struct PlannedRoutes {
  RouteSpec delivery;
  std::optional<RouteSpec> donation;  // only for DPN+PMAN orders with noise
};

/// Throws DirectoryTooSmall when the directory lacks the sites the topology
/// needs (k distinct DPN sites for DPDN(k)).
PlannedRoutes plan_route(const Order& order, const Topology& topology, const Directory& dir,
                         Rng& rng, DonationRouting donation = DonationRouting::ViaDpn);

/// Layered package for `route`: one layer per hop after the origin, outermost
/// for the first intermediary, innermost sealing the goods for the terminus.
Package build_onion(const RouteSpec& route, Manifest manifest, SurfaceMinter& minter);

struct ThresholdMix {
  unsigned x = 1;
  friend bool operator==(const ThresholdMix&, const ThresholdMix&) = default;
};
struct TimedMix {
  Distribution delay;
  friend bool operator==(const TimedMix&, const TimedMix&) = default;
};
struct PoolMix {
  unsigned pool_min = 0;
  double flush_prob = 1.0;
  friend bool operator==(const PoolMix&, const PoolMix&) = default;
};
using MixPolicy = std::variant<ThresholdMix, TimedMix, PoolMix>;

/// Throws ValidationError naming the offending mix.* field.
void validate(const MixPolicy& policy);

struct Departure {
  Package package;  // rewrapped; fresh surface
  Address dest;
  Time depart_at = 0.0;
  SurfaceId arrived_as;  // surface the parcel carried on arrival
  Time arrived_at = 0.0;
};

struct MixStep {
  std::vector<Departure> flush;
  std::optional<Time> wake_at;  // TimedDelay: when to call on_timer
  std::size_t layers_opened = 0;
};

/// Intermediary that unwraps its own layers, rewraps at the common size
/// class, and releases parcels according to its mix policy.
class MixNode {
 public:
  MixNode(EntityId node, MixPolicy policy, SizeClass common_class, Rng rng);

  /// Throws AccessDenied for a parcel that is not addressed to / openable by
  /// this node.
  MixStep on_arrival(const Package& pkg, Time now, SurfaceMinter& minter);
  /// Releases every held parcel whose depart time is <= now.
  MixStep on_timer(Time now);

  EntityId node() const { return node_; }
  SizeClass common_class() const { return common_; }
  const MixPolicy& policy() const { return policy_; }
  std::size_t held_count() const { return held_.size(); }
  std::vector<Package> held_packages() const;

 private:
  struct Held {
    Package package;
    Address dest;
    Time arrived_at;
    Time due;
    SurfaceId arrived_as;
  };

  Departure release(Held h, Time now) const;

  EntityId node_;
  MixPolicy policy_;
  SizeClass common_;
  Rng rng_;
  std::vector<Held> held_;
};

struct SplitOrder {
  Manifest self_manifest;
  ItemBag donation;
};

/// Customer-side split of a DPN+PMAN delivery into what it keeps and what it
/// donates.
SplitOrder pman_split(const Order& order, Address home);

struct Redistribution {
  Manifest manifest;
  Address to;
};

/// Private mutual aid network site. Holds anonymous inventory and a FIFO of
/// secondary-recipient requests. Nothing about donors is ever stored.
class PmanNode {
 public:
  explicit PmanNode(EntityId node) : node_(node) {}

  void receive(const ItemBag& goods);
  void enqueue(SecondaryRequest request) { pending_.push_back(std::move(request)); }
  /// Serves pending requests in FIFO order, each only if it can be filled
  /// completely; unservable requests keep their place in the queue.
  std::vector<Redistribution> redistribute();

  EntityId node() const { return node_; }
  const std::map<ItemId, std::uint64_t>& inventory() const { return inventory_; }
  std::uint64_t inventory_size() const;
  const std::deque<SecondaryRequest>& pending() const { return pending_; }

 private:
  EntityId node_;
  std::map<ItemId, std::uint64_t> inventory_;
  std::deque<SecondaryRequest> pending_;
};

}  // namespace pdn
