#include "pdn/protocols.hpp"

#include <algorithm>
#include <numeric>

namespace pdn {

std::string_view to_string(Topology::Kind k) {
  switch (k) {
    case Topology::Kind::Conventional: return "conventional";
    case Topology::Kind::Dpn: return "dpn";
    case Topology::Kind::DpnPman: return "dpn_pman";
    case Topology::Kind::Dpdn: return "dpdn";
  }
  return "?";
}

std::optional<Topology::Kind> parse_topology_kind(std::string_view text) {
  if (text == "conventional") return Topology::Kind::Conventional;
  if (text == "dpn") return Topology::Kind::Dpn;
  if (text == "dpn_pman") return Topology::Kind::DpnPman;
  if (text == "dpdn") return Topology::Kind::Dpdn;
  return std::nullopt;
}

Directory Directory::build(const Counts& counts) {
  Directory d;
  std::uint64_t next = 1;
  auto fill = [&](std::vector<Address>& into, std::size_t n, AddressKind kind) {
    for (std::size_t i = 0; i < n; ++i) {
      Address a{EntityId{next++}, kind};
      into.push_back(a);
      d.all_.push_back(a);
    }
  };
  fill(d.vendors_, counts.vendors, AddressKind::VendorSite);
  fill(d.dpn_sites_, counts.dpn_sites, AddressKind::DpnSite);
  fill(d.pman_sites_, counts.pman_sites, AddressKind::PmanSite);
  fill(d.homes_, counts.customers, AddressKind::CustomerHome);
  fill(d.recipients_, counts.secondary_recipients, AddressKind::SecondaryRecipientHome);
  return d;
}

std::optional<Address> Directory::find(EntityId e) const {
  if (e.value == 0 || e.value > all_.size()) return std::nullopt;
  return all_[e.value - 1];
}

std::optional<CustomerId> Directory::customer_at(EntityId home) const {
  if (homes_.empty()) return std::nullopt;
  const auto first = homes_.front().entity.value;
  if (home.value < first || home.value >= first + homes_.size()) return std::nullopt;
  return CustomerId{home.value - first};
}

Address Directory::pman_for_recipient(EntityId recipient) const {
  const auto first = recipients_.empty() ? 0 : recipients_.front().entity.value;
  return pman_sites_.at((recipient.value - first) % pman_sites_.size());
}

PlannedRoutes plan_route(const Order& order, const Topology& topology, const Directory& dir,
                         Rng& rng, DonationRouting donation) {
  const Address vendor = dir.find(order.vendor).value();
  const Address home = dir.home_of(order.customer);
  PlannedRoutes out;
  switch (topology.kind) {
    case Topology::Kind::Conventional:
      out.delivery.hops = {vendor, home};
      break;
    case Topology::Kind::Dpn:
    case Topology::Kind::DpnPman: {
      if (dir.dpn_sites().empty()) throw DirectoryTooSmall("counts.dpn_sites", "need >= 1 DPN site");
      const Address dpn = dir.dpn_for(order.customer);
      out.delivery.hops = {vendor, dpn, home};
      if (topology.kind == Topology::Kind::DpnPman && !order.noise_items.empty()) {
        if (dir.pman_sites().empty()) {
          throw DirectoryTooSmall("counts.pman_sites", "need >= 1 PMAN site");
        }
        const Address pman = dir.pman_for_customer(order.customer);
        RouteSpec d;
        if (donation == DonationRouting::ViaDpn) {
          d.hops = {home, dpn, pman};
        } else {
          d.hops = {home, pman};
        }
        out.donation = std::move(d);
      }
      break;
    }
    case Topology::Kind::Dpdn: {
      const auto sites = dir.dpn_sites();
      if (topology.hops < 1 || sites.size() < topology.hops) {
        throw DirectoryTooSmall("counts.dpn_sites", "DPDN(" + std::to_string(topology.hops) +
                                                        ") needs at least that many DPN sites");
      }
      // Partial Fisher-Yates: the first k slots are a uniform draw without
      // replacement, in uniformly random order.
      std::vector<std::size_t> idx(sites.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t i = 0; i < topology.hops; ++i) {
        const auto j = i + rng.below(idx.size() - i);
        std::swap(idx[i], idx[j]);
      }
      out.delivery.hops.push_back(vendor);
      for (std::size_t i = 0; i < topology.hops; ++i) out.delivery.hops.push_back(sites[idx[i]]);
      out.delivery.hops.push_back(home);
      break;
    }
  }
  return out;
}

Package build_onion(const RouteSpec& route, Manifest manifest, SurfaceMinter& minter) {
  if (!is_valid_route(route)) throw InvariantViolation("build_onion: malformed route");
  const auto& hops = route.hops;
  const SizeClass size = size_class_for_items(manifest.items.size());
  const Address terminus = hops.back();
  Package p = seal_goods(std::move(manifest), terminus, terminus.entity, size, minter);
  for (std::size_t i = hops.size() - 2; i >= 1; --i) {
    p = wrap_package(p, hops[i], hops[i].entity, size, minter);
  }
  return p;
}

void validate(const MixPolicy& policy) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ThresholdMix>) {
          if (p.x < 1) throw ValidationError("mix.X", "threshold must be >= 1");
        } else if constexpr (std::is_same_v<T, TimedMix>) {
          const auto& d = p.delay;
          if (d.a < 0 || (d.kind == Distribution::Kind::Uniform && d.b < d.a)) {
            throw ValidationError("mix.delay", "delay samples must be >= 0");
          }
        } else {
          if (!(p.flush_prob > 0 && p.flush_prob <= 1)) {
            throw ValidationError("mix.flush_prob", "must lie in (0, 1]");
          }
        }
      },
      policy);
}

MixNode::MixNode(EntityId node, MixPolicy policy, SizeClass common_class, Rng rng)
    : node_(node), policy_(std::move(policy)), common_(common_class), rng_(std::move(rng)) {
  validate(policy_);
}

std::vector<Package> MixNode::held_packages() const {
  std::vector<Package> out;
  out.reserve(held_.size());
  for (const auto& h : held_) out.push_back(h.package);
  return out;
}

Departure MixNode::release(Held h, Time now) const {
  return Departure{std::move(h.package), h.dest, now, h.arrived_as, h.arrived_at};
}

MixStep MixNode::on_arrival(const Package& pkg, Time now, SurfaceMinter& minter) {
  if (pkg.visible_dest().entity != node_) {
    throw AccessDenied("misrouted parcel " + std::to_string(pkg.surface().value) +
                       " delivered to node " + std::to_string(node_.value));
  }
  MixStep step;
  Unwrapped opened = unwrap_package(pkg, node_);
  step.layers_opened = 1;
  while (auto* inner = std::get_if<Package>(&opened.content)) {
    if (inner->opener() != node_) break;
    opened = unwrap_package(*inner, node_);
    ++step.layers_opened;
  }
  const auto* next = std::get_if<Package>(&opened.content);
  if (next == nullptr) {
    throw InvariantViolation("mix node " + std::to_string(node_.value) +
                             " reached goods; intermediaries never terminate a route");
  }
  const Address dest = next->visible_dest();
  Package out = wrap_package(*next, dest, dest.entity, common_, minter);

  Held h{std::move(out), dest, now, now, pkg.surface()};

  if (const auto* t = std::get_if<ThresholdMix>(&policy_)) {
    held_.push_back(std::move(h));
    if (held_.size() >= t->x) {
      rng_.shuffle(held_.begin(), held_.end());
      for (auto& x : held_) step.flush.push_back(release(std::move(x), now));
      held_.clear();
    }
  } else if (const auto* d = std::get_if<TimedMix>(&policy_)) {
    h.due = now + d->delay.sample(rng_);
    const Time due = h.due;
    held_.push_back(std::move(h));
    if (due <= now) {
      auto released = on_timer(now);
      step.flush = std::move(released.flush);
    } else {
      step.wake_at = due;
    }
  } else {
    const auto& pool = std::get<PoolMix>(policy_);
    held_.push_back(std::move(h));
    if (held_.size() > pool.pool_min) {
      rng_.shuffle(held_.begin(), held_.end());
      const std::size_t excess = held_.size() - pool.pool_min;
      std::vector<Held> keep;
      for (std::size_t i = 0; i < held_.size(); ++i) {
        if (i < excess && rng_.bernoulli(pool.flush_prob)) {
          step.flush.push_back(release(std::move(held_[i]), now));
        } else {
          keep.push_back(std::move(held_[i]));
        }
      }
      // Keep the remaining pool in arrival order.
      std::stable_sort(keep.begin(), keep.end(),
                       [](const Held& a, const Held& b) { return a.arrived_at < b.arrived_at; });
      held_ = std::move(keep);
    }
  }
  return step;
}

MixStep MixNode::on_timer(Time now) {
  MixStep step;
  std::vector<Held> due;
  std::vector<Held> keep;
  for (auto& h : held_) {
    (h.due <= now ? due : keep).push_back(std::move(h));
  }
  std::stable_sort(due.begin(), due.end(), [](const Held& a, const Held& b) { return a.due < b.due; });
  for (auto& h : due) step.flush.push_back(release(std::move(h), now));
  held_ = std::move(keep);
  return step;
}

SplitOrder pman_split(const Order& order, Address home) {
  return SplitOrder{Manifest{order.self_items, home}, order.noise_items};
}

void PmanNode::receive(const ItemBag& goods) {
  if (goods.empty()) throw InvalidParam("pman.receive", "empty donation");
  for (auto item : goods) ++inventory_[item];
}

std::uint64_t PmanNode::inventory_size() const {
  std::uint64_t n = 0;
  for (const auto& [item, count] : inventory_) n += count;
  return n;
}

std::vector<Redistribution> PmanNode::redistribute() {
  std::vector<Redistribution> out;
  std::deque<SecondaryRequest> still_pending;
  for (auto& req : pending_) {
    std::map<ItemId, std::uint64_t> need;
    for (auto item : req.items) ++need[item];
    const bool servable = std::all_of(need.begin(), need.end(), [&](const auto& kv) {
      auto it = inventory_.find(kv.first);
      return it != inventory_.end() && it->second >= kv.second;
    });
    if (!servable) {
      still_pending.push_back(std::move(req));
      continue;
    }
    for (const auto& [item, count] : need) {
      auto it = inventory_.find(item);
      it->second -= count;
      if (it->second == 0) inventory_.erase(it);
    }
    const Address to{req.recipient, AddressKind::SecondaryRecipientHome};
    out.push_back(Redistribution{Manifest{std::move(req.items), to}, to});
  }
  pending_ = std::move(still_pending);
  return out;
}

}  // namespace pdn
