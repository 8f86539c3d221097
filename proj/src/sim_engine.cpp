#include "pdn/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace pdn {

Event EventQueue::schedule(Time time, EventKind kind, std::size_t payload) {
  if (time < clock_) {
    throw TimeTravel("event at t=" + format_time(time) + " scheduled before clock t=" +
                     format_time(clock_));
  }
  const Event e{time, next_seq_++, kind, payload};
  heap_.push(e);
  return e;
}

Event EventQueue::pop() {
  Event e = heap_.top();
  heap_.pop();
  clock_ = e.time;
  return e;
}

std::vector<Event> EventQueue::pending() const {
  auto copy = heap_;
  std::vector<Event> out;
  while (!copy.empty()) {
    out.push_back(copy.top());
    copy.pop();
  }
  return out;
}

void accrue(DeliveryRecord& record, const CostModel& cost, const Accrual& step) {
  switch (step.kind) {
    case AccrualKind::Hop:
      ++record.hops;
      record.cost += cost.per_hop;
      record.latency_accrued += step.delay;
      break;
    case AccrualKind::Rewrap:
      ++record.rewraps;
      record.cost += cost.per_rewrap;
      break;
    case AccrualKind::Dwell:
      record.latency_accrued += step.delay;
      break;
  }
}

namespace {

void require(bool ok, const char* path, const std::string& message) {
  if (!ok) throw ValidationError(path, message);
}

void validate_distribution(const Distribution& d, const char* path) {
  require(std::isfinite(d.a) && std::isfinite(d.b), path, "parameters must be finite");
  require(d.a >= 0, path, "samples must be >= 0");
  if (d.kind == Distribution::Kind::Uniform) require(d.b >= d.a, path, "needs low <= high");
}

}  // namespace

void validate(const Scenario& s) {
  const auto kind = s.topology.kind;
  require(std::isfinite(s.horizon) && s.horizon > 0, "horizon", "must be > 0");
  require(s.cost.per_hop >= 0, "cost.per_hop", "must be >= 0");
  require(s.cost.per_rewrap >= 0, "cost.per_rewrap", "must be >= 0");
  require(s.counts.customers >= 1, "counts.customers", "must be >= 1");
  require(s.counts.vendors >= 1, "counts.vendors", "must be >= 1");
  if (kind != Topology::Kind::Conventional) {
    require(s.counts.dpn_sites >= 1, "counts.dpn_sites", "must be >= 1");
  }
  if (kind == Topology::Kind::Dpdn) {
    require(s.topology.hops >= 1, "topology.k", "must be >= 1");
    if (s.counts.dpn_sites < s.topology.hops) {
      throw DirectoryTooSmall("counts.dpn_sites", "DPDN(k) needs at least k DPN sites");
    }
  }
  if (kind == Topology::Kind::DpnPman) {
    require(s.counts.pman_sites >= 1, "counts.pman_sites", "must be >= 1");
  }
  require(s.catalog_n >= 1, "catalog.n", "must be >= 1");
  require(std::isfinite(s.catalog_zipf_s) && s.catalog_zipf_s >= 0, "catalog.zipf_s",
          "must be finite and >= 0");
  require(s.profile.sparsity_k >= 1 && s.profile.sparsity_k <= s.catalog_n, "profile.sparsity_k",
          "must lie in [1, catalog.n]");
  require(std::isfinite(s.profile.order_rate) && s.profile.order_rate > 0, "profile.order_rate",
          "must be > 0");
  require(s.items_per_order >= 1, "profile.items_per_order", "must be >= 1");
  require(std::isfinite(s.request_rate) && s.request_rate >= 0, "secondary.request_rate",
          "must be >= 0");
  require(s.items_per_request >= 1, "secondary.items_per_request", "must be >= 1");
  validate(s.mix);
  validate_distribution(s.latency, "latency");
  require(s.attacks.reident.p >= 1, "attacks.reident.p", "must be >= 1");
  require(s.attacks.reident.trials >= 1, "attacks.reident.trials", "must be >= 1");
  require(s.attacks.reident.time_bin > 0, "attacks.reident.time_bin", "must be > 0");
}

Workload generate_workload(const Scenario& s, const Directory& dir) {
  const Rng root(s.seed);
  const Rng wl = root.split("workload");
  const Catalog catalog = gen_catalog(s.catalog_n, s.catalog_zipf_s);
  std::vector<Address> homes(dir.customer_homes().begin(), dir.customer_homes().end());
  const auto profiles = gen_customers(catalog, homes, s.profile, wl.split("customers"));
  std::vector<EntityId> vendors;
  for (const auto& v : dir.vendors()) vendors.push_back(v.entity);
  OrderParams op;
  op.items_per_order = s.items_per_order;
  op.with_noise = s.topology.carries_noise();
  op.noise_draw = s.noise_draw;
  Workload w;
  w.orders = gen_orders(profiles, catalog, vendors, s.horizon, op, wl.split("orders"));
  if (s.topology.carries_noise()) {
    std::vector<EntityId> recipients;
    for (const auto& r : dir.recipient_homes()) recipients.push_back(r.entity);
    w.requests = gen_secondary_requests(recipients, catalog, s.request_rate, s.items_per_request,
                                        s.horizon, wl.split("requests"));
  }
  return w;
}

namespace {

enum class Purpose { Delivery, Donation, Redistribution };

struct ParcelTruth {
  Purpose purpose = Purpose::Delivery;
  std::size_t order = 0;  // valid for Delivery and Donation
  std::uint64_t items = 0;
};

struct Transit {
  Package package;
  Address src;
  Address dst;
};

class Engine {
 public:
  Engine(const Scenario& s, Workload w) : s_(s), root_(s.seed) {
    r_.scenario = s;
    r_.directory = Directory::build(s.counts);
    r_.orders = std::move(w.orders);
    r_.requests = std::move(w.requests);
    latency_rng_.emplace(root_.split("latency"));
    hop_rng_.emplace(root_.split("hops"));
    views_.resize(r_.directory.entity_count());
    for (std::size_t i = 0; i < views_.size(); ++i) {
      const Address a = *r_.directory.find(EntityId{i + 1});
      views_[i].owner = Owner{role_for(a.kind), a.entity};
    }
    assign_pseudonyms();
    if (s.topology.kind != Topology::Kind::Conventional) {
      for (const auto& d : r_.directory.dpn_sites()) {
        mixes_.emplace(d.entity.value,
                       MixNode(d.entity, s.mix, s.common_class,
                               root_.split("mixing").split(d.entity.value)));
        r_.mix_nodes.push_back({d.entity, s.common_class});
        sniffed_[d.entity.value];
      }
    }
    for (const auto& p : r_.directory.pman_sites()) pmans_.emplace(p.entity.value, PmanNode(p.entity));
  }

  RunResult run() {
    for (std::size_t i = 0; i < r_.orders.size(); ++i) {
      if (r_.orders[i].id.value != i) throw InvariantViolation("order ids must equal their index");
      if (!r_.directory.find(r_.orders[i].vendor)) {
        throw UnknownEntity("order " + std::to_string(i) + " names an unknown vendor");
      }
      DeliveryRecord rec;
      rec.order = r_.orders[i].id;
      rec.customer = r_.orders[i].customer;
      rec.placed_at = r_.orders[i].placed_at;
      r_.deliveries.push_back(std::move(rec));
      if (r_.orders[i].placed_at < s_.horizon) {
        q_.schedule(r_.orders[i].placed_at, EventKind::OrderPlaced, i);
      }
    }
    for (std::size_t i = 0; i < r_.requests.size(); ++i) {
      if (r_.requests[i].requested_at < s_.horizon) {
        q_.schedule(r_.requests[i].requested_at, EventKind::PmanCycle, i);
      }
    }
    for (const auto& home : r_.directory.customer_homes()) {
      const auto c = *r_.directory.customer_at(home.entity);
      view(home.entity).facts.push_back(fact::HoldsAddressOf{c, home});
    }
    q_.schedule(s_.horizon, EventKind::RunEnd);

    Time last = 0.0;
    while (!q_.empty()) {
      const Event e = q_.pop();
      if (e.time < last) r_.clock_monotone = false;
      last = e.time;
      ++r_.events_processed;
      if (e.kind == EventKind::RunEnd) break;
      dispatch(e);
    }
    finish();
    return std::move(r_);
  }

 private:
  static Role role_for(AddressKind k) {
    switch (k) {
      case AddressKind::VendorSite: return Role::Vendor;
      case AddressKind::DpnSite: return Role::Dpn;
      case AddressKind::PmanSite: return Role::Pman;
      case AddressKind::CustomerHome: return Role::Customer;
      case AddressKind::SecondaryRecipientHome: return Role::Recipient;
    }
    return Role::Adversary;
  }

  KnowledgeView& view(EntityId e) { return views_.at(e.value - 1); }

  void assign_pseudonyms() {
    const auto n = r_.directory.customer_homes().size();
    r_.pseudonyms.resize(n);
    std::vector<std::uint64_t> values(n);
    std::iota(values.begin(), values.end(), std::uint64_t{1000});
    Rng rng = root_.split("pseudonyms");
    rng.shuffle(values.begin(), values.end());
    for (std::size_t i = 0; i < n; ++i) r_.pseudonyms[i] = Pseudonym{values[i]};
  }

  void dispatch(const Event& e) {
    switch (e.kind) {
      case EventKind::OrderPlaced: place_order(e.payload, e.time); break;
      case EventKind::PackageDeparted: {
        Transit t = std::move(*scheduled_.at(e.payload));
        scheduled_[e.payload].reset();
        depart(std::move(t.package), t.src, t.dst, e.time);
        break;
      }
      case EventKind::PackageArrived: {
        Transit t = std::move(*transit_.at(e.payload));
        transit_[e.payload].reset();
        arrive(std::move(t), e.time);
        break;
      }
      case EventKind::MixTimer: {
        auto& node = mixes_.at(e.payload);
        forward(node, node.on_timer(e.time), e.time);
        break;
      }
      case EventKind::PmanCycle: request_arrived(e.payload, e.time); break;
      case EventKind::RunEnd: break;
    }
  }

  void place_order(std::size_t idx, Time now) {
    const Order& o = r_.orders[idx];
    auto routes = plan_route(o, s_.topology, r_.directory, *hop_rng_, s_.donation_routing);
    const Address home = r_.directory.home_of(o.customer);
    Manifest m{o.all_items(), home};
    const auto n_items = m.items.size();
    Package pkg = build_onion(routes.delivery, std::move(m), minter_);
    for (auto s : pkg.surfaces()) truth_[s.value] = {Purpose::Delivery, idx, n_items};

    auto& rec = r_.deliveries[idx];
    rec.route = routes.delivery;
    rec.shipped_as = pkg.surface();
    if (routes.donation) donation_routes_.emplace(idx, *routes.donation);

    const Pseudonym pseudo = r_.pseudonyms.at(o.customer.value);
    const Address first_hop = routes.delivery.hops[1];
    auto& vendor = view(o.vendor);
    vendor.facts.push_back(fact::Purchased{pseudo, o.all_items(), o.id, o.placed_at});
    vendor.facts.push_back(fact::ShippedTo{o.id, first_hop, pkg.surface()});
    view(home.entity).facts.push_back(fact::Purchased{pseudo, o.all_items(), o.id, o.placed_at});

    r_.goods.shipped += n_items;
    depart(std::move(pkg), routes.delivery.hops[0], first_hop, now);
  }

  DeliveryRecord* record_for(SurfaceId s) {
    auto it = truth_.find(s.value);
    if (it == truth_.end() || it->second.purpose != Purpose::Delivery) return nullptr;
    return &r_.deliveries[it->second.order];
  }

  void log_move(const ObservationEvent& ev) {
    r_.observations.push_back(ev);
    for (const Address* end : {&ev.src, &ev.dst}) {
      if (end->kind == AddressKind::DpnSite || end->kind == AddressKind::PmanSite) {
        view(end->entity).facts.push_back(fact::ObservedMove{ev});
      }
    }
  }

  void depart(Package pkg, Address src, Address dst, Time now) {
    log_move(ObservationEvent{now, src, dst, pkg.surface(), pkg.size_class()});
    const double delay = s_.latency.sample(*latency_rng_);
    if (auto* rec = record_for(pkg.surface())) {
      accrue(*rec, s_.cost, Accrual{AccrualKind::Hop, delay});
    } else {
      overhead_.per_hop += s_.cost.per_hop;
    }
    transit_.push_back(Transit{std::move(pkg), src, dst});
    q_.schedule(now + delay, EventKind::PackageArrived, transit_.size() - 1);
  }

  void arrive(Transit t, Time now) {
    log_move(ObservationEvent{now, t.src, t.dst, t.package.surface(), t.package.size_class()});
    switch (t.dst.kind) {
      case AddressKind::DpnSite: {
        auto& node = mixes_.at(t.dst.entity.value);
        auto step = node.on_arrival(t.package, now, minter_);
        if (auto* rec = record_for(t.package.surface())) rec->unwrap_trace.push_back(node.node());
        if (step.wake_at) q_.schedule(*step.wake_at, EventKind::MixTimer, node.node().value);
        forward(node, std::move(step), now);
        break;
      }
      case AddressKind::CustomerHome: deliver_home(t, now); break;
      case AddressKind::PmanSite: deliver_pman(t, now); break;
      case AddressKind::SecondaryRecipientHome: {
        const Manifest m = peel(t.package, t.dst.entity, nullptr);
        r_.goods.at_recipients += m.items.size();
        r_.goods.redistributed += m.items.size();
        break;
      }
      case AddressKind::VendorSite:
        throw InvariantViolation("parcels never travel to a vendor");
    }
  }

  // Opens every layer addressed to `by`; records the unwrapping entity once.
  Manifest peel(const Package& pkg, EntityId by, DeliveryRecord* rec) {
    Unwrapped u = unwrap_package(pkg, by);
    while (auto* inner = std::get_if<Package>(&u.content)) u = unwrap_package(*inner, by);
    if (rec) rec->unwrap_trace.push_back(by);
    return std::get<Manifest>(std::move(u.content));
  }

  void forward(MixNode& node, MixStep step, Time now) {
    const bool knows_subscribers = s_.topology.kind == Topology::Kind::Dpn ||
                                   s_.topology.kind == Topology::Kind::DpnPman;
    auto& v = view(node.node());
    for (auto& d : step.flush) {
      auto base = truth_.at(d.arrived_as.value);
      for (auto s : d.package.surfaces()) truth_.try_emplace(s.value, base);
      v.facts.push_back(fact::Forwarded{d.arrived_as, d.package.surface()});
      if (knows_subscribers && d.dest.kind == AddressKind::CustomerHome &&
          subscribers_.insert({node.node().value, d.dest.entity.value}).second) {
        v.facts.push_back(fact::HoldsAddressOf{*r_.directory.customer_at(d.dest.entity), d.dest});
      }
      // Opening the sealed parcel one layer past this node's own access.
      const Interior outer = tamper_open(d.package);
      if (const auto* next = std::get_if<Package>(&outer)) {
        const Interior inner = tamper_open(*next);
        if (const auto* m = std::get_if<Manifest>(&inner)) {
          sniffed_[node.node().value].push_back(fact::Sniffed{d.arrived_as, *m});
        }
      }
      if (auto* rec = record_for(d.package.surface())) {
        accrue(*rec, s_.cost, Accrual{AccrualKind::Rewrap});
        accrue(*rec, s_.cost, Accrual{AccrualKind::Dwell, d.depart_at - d.arrived_at});
      } else {
        overhead_.per_rewrap += s_.cost.per_rewrap;
      }
      depart(std::move(d.package), Address{node.node(), AddressKind::DpnSite}, d.dest, now);
    }
  }

  void deliver_home(const Transit& t, Time now) {
    const auto truth = truth_.at(t.package.surface().value);
    auto* rec = record_for(t.package.surface());
    const Manifest m = peel(t.package, t.dst.entity, rec);
    r_.goods.at_customers += m.items.size();
    if (!rec) return;
    rec->delivered_at = now;
    const Order& o = r_.orders[truth.order];
    auto it = donation_routes_.find(truth.order);
    if (it == donation_routes_.end()) return;
    const auto split = pman_split(o, t.dst);
    const RouteSpec& route = it->second;
    Package donation = build_onion(route, Manifest{split.donation, route.hops.back()}, minter_);
    for (auto s : donation.surfaces()) {
      truth_[s.value] = {Purpose::Donation, truth.order, split.donation.size()};
    }
    r_.goods.at_customers -= split.donation.size();
    r_.goods.donated += split.donation.size();
    scheduled_.push_back(Transit{std::move(donation), route.hops[0], route.hops[1]});
    q_.schedule(now, EventKind::PackageDeparted, scheduled_.size() - 1);
  }

  void deliver_pman(const Transit& t, Time now) {
    auto& pman = pmans_.at(t.dst.entity.value);
    const Manifest m = peel(t.package, t.dst.entity, nullptr);
    pman.receive(m.items);
    r_.goods.donations_received += m.items.size();
    view(t.dst.entity).facts.push_back(fact::ReceivedGoods{m.items, now, t.package.surface()});
    redistribute(pman, now);
  }

  void request_arrived(std::size_t idx, Time now) {
    const auto& req = r_.requests[idx];
    const Address pman_addr = r_.directory.pman_for_recipient(req.recipient);
    auto& pman = pmans_.at(pman_addr.entity.value);
    view(pman_addr.entity).facts.push_back(fact::RequestedGoods{req.recipient, req.items});
    pman.enqueue(req);
    redistribute(pman, now);
  }

  void redistribute(PmanNode& pman, Time now) {
    for (auto& r : pman.redistribute()) {
      const auto n = r.manifest.items.size();
      const auto size = size_class_for_items(n);
      r_.goods.dispatched += n;
      Package p = seal_goods(std::move(r.manifest), r.to, r.to.entity, size, minter_);
      truth_[p.surface().value] = {Purpose::Redistribution, 0, n};
      depart(std::move(p), Address{pman.node(), AddressKind::PmanSite}, r.to, now);
    }
  }

  void finish() {
    for (const auto& e : q_.pending()) {
      if (e.kind == EventKind::PackageArrived) {
        r_.goods.in_flight += truth_.at(transit_[e.payload]->package.surface().value).items;
        ++r_.in_flight_packages;
      } else if (e.kind == EventKind::PackageDeparted) {
        r_.goods.in_flight += truth_.at(scheduled_[e.payload]->package.surface().value).items;
        ++r_.in_flight_packages;
      }
    }
    for (const auto& [id, node] : mixes_) {
      for (const auto& p : node.held_packages()) {
        // The outer layer was minted on arrival; inner layers are known.
        const auto surfaces = p.surfaces();
        auto known = std::find_if(surfaces.begin(), surfaces.end(),
                                  [&](SurfaceId s) { return truth_.count(s.value) > 0; });
        if (known == surfaces.end()) throw InvariantViolation("held parcel of unknown origin");
        r_.goods.in_flight += truth_.at(known->value).items;
        ++r_.held_packages;
      }
    }
    for (const auto& [id, pman] : pmans_) r_.goods.pman_residual += pman.inventory_size();
    r_.truncated = r_.in_flight_packages > 0 || r_.held_packages > 0 ||
                   std::any_of(r_.deliveries.begin(), r_.deliveries.end(),
                               [](const auto& d) { return !d.delivered_at; });
    r_.overhead_cost = overhead_.per_hop + overhead_.per_rewrap;
    r_.surfaces_minted = minter_.minted();

    r_.views = std::move(views_);
    KnowledgeView adversary{Owner{Role::Adversary, EntityId{0}}, {}};
    adversary.facts.reserve(r_.observations.size());
    for (const auto& ev : r_.observations) adversary.facts.push_back(fact::ObservedMove{ev});
    r_.views.push_back(std::move(adversary));
    for (auto& [id, facts] : sniffed_) {
      r_.sniffed.push_back(KnowledgeView{Owner{Role::Sniffer, EntityId{id}}, std::move(facts)});
    }
  }

  const Scenario& s_;
  Rng root_;
  std::optional<Rng> latency_rng_;
  std::optional<Rng> hop_rng_;
  RunResult r_;
  EventQueue q_;
  SurfaceMinter minter_;
  std::vector<KnowledgeView> views_;
  std::map<std::uint64_t, MixNode> mixes_;
  std::map<std::uint64_t, PmanNode> pmans_;
  std::map<std::uint64_t, std::vector<Fact>> sniffed_;
  std::set<std::pair<std::uint64_t, std::uint64_t>> subscribers_;
  std::unordered_map<std::uint64_t, ParcelTruth> truth_;
  std::map<std::size_t, RouteSpec> donation_routes_;
  std::vector<std::optional<Transit>> transit_;
  std::vector<std::optional<Transit>> scheduled_;
  struct {
    double per_hop = 0.0;
    double per_rewrap = 0.0;
  } overhead_;
};

}  // namespace

RunResult simulate(const Scenario& s, Workload workload) {
  validate(s);
  Engine engine(s, std::move(workload));
  return engine.run();
}

RunResult run_scenario(const Scenario& s) {
  validate(s);
  const Directory dir = Directory::build(s.counts);
  return simulate(s, generate_workload(s, dir));
}

std::string serialize(const RunResult& run) {
  std::ostringstream out;
  out << "# observations\n";
  for (const auto& e : run.observations) out << format_observation(e) << '\n';
  out << "# views\n";
  for (const auto& v : run.views) {
    for (const auto& f : v.facts) out << format_fact(v.owner, f) << '\n';
  }
  for (const auto& v : run.sniffed) {
    for (const auto& f : v.facts) out << format_fact(v.owner, f) << '\n';
  }
  out << "# deliveries\n";
  for (const auto& d : run.deliveries) {
    out << d.order.value << '\t' << d.customer.value << '\t' << format_time(d.placed_at) << '\t'
        << (d.delivered_at ? format_time(*d.delivered_at) : std::string("-")) << '\t' << d.hops
        << '\t' << d.rewraps << '\t' << format_time(d.cost) << '\n';
  }
  out << "# goods\t" << run.goods.shipped << '\t' << run.goods.at_customers << '\t'
      << run.goods.at_recipients << '\t' << run.goods.pman_residual << '\t'
      << run.goods.in_flight << '\n';
  return out.str();
}

}  // namespace pdn
