#include "pdn/adversary.hpp"

#include <algorithm>
#include <charconv>
#include <exception>
#include <string>

#include "pdn/errors.hpp"
#include "pdn/matching.hpp"

namespace pdn {

const KnowledgeView& view_of(EntityId entity, const RunResult& run) {
  if (run.views.empty()) throw UnknownEntity("run has no views");
  if (entity.value == 0) return run.views.back();
  if (entity.value >= run.views.size()) {
    throw UnknownEntity("no entity " + std::to_string(entity.value) + " in this run");
  }
  return run.views[entity.value - 1];
}

KnowledgeView sniffing_dpn(const RunResult& run, EntityId node) {
  const auto addr = run.directory.find(node);
  if (!addr || addr->kind != AddressKind::DpnSite) {
    throw UnknownEntity("entity " + std::to_string(node.value) + " is not a DPN site");
  }
  KnowledgeView out = view_of(node, run);
  out.owner = Owner{Role::Sniffer, node};
  for (const auto& v : run.sniffed) {
    if (v.owner.entity == node) out.facts.insert(out.facts.end(), v.facts.begin(), v.facts.end());
  }
  return out;
}

// ---------------------------------------------------------------------------

MovementIndex::MovementIndex(const ObservationLog& log) : log_(&log), arrival_(log.size(), false) {
  moves_.reserve(log.size() / 2 + 1);
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& e = log[i];
    if (i > 0 && e.time < log[i - 1].time) {
      throw InvariantViolation("observation log is not time-ordered at record " +
                               std::to_string(i));
    }
    auto [it, fresh] = by_surface_.try_emplace(e.surface.value, moves_.size());
    if (fresh) {
      moves_.push_back(Movement{e.surface, e.src, e.dst, e.size, e.time, i, {}, {}});
      continue;
    }
    auto& m = moves_[it->second];
    if (m.arrive_index || m.src != e.src || m.dst != e.dst) {
      throw InvariantViolation("surface " + std::to_string(e.surface.value) +
                               " observed on more than one movement");
    }
    m.arrived = e.time;
    m.arrive_index = i;
    arrival_[i] = true;
  }
}

const Movement* MovementIndex::find(SurfaceId s) const {
  auto it = by_surface_.find(s.value);
  return it == by_surface_.end() ? nullptr : &moves_[it->second];
}

// ---------------------------------------------------------------------------

const PackagePosterior* Posterior::find(SurfaceId outbound) const {
  auto it = by_outbound_.find(outbound.value);
  if (it == by_outbound_.end()) return nullptr;
  return &epochs[it->second.first].packages[it->second.second];
}

std::span<const Candidate> Posterior::forward(SurfaceId inbound) const {
  auto it = forward_.find(inbound.value);
  if (it == forward_.end()) return {};
  return it->second;
}

void Posterior::index() {
  by_outbound_.clear();
  forward_.clear();
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    for (std::size_t k = 0; k < epochs[e].packages.size(); ++k) {
      const auto& pkg = epochs[e].packages[k];
      by_outbound_[pkg.outbound.value] = {e, k};
      for (const auto& c : pkg.candidates) {
        forward_[c.inbound.value].push_back(Candidate{pkg.outbound, c.weight});
      }
    }
  }
  // Candidate weights need not sum to one per inbound parcel; cap the mass
  // leaving any parcel at one so propagation stays a sub-probability.
  for (auto& [in, outs] : forward_) {
    double total = 0.0;
    for (const auto& c : outs) total += c.weight;
    if (total > 1.0 + 1e-12) {
      for (auto& c : outs) c.weight /= total;
    }
    std::sort(outs.begin(), outs.end(),
              [](const Candidate& a, const Candidate& b) { return a.inbound < b.inbound; });
  }
}

namespace {

struct Token {
  std::size_t record;
  SurfaceId surface;
  SizeClass size;
  Time time;
  std::size_t epoch;  // outbound only
};

void solve_period(const std::vector<Token>& ins, const std::vector<Token>& outs,
                  SizeClass common, CorrelationMode mode, std::vector<EpochPosterior>& epochs) {
  if (outs.empty()) return;
  MatchingProblem problem(outs.size(), ins.size());
  for (std::size_t o = 0; o < outs.size(); ++o) {
    for (std::size_t i = 0; i < ins.size(); ++i) {
      problem.set(o, i,
                  ins[i].record < outs[o].record && outs[o].size == std::max(ins[i].size, common));
    }
  }
  const auto marg =
      mode == CorrelationMode::Exact ? exact_marginals(problem) : candidate_marginals(problem);
  for (std::size_t o = 0; o < outs.size(); ++o) {
    PackagePosterior pkg;
    pkg.outbound = outs[o].surface;
    pkg.departed = outs[o].time;
    for (std::size_t i = 0; i < ins.size(); ++i) {
      const double w = marg.at(o, i);
      if (w > 1e-12) pkg.candidates.push_back(Candidate{ins[i].surface, w});
    }
    std::sort(pkg.candidates.begin(), pkg.candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.inbound < b.inbound; });
    double best = -1.0;
    for (const auto& c : pkg.candidates) {
      if (c.weight > best + 1e-12) {
        best = c.weight;
        pkg.map_guess = c.inbound;
      }
    }
    auto& epoch = epochs[outs[o].epoch];
    epoch.exact = epoch.exact && marg.exact && mode == CorrelationMode::Exact;
    epoch.packages.push_back(std::move(pkg));
  }
}

}  // namespace

Posterior correlation_attack(const MovementIndex& moves, const MixNodeInfo& node,
                             CorrelationMode mode) {
  const auto& log = moves.log();
  Posterior out;
  out.node = node.node;
  std::vector<Token> ins, outs;
  std::size_t held = 0;
  bool last_was_out = false;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& e = log[i];
    if (moves.is_arrival(i)) {
      if (e.dst.kind != AddressKind::DpnSite || e.dst.entity != node.node) continue;
      ins.push_back(Token{i, e.surface, e.size, e.time, 0});
      ++held;
      last_was_out = false;
      continue;
    }
    if (e.src.kind != AddressKind::DpnSite || e.src.entity != node.node) continue;
    if (held == 0) {
      throw Infeasible("node " + std::to_string(node.node.value) + " sent surface " +
                       std::to_string(e.surface.value) + " while holding nothing");
    }
    if (!last_was_out || out.epochs.back().time != e.time) {
      out.epochs.push_back(EpochPosterior{e.time, {}, true});
    }
    last_was_out = true;
    outs.push_back(Token{i, e.surface, e.size, e.time, out.epochs.size() - 1});
    if (--held == 0) {
      solve_period(ins, outs, node.common_class, mode, out.epochs);
      ins.clear();
      outs.clear();
    }
  }
  solve_period(ins, outs, node.common_class, mode, out.epochs);
  for (const auto& e : out.epochs) out.exact = out.exact && e.exact;
  out.index();
  return out;
}

Posterior correlation_attack(const ObservationLog& log, const MixNodeInfo& node,
                             CorrelationMode mode) {
  const MovementIndex moves(log);
  return correlation_attack(moves, node, mode);
}

std::vector<Posterior> correlate_nodes_serial(const MovementIndex& moves,
                                              std::span<const MixNodeInfo> nodes,
                                              CorrelationMode mode) {
  std::vector<Posterior> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(correlation_attack(moves, n, mode));
  return out;
}

std::vector<Posterior> correlate_nodes(const MovementIndex& moves,
                                       std::span<const MixNodeInfo> nodes, CorrelationMode mode) {
  const auto n = static_cast<std::ptrdiff_t>(nodes.size());
  std::vector<Posterior> out(nodes.size());
  std::vector<std::exception_ptr> errors(nodes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = correlation_attack(moves, nodes[i], mode);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::optional<Address> Linkage::map_guess() const {
  std::optional<Address> best;
  double w = -1.0;
  for (const auto& [addr, p] : destinations) {
    if (p > w + 1e-12) {
      w = p;
      best = addr;
    }
  }
  return best;
}

TrafficAnalysis::TrafficAnalysis(const ObservationLog& log, std::span<const MixNodeInfo> nodes,
                                 CorrelationMode mode, std::optional<std::size_t> route_hops,
                                 bool parallel)
    : moves_(log), route_hops_(route_hops) {
  posteriors_ = parallel ? correlate_nodes(moves_, nodes, mode)
                         : correlate_nodes_serial(moves_, nodes, mode);
  for (std::size_t i = 0; i < nodes.size(); ++i) node_slot_[nodes[i].node.value] = i;
}

Linkage TrafficAnalysis::link(SurfaceId shipped) const {
  Linkage out;
  out.start = shipped;
  const Movement* first = moves_.find(shipped);
  if (!first) return out;
  // A state is a movement plus the set of mix nodes already visited. Mass
  // flows strictly forward through the log, so expanding states in departure
  // order merges every contribution before it is pushed further.
  struct Key {
    std::size_t depart;
    std::uint64_t visited;
    std::size_t hops;
    auto operator<=>(const Key&) const = default;
  };
  const bool track_visits = node_slot_.size() <= 64;
  std::map<Key, std::pair<SurfaceId, double>> frontier;
  frontier[Key{first->depart_index, 0, 0}] = {shipped, 1.0};
  std::map<Address, double> reached;
  while (!frontier.empty()) {
    auto node = frontier.extract(frontier.begin());
    const Key key = node.key();
    const auto [surface, mass] = node.mapped();
    const Movement* m = moves_.find(surface);
    if (!m->arrive_index) continue;  // in flight at the horizon
    if (m->dst.kind != AddressKind::DpnSite) {
      if (!route_hops_ || key.hops == *route_hops_) reached[m->dst] += mass;
      continue;
    }
    auto slot = node_slot_.find(m->dst.entity.value);
    if (slot == node_slot_.end()) continue;
    if (route_hops_ && key.hops >= *route_hops_) continue;
    std::uint64_t visited = key.visited;
    if (track_visits) {
      const std::uint64_t bit = std::uint64_t{1} << slot->second;
      if (route_hops_ && (visited & bit)) continue;  // routes never revisit a site
      visited |= bit;
    }
    for (const auto& c : posteriors_[slot->second].forward(surface)) {
      const Movement* next = moves_.find(c.inbound);
      if (!next) continue;
      auto& cell = frontier[Key{next->depart_index, visited, key.hops + 1}];
      cell.first = c.inbound;
      cell.second += mass * c.weight;
    }
  }
  for (const auto& [addr, p] : reached) out.reached += p;
  if (out.reached > 0) {
    for (const auto& [addr, p] : reached) out.destinations.emplace_back(addr, p / out.reached);
  }
  return out;
}

// ---------------------------------------------------------------------------

SurfaceId GroundTruth::final_surface(SurfaceId s) const {
  for (auto it = forwarded.find(s.value); it != forwarded.end(); it = forwarded.find(s.value)) {
    s = it->second;
  }
  return s;
}

GroundTruth derive_truth(std::span<const KnowledgeView> views, const ObservationLog& log) {
  GroundTruth t;
  for (const auto& v : views) {
    std::optional<Address> self_home;
    std::vector<Pseudonym> self_pseudonyms;
    for (const auto& f : v.facts) {
      if (const auto* fw = std::get_if<fact::Forwarded>(&f); fw && v.owner.role == Role::Dpn) {
        t.forwarded[fw->in.value] = fw->out;
        t.came_from[fw->out.value] = fw->in;
      } else if (const auto* p = std::get_if<fact::Purchased>(&f)) {
        if (v.owner.role == Role::Vendor) t.buyer[p->order] = p->pseudonym;
        if (v.owner.role == Role::Customer) self_pseudonyms.push_back(p->pseudonym);
      } else if (const auto* s = std::get_if<fact::ShippedTo>(&f); s && v.owner.role == Role::Vendor) {
        t.shipped_as[s->order] = s->surface;
      } else if (const auto* h = std::get_if<fact::HoldsAddressOf>(&f);
                 h && v.owner.role == Role::Customer) {
        self_home = h->address;
      }
    }
    if (self_home) {
      t.homes.insert(*self_home);
      for (auto p : self_pseudonyms) t.home_of[p] = *self_home;
    }
  }
  const MovementIndex moves(log);
  for (const auto& [order, surface] : t.shipped_as) {
    const Movement* m = moves.find(t.final_surface(surface));
    if (m && m->arrive_index && m->dst.kind == AddressKind::CustomerHome) {
      t.delivered_to[order] = m->dst;
      t.delivered_homes.insert(m->dst);
    }
  }
  return t;
}

// ---------------------------------------------------------------------------

Round round_of(const RunResult& run, Pseudonym target) {
  Round r;
  r.log = run.observations;
  r.mix_nodes = run.mix_nodes;
  r.route_hops = run.scenario.topology.intermediaries();
  std::set<OrderId> orders;
  for (const auto& v : run.views) {
    if (v.owner.role != Role::Vendor) continue;
    for (const auto& f : v.facts) {
      if (const auto* p = std::get_if<fact::Purchased>(&f); p && p->pseudonym == target) {
        orders.insert(p->order);
      }
    }
    for (const auto& f : v.facts) {
      if (const auto* s = std::get_if<fact::ShippedTo>(&f); s && orders.count(s->order)) {
        r.target_shipments.push_back(s->surface);
      }
    }
  }
  return r;
}

IntersectionResult intersect_candidates(std::vector<std::set<EntityId>> per_round) {
  IntersectionResult out;
  for (std::size_t r = 0; r < per_round.size(); ++r) {
    std::set<EntityId> cum;
    if (r == 0) {
      cum = per_round[0];
    } else {
      std::set_intersection(out.cumulative.back().begin(), out.cumulative.back().end(),
                            per_round[r].begin(), per_round[r].end(),
                            std::inserter(cum, cum.end()));
    }
    if (!out.rounds_to_unique && cum.size() == 1) out.rounds_to_unique = r + 1;
    out.cumulative.push_back(std::move(cum));
  }
  out.per_round = std::move(per_round);
  return out;
}

IntersectionResult intersection_attack(std::span<const Round> rounds, CorrelationMode mode) {
  std::vector<std::set<EntityId>> per_round;
  for (std::size_t r = 0; r < rounds.size(); ++r) {
    const auto& round = rounds[r];
    if (round.target_shipments.empty()) {
      throw InvalidParam("rounds", "target placed no order in round " + std::to_string(r + 1));
    }
    const TrafficAnalysis ta(round.log, round.mix_nodes, mode, round.route_hops);
    std::optional<std::set<EntityId>> cand;
    for (auto s : round.target_shipments) {
      std::set<EntityId> support;
      for (const auto& [addr, p] : ta.link(s).destinations) {
        if (addr.kind == AddressKind::CustomerHome && p > 1e-12) support.insert(addr.entity);
      }
      if (!cand) {
        cand = std::move(support);
      } else {
        std::set<EntityId> both;
        std::set_intersection(cand->begin(), cand->end(), support.begin(), support.end(),
                              std::inserter(both, both.end()));
        cand = std::move(both);
      }
    }
    per_round.push_back(std::move(*cand));
  }
  return intersect_candidates(std::move(per_round));
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<KnowledgeView> select_views(std::span<const KnowledgeView> all, std::string_view set) {
  std::set<Owner> chosen;
  std::size_t start = 0;
  while (start <= set.size()) {
    auto pos = set.find('+', start);
    auto tok = trim(set.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                     : pos - start));
    start = pos == std::string_view::npos ? set.size() + 1 : pos + 1;
    auto colon = tok.find(':');
    auto role = parse_role(tok.substr(0, colon));
    std::optional<std::uint64_t> entity;
    if (colon != std::string_view::npos) {
      const auto num = tok.substr(colon + 1);
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
      if (ec != std::errc{} || ptr != num.data() + num.size()) role.reset();
      entity = v;
    }
    if (!role) {
      throw ValidationError("attacks.collusion_sets",
                            "unknown collusion token '" + std::string(tok) + "'");
    }
    for (const auto& v : all) {
      if (entity && v.owner.entity.value != *entity) continue;
      if (v.owner.role == *role) chosen.insert(v.owner);
      if (*role == Role::Sniffer && v.owner.role == Role::Dpn) {
        // The sniffing site also keeps what it legitimately sees.
        const bool has_sniffer = std::any_of(all.begin(), all.end(), [&](const KnowledgeView& s) {
          return s.owner.role == Role::Sniffer && s.owner.entity == v.owner.entity;
        });
        if (has_sniffer) chosen.insert(v.owner);
      }
    }
  }
  std::vector<KnowledgeView> out;
  for (const auto& v : all) {
    if (chosen.count(v.owner)) out.push_back(v);
  }
  return out;
}

std::vector<KnowledgeView> select_views(const RunResult& run, std::string_view set) {
  std::vector<KnowledgeView> all = run.views;
  all.insert(all.end(), run.sniffed.begin(), run.sniffed.end());
  return select_views(all, set);
}

double CollusionResult::exposed_rate() const {
  if (link_exposed.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& [home, exposed] : link_exposed) n += exposed;
  return static_cast<double>(n) / static_cast<double>(link_exposed.size());
}

namespace {

enum KeyTag : std::uint64_t { kOrder = 1, kSurface, kPseudonym, kHome, kCustomerSelf };

std::uint64_t key(KeyTag tag, std::uint64_t value) { return (std::uint64_t{tag} << 56) | value; }

bool is_home(const Address& a) {
  return a.kind == AddressKind::CustomerHome || a.kind == AddressKind::SecondaryRecipientHome;
}

}  // namespace

CollusionResult collude(std::span<const KnowledgeView> views, const GroundTruth& truth) {
  CollusionResult out;
  out.merged.owner = Owner{Role::Adversary, EntityId{0}};
  std::vector<std::vector<std::uint64_t>> keys;
  for (const auto& v : views) {
    for (const auto& f : v.facts) {
      std::vector<std::uint64_t> k;
      auto home = [&](const Address& a) {
        if (is_home(a)) k.push_back(key(kHome, a.entity.value));
      };
      std::visit(
          [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, fact::Purchased>) {
              k = {key(kPseudonym, x.pseudonym.value), key(kOrder, x.order.value)};
            } else if constexpr (std::is_same_v<T, fact::ShippedTo>) {
              k = {key(kOrder, x.order.value), key(kSurface, x.surface.value)};
              home(x.address);
            } else if constexpr (std::is_same_v<T, fact::HoldsAddressOf>) {
              home(x.address);
            } else if constexpr (std::is_same_v<T, fact::ReceivedGoods>) {
              k = {key(kSurface, x.surface.value)};
            } else if constexpr (std::is_same_v<T, fact::RequestedGoods>) {
              k = {key(kHome, x.recipient.value)};
            } else if constexpr (std::is_same_v<T, fact::ObservedMove>) {
              k = {key(kSurface, x.event.surface.value)};
              home(x.event.src);
              home(x.event.dst);
            } else if constexpr (std::is_same_v<T, fact::Forwarded>) {
              k = {key(kSurface, x.in.value), key(kSurface, x.out.value)};
            } else {
              k = {key(kSurface, x.surface.value)};
              home(x.manifest.final_recipient);
            }
          },
          f);
      // A customer knows everything in its own view at once.
      if (v.owner.role == Role::Customer) k.push_back(key(kCustomerSelf, v.owner.entity.value));
      out.merged.facts.push_back(f);
      keys.push_back(std::move(k));
    }
  }

  const std::size_t n = out.merged.facts.size();
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::unordered_map<std::uint64_t, std::size_t> first;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto k : keys[i]) {
      auto [it, fresh] = first.try_emplace(k, i);
      if (!fresh) {
        auto a = root(i), b = root(it->second);
        if (a != b) parent[a] = b;
      }
    }
  }
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, fresh] = slot.try_emplace(root(i), out.composites.size());
    if (fresh) out.composites.emplace_back();
    out.composites[it->second].push_back(i);
  }

  // Per composite: homes named, and homes whose goods appear.
  std::set<Address> exposed;
  for (const auto& comp : out.composites) {
    std::set<std::uint64_t> homes;
    std::set<Address> goods_of;
    for (auto i : comp) {
      for (auto k : keys[i]) {
        if ((k >> 56) == kHome) homes.insert(k & ((std::uint64_t{1} << 56) - 1));
      }
      const auto& f = out.merged.facts[i];
      if (const auto* p = std::get_if<fact::Purchased>(&f)) {
        auto it = truth.home_of.find(p->pseudonym);
        if (it != truth.home_of.end() && !p->items.empty()) goods_of.insert(it->second);
      } else if (const auto* s = std::get_if<fact::Sniffed>(&f)) {
        if (s->manifest.final_recipient.kind == AddressKind::CustomerHome &&
            !s->manifest.items.empty()) {
          goods_of.insert(s->manifest.final_recipient);
        }
      }
    }
    for (const auto& a : goods_of) {
      if (homes.count(a.entity.value)) exposed.insert(a);
    }
  }
  for (const auto& h : truth.delivered_homes) out.link_exposed[h] = exposed.count(h) > 0;
  return out;
}

}  // namespace pdn
