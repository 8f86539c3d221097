#include "pdn/scenario_io.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pdn/errors.hpp"

namespace pdn {

namespace {

const std::map<std::string, NoiseDraw, std::less<>> kNoiseDraws = {
    {"uniform", NoiseDraw::Uniform}, {"profile", NoiseDraw::Profile}};
const std::map<std::string, DonationRouting, std::less<>> kRoutings = {
    {"via_dpn", DonationRouting::ViaDpn}, {"direct", DonationRouting::Direct}};
const std::map<std::string, CorrelationMode, std::less<>> kModes = {
    {"exact", CorrelationMode::Exact}, {"candidate", CorrelationMode::Candidate}};

template <class Map, class V>
std::string name_of(const Map& m, V v) {
  for (const auto& [k, x] : m) {
    if (x == v) return k;
  }
  return "?";
}

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string where(const YAML::Node& n) {
  const auto m = n.Mark();
  if (m.line < 0) return "";
  return " (line " + std::to_string(m.line + 1) + ")";
}

void require_map(const YAML::Node& n, const std::string& path) {
  if (!n.IsMap()) throw ParseError(path, "expected a mapping" + where(n));
}

// Rejects keys outside `allowed`.
void check_keys(const YAML::Node& n, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
  require_map(n, path);
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) throw ParseError(join(path, key), "unknown key '" + key + "'" + where(kv.first));
  }
}

double number(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) throw ParseError(path, "expected a number" + where(n));
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    throw ParseError(path, "expected a number, got '" + n.Scalar() + "'" + where(n));
  }
}

std::uint64_t count(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) throw ParseError(path, "expected an integer" + where(n));
  std::int64_t v = 0;
  try {
    v = n.as<std::int64_t>();
  } catch (const YAML::Exception&) {
    throw ParseError(path, "expected an integer, got '" + n.Scalar() + "'" + where(n));
  }
  if (v < 0) throw ValidationError(path, "must be >= 0");
  return static_cast<std::uint64_t>(v);
}

std::string text(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) throw ParseError(path, "expected a string" + where(n));
  return n.Scalar();
}

template <class Map>
auto lookup(const Map& m, const YAML::Node& n, const std::string& path) {
  const auto s = text(n, path);
  auto it = m.find(s);
  if (it == m.end()) {
    std::string options;
    for (const auto& [k, v] : m) options += (options.empty() ? "" : ", ") + k;
    throw ValidationError(path, "unknown value '" + s + "' (expected one of: " + options + ")");
  }
  return it->second;
}

// Reads `key` from `node` into `out` with `read` when present.
template <class T, class F>
void opt(const YAML::Node& node, std::string_view key, const std::string& path, T& out, F read) {
  if (auto v = node[std::string(key)]) out = read(v, join(path, key));
}

Distribution parse_distribution(const YAML::Node& n, const std::string& path) {
  require_map(n, path);
  const auto dist_node = n["dist"];
  if (!dist_node) throw ParseError(join(path, "dist"), "missing distribution kind");
  const auto kind = text(dist_node, join(path, "dist"));
  if (kind == "constant") {
    check_keys(n, path, {"dist", "value"});
    Distribution d = Distribution::constant(0.0);
    opt(n, "value", path, d.a, number);
    return d;
  }
  if (kind == "uniform") {
    check_keys(n, path, {"dist", "low", "high"});
    Distribution d = Distribution::uniform(0.0, 1.0);
    opt(n, "low", path, d.a, number);
    opt(n, "high", path, d.b, number);
    return d;
  }
  if (kind == "exponential") {
    check_keys(n, path, {"dist", "mean"});
    Distribution d = Distribution::exponential(1.0);
    opt(n, "mean", path, d.a, number);
    return d;
  }
  throw ValidationError(join(path, "dist"), "unknown distribution '" + kind +
                                                "' (expected constant, uniform or exponential)");
}

MixPolicy parse_mix(const YAML::Node& n, const std::string& path) {
  require_map(n, path);
  const std::string kind = n["kind"] ? text(n["kind"], join(path, "kind")) : "threshold";
  if (kind == "threshold") {
    check_keys(n, path, {"kind", "X"});
    ThresholdMix m{4};
    if (auto x = n["X"]) m.x = static_cast<unsigned>(count(x, join(path, "X")));
    return m;
  }
  if (kind == "timed") {
    check_keys(n, path, {"kind", "delay"});
    TimedMix m{Distribution::exponential(1.0)};
    if (auto d = n["delay"]) m.delay = parse_distribution(d, join(path, "delay"));
    return m;
  }
  if (kind == "pool") {
    check_keys(n, path, {"kind", "pool_min", "flush_prob"});
    PoolMix m{2, 0.5};
    if (auto x = n["pool_min"]) m.pool_min = static_cast<unsigned>(count(x, join(path, "pool_min")));
    opt(n, "flush_prob", path, m.flush_prob, number);
    return m;
  }
  throw ValidationError(join(path, "kind"),
                        "unknown mix kind '" + kind + "' (expected threshold, timed or pool)");
}

Scenario from_document(const YAML::Node& root) {
  Scenario s;
  if (!root || root.IsNull()) {
    validate(s);
    return s;
  }
  check_keys(root, "",
             {"topology", "counts", "catalog", "profile", "secondary", "mix", "common_class",
              "latency", "cost", "donation_routing", "horizon", "seed", "attacks"});

  if (auto t = root["topology"]) {
    check_keys(t, "topology", {"kind", "k"});
    if (auto k = t["kind"]) {
      const auto name = text(k, "topology.kind");
      auto kind = parse_topology_kind(name);
      if (!kind) {
        throw ValidationError("topology.kind", "unknown topology '" + name +
                                                   "' (expected conventional, dpn, dpn_pman "
                                                   "or dpdn)");
      }
      s.topology.kind = *kind;
    }
    if (auto k = t["k"]) {
      s.topology.hops = static_cast<unsigned>(count(k, "topology.k"));
    } else {
      s.topology.hops = s.topology.kind == Topology::Kind::Conventional ? 0 : 1;
    }
  }
  if (auto c = root["counts"]) {
    check_keys(c, "counts",
               {"customers", "vendors", "dpn_sites", "pman_sites", "secondary_recipients"});
    opt(c, "customers", "counts", s.counts.customers, count);
    opt(c, "vendors", "counts", s.counts.vendors, count);
    opt(c, "dpn_sites", "counts", s.counts.dpn_sites, count);
    opt(c, "pman_sites", "counts", s.counts.pman_sites, count);
    opt(c, "secondary_recipients", "counts", s.counts.secondary_recipients, count);
  }
  if (auto c = root["catalog"]) {
    check_keys(c, "catalog", {"n", "zipf_s"});
    opt(c, "n", "catalog", s.catalog_n, count);
    opt(c, "zipf_s", "catalog", s.catalog_zipf_s, number);
  }
  if (auto p = root["profile"]) {
    check_keys(p, "profile",
               {"sparsity_k", "order_rate", "noise_budget", "items_per_order", "noise_draw"});
    opt(p, "sparsity_k", "profile", s.profile.sparsity_k, count);
    opt(p, "order_rate", "profile", s.profile.order_rate, number);
    if (auto b = p["noise_budget"]) {
      s.profile.noise_budget = static_cast<unsigned>(count(b, "profile.noise_budget"));
    }
    opt(p, "items_per_order", "profile", s.items_per_order, count);
    if (auto d = p["noise_draw"]) s.noise_draw = lookup(kNoiseDraws, d, "profile.noise_draw");
  }
  if (auto p = root["secondary"]) {
    check_keys(p, "secondary", {"request_rate", "items_per_request"});
    opt(p, "request_rate", "secondary", s.request_rate, number);
    opt(p, "items_per_request", "secondary", s.items_per_request, count);
  }
  if (auto m = root["mix"]) s.mix = parse_mix(m, "mix");
  if (auto c = root["common_class"]) {
    const auto name = text(c, "common_class");
    auto sc = parse_size_class(name);
    if (!sc) throw ValidationError("common_class", "unknown size class '" + name + "'");
    s.common_class = *sc;
  }
  if (auto l = root["latency"]) s.latency = parse_distribution(l, "latency");
  if (auto c = root["cost"]) {
    check_keys(c, "cost", {"per_hop", "per_rewrap"});
    opt(c, "per_hop", "cost", s.cost.per_hop, number);
    opt(c, "per_rewrap", "cost", s.cost.per_rewrap, number);
  }
  if (auto d = root["donation_routing"]) {
    s.donation_routing = lookup(kRoutings, d, "donation_routing");
  }
  opt(root, "horizon", "", s.horizon, number);
  opt(root, "seed", "", s.seed, count);
  if (auto a = root["attacks"]) {
    check_keys(a, "attacks", {"correlation_mode", "collusion_sets", "reident"});
    if (auto m = a["correlation_mode"]) {
      s.attacks.correlation_mode = lookup(kModes, m, "attacks.correlation_mode");
    }
    if (auto sets = a["collusion_sets"]) {
      if (!sets.IsSequence()) {
        throw ParseError("attacks.collusion_sets", "expected a list" + where(sets));
      }
      for (std::size_t i = 0; i < sets.size(); ++i) {
        s.attacks.collusion_sets.push_back(
            text(sets[i], "attacks.collusion_sets[" + std::to_string(i) + "]"));
      }
    }
    if (auto r = a["reident"]) {
      check_keys(r, "attacks.reident", {"p", "trials", "time_bin"});
      opt(r, "p", "attacks.reident", s.attacks.reident.p, count);
      opt(r, "trials", "attacks.reident", s.attacks.reident.trials, count);
      opt(r, "time_bin", "attacks.reident", s.attacks.reident.time_bin, number);
    }
  }
  validate(s);
  return s;
}

}  // namespace

Scenario parse_scenario_text(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ParseError("", std::string("malformed YAML: ") + e.what());
  }
  try {
    return from_document(root);
  } catch (const YAML::Exception& e) {
    throw ParseError("", std::string("malformed scenario: ") + e.what());
  }
}

Scenario parse_scenario(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError(file.string(), "cannot read scenario file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

namespace {

std::string num(double v) { return format_time(v); }

std::string dist_fields(const Distribution& d) {
  switch (d.kind) {
    case Distribution::Kind::Constant: return "{dist: constant, value: " + num(d.a) + "}";
    case Distribution::Kind::Uniform:
      return "{dist: uniform, low: " + num(d.a) + ", high: " + num(d.b) + "}";
    case Distribution::Kind::Exponential: return "{dist: exponential, mean: " + num(d.a) + "}";
  }
  return "{}";
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string dump_scenario(const Scenario& s) {
  std::ostringstream o;
  o << "topology: {kind: " << to_string(s.topology.kind) << ", k: " << s.topology.hops << "}\n";
  o << "counts: {customers: " << s.counts.customers << ", vendors: " << s.counts.vendors
    << ", dpn_sites: " << s.counts.dpn_sites << ", pman_sites: " << s.counts.pman_sites
    << ", secondary_recipients: " << s.counts.secondary_recipients << "}\n";
  o << "catalog: {n: " << s.catalog_n << ", zipf_s: " << num(s.catalog_zipf_s) << "}\n";
  o << "profile: {sparsity_k: " << s.profile.sparsity_k
    << ", order_rate: " << num(s.profile.order_rate)
    << ", noise_budget: " << s.profile.noise_budget << ", items_per_order: " << s.items_per_order
    << ", noise_draw: " << name_of(kNoiseDraws, s.noise_draw) << "}\n";
  o << "secondary: {request_rate: " << num(s.request_rate)
    << ", items_per_request: " << s.items_per_request << "}\n";
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ThresholdMix>) {
          o << "mix: {kind: threshold, X: " << m.x << "}\n";
        } else if constexpr (std::is_same_v<T, TimedMix>) {
          o << "mix: {kind: timed, delay: " << dist_fields(m.delay) << "}\n";
        } else {
          o << "mix: {kind: pool, pool_min: " << m.pool_min
            << ", flush_prob: " << num(m.flush_prob) << "}\n";
        }
      },
      s.mix);
  o << "common_class: " << to_string(s.common_class) << "\n";
  o << "latency: " << dist_fields(s.latency) << "\n";
  o << "cost: {per_hop: " << num(s.cost.per_hop) << ", per_rewrap: " << num(s.cost.per_rewrap)
    << "}\n";
  o << "donation_routing: " << name_of(kRoutings, s.donation_routing) << "\n";
  o << "horizon: " << num(s.horizon) << "\n";
  o << "seed: " << s.seed << "\n";
  o << "attacks:\n";
  o << "  correlation_mode: " << name_of(kModes, s.attacks.correlation_mode) << "\n";
  o << "  collusion_sets: [";
  for (std::size_t i = 0; i < s.attacks.collusion_sets.size(); ++i) {
    o << (i ? ", " : "") << quoted(s.attacks.collusion_sets[i]);
  }
  o << "]\n";
  o << "  reident: {p: " << s.attacks.reident.p << ", trials: " << s.attacks.reident.trials
    << ", time_bin: " << num(s.attacks.reident.time_bin) << "}\n";
  return o.str();
}

namespace {

template <class T>
void set_integer(T& field, std::string_view key, double value) {
  if (!(value >= 0) || std::floor(value) != value || value > 1e15) {
    throw InvalidParam(std::string(key), "needs a nonnegative integer, got " + format_time(value));
  }
  field = static_cast<T>(value);
}

}  // namespace

void apply_knob(Scenario& s, std::string_view key, double value) {
  using Setter = std::function<bool(Scenario&, double)>;
  auto integer = [&](auto member) {
    return Setter([member, key](Scenario& sc, double v) {
      set_integer(member(sc), key, v);
      return true;
    });
  };
  auto real = [](auto member) {
    return Setter([member](Scenario& sc, double v) {
      member(sc) = v;
      return true;
    });
  };
  auto dist_param = [](Distribution& d, std::string_view param, double v) {
    using K = Distribution::Kind;
    if (param == "value" && d.kind == K::Constant) d.a = v;
    else if (param == "low" && d.kind == K::Uniform) d.a = v;
    else if (param == "high" && d.kind == K::Uniform) d.b = v;
    else if (param == "mean" && d.kind == K::Exponential) d.a = v;
    else return false;
    return true;
  };

  const std::map<std::string_view, Setter> setters = {
      {"topology.k", integer([](Scenario& x) -> auto& { return x.topology.hops; })},
      {"counts.customers", integer([](Scenario& x) -> auto& { return x.counts.customers; })},
      {"counts.vendors", integer([](Scenario& x) -> auto& { return x.counts.vendors; })},
      {"counts.dpn_sites", integer([](Scenario& x) -> auto& { return x.counts.dpn_sites; })},
      {"counts.pman_sites", integer([](Scenario& x) -> auto& { return x.counts.pman_sites; })},
      {"counts.secondary_recipients",
       integer([](Scenario& x) -> auto& { return x.counts.secondary_recipients; })},
      {"catalog.n", integer([](Scenario& x) -> auto& { return x.catalog_n; })},
      {"catalog.zipf_s", real([](Scenario& x) -> auto& { return x.catalog_zipf_s; })},
      {"profile.sparsity_k", integer([](Scenario& x) -> auto& { return x.profile.sparsity_k; })},
      {"profile.order_rate", real([](Scenario& x) -> auto& { return x.profile.order_rate; })},
      {"profile.noise_budget",
       integer([](Scenario& x) -> auto& { return x.profile.noise_budget; })},
      {"profile.items_per_order", integer([](Scenario& x) -> auto& { return x.items_per_order; })},
      {"secondary.request_rate", real([](Scenario& x) -> auto& { return x.request_rate; })},
      {"secondary.items_per_request",
       integer([](Scenario& x) -> auto& { return x.items_per_request; })},
      {"cost.per_hop", real([](Scenario& x) -> auto& { return x.cost.per_hop; })},
      {"cost.per_rewrap", real([](Scenario& x) -> auto& { return x.cost.per_rewrap; })},
      {"horizon", real([](Scenario& x) -> auto& { return x.horizon; })},
      {"seed", integer([](Scenario& x) -> auto& { return x.seed; })},
      {"attacks.reident.p", integer([](Scenario& x) -> auto& { return x.attacks.reident.p; })},
      {"attacks.reident.trials",
       integer([](Scenario& x) -> auto& { return x.attacks.reident.trials; })},
      {"attacks.reident.time_bin",
       real([](Scenario& x) -> auto& { return x.attacks.reident.time_bin; })},
      {"mix.X", [&](Scenario& x, double v) {
         auto* m = std::get_if<ThresholdMix>(&x.mix);
         if (m) set_integer(m->x, key, v);
         return m != nullptr;
       }},
      {"mix.pool_min", [&](Scenario& x, double v) {
         auto* m = std::get_if<PoolMix>(&x.mix);
         if (m) set_integer(m->pool_min, key, v);
         return m != nullptr;
       }},
      {"mix.flush_prob", [](Scenario& x, double v) {
         auto* m = std::get_if<PoolMix>(&x.mix);
         if (m) m->flush_prob = v;
         return m != nullptr;
       }},
  };

  bool applied = false;
  if (auto it = setters.find(key); it != setters.end()) {
    applied = it->second(s, value);
  } else if (key.starts_with("latency.")) {
    applied = dist_param(s.latency, key.substr(8), value);
  } else if (key.starts_with("mix.delay.")) {
    if (auto* m = std::get_if<TimedMix>(&s.mix)) applied = dist_param(m->delay, key.substr(10), value);
  }
  if (!applied) {
    throw UnknownKnob(std::string(key), "not a numeric field of this scenario");
  }
}

void apply_env_overrides(Scenario& s) {
  const char* env = std::getenv("SIM_SEED");
  if (!env) return;
  const std::string_view text(env);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError("SIM_SEED", "expected an unsigned integer, got '" + std::string(text) + "'");
  }
  s.seed = v;
}

}  // namespace pdn
