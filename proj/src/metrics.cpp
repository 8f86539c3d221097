#include "pdn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdn/errors.hpp"
#include "pdn/reident.hpp"

namespace pdn {

double shannon_bits(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double w : weights) {
    if (w <= 0.0) continue;
    const double p = w / total;
    h -= p * std::log2(p);
  }
  return h <= 0.0 ? 0.0 : h;
}

namespace {

const PackagePosterior& target_of(const Posterior& posterior, SurfaceId target) {
  const auto* pkg = posterior.find(target);
  if (!pkg) {
    throw UnknownTarget("parcel " + std::to_string(target.value) + " left no trace at node " +
                        std::to_string(posterior.node.value));
  }
  return *pkg;
}

std::vector<double> weights_of(const PackagePosterior& pkg) {
  std::vector<double> w;
  for (const auto& c : pkg.candidates) w.push_back(c.weight);
  return w;
}

struct Accumulator {
  std::size_t n = 0;
  double sum = 0.0;
  double min = std::numeric_limits<double>::infinity();

  void add(double x) {
    ++n;
    sum += x;
    min = std::min(min, x);
  }
  Stat mean() const { return n ? Stat(sum / static_cast<double>(n)) : std::nullopt; }
  Stat minimum() const { return n ? Stat(min) : std::nullopt; }
};

}  // namespace

std::size_t anonymity_set_size(const Posterior& posterior, SurfaceId target) {
  return target_of(posterior, target).candidates.size();
}

double linkage_entropy(const Posterior& posterior, SurfaceId target) {
  return shannon_bits(weights_of(target_of(posterior, target)));
}

std::size_t anonymity_set_size(const Linkage& linkage) {
  return static_cast<std::size_t>(std::count_if(linkage.destinations.begin(),
                                                linkage.destinations.end(),
                                                [](const auto& d) { return d.second > 1e-12; }));
}

double linkage_entropy(const Linkage& linkage) {
  std::vector<double> w;
  for (const auto& d : linkage.destinations) w.push_back(d.second);
  return shannon_bits(w);
}

Stat quantile(std::vector<double> samples, double q) {
  if (samples.empty()) return std::nullopt;
  std::sort(samples.begin(), samples.end());
  const double pos = q * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, samples.size() - 1);
  return samples[lo] + (pos - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

PrivacyReport assess_privacy(const ObservationLog& log, std::span<const KnowledgeView> views,
                             std::span<const MixNodeInfo> mix_nodes,
                             std::optional<std::size_t> route_hops, const AttackConfig& attacks,
                             const Rng& rng) {
  PrivacyReport out;
  const GroundTruth truth = derive_truth(views, log);
  const TrafficAnalysis ta(log, mix_nodes, attacks.correlation_mode, route_hops);

  Accumulator anon, entropy, hits;
  for (const auto& post : ta.posteriors()) {
    for (const auto& epoch : post.epochs) {
      for (const auto& pkg : epoch.packages) {
        auto it = truth.came_from.find(pkg.outbound.value);
        if (it == truth.came_from.end()) continue;
        anon.add(static_cast<double>(pkg.candidates.size()));
        entropy.add(shannon_bits(weights_of(pkg)));
        hits.add(pkg.map_guess == it->second ? 1.0 : 0.0);
      }
    }
  }
  out.packages = anon.n;
  out.anon_mean = anon.mean();
  out.anon_min = anon.minimum();
  out.entropy_mean = entropy.mean();
  out.map_accuracy = hits.mean();

  Accumulator o_anon, o_entropy, o_hits;
  for (const auto& [order, home] : truth.delivered_to) {
    const Linkage link = ta.link(truth.shipped_as.at(order));
    if (link.reached <= 0.0) continue;
    o_anon.add(static_cast<double>(anonymity_set_size(link)));
    o_entropy.add(linkage_entropy(link));
    o_hits.add(link.map_guess() == home ? 1.0 : 0.0);
  }
  out.orders = o_anon.n;
  out.order_anon_mean = o_anon.mean();
  out.order_anon_min = o_anon.minimum();
  out.order_entropy_mean = o_entropy.mean();
  out.order_map_accuracy = o_hits.mean();

  const auto traces = purchase_traces(views, attacks.reident.time_bin);
  out.reident_fraction =
      uniqueness_reident_eligible(traces, attacks.reident.p, attacks.reident.trials, rng);

  for (const auto& set : attacks.collusion_sets) {
    const auto chosen = select_views(views, set);
    out.link_exposed.emplace_back(set, collude(chosen, truth).exposed_rate());
  }
  return out;
}

EfficiencyReport assess_efficiency(const RunResult& run) {
  EfficiencyReport out;
  std::vector<double> latency;
  Accumulator cost, hops;
  for (const auto& d : run.deliveries) {
    if (auto l = d.latency()) {
      latency.push_back(*l);
      cost.add(d.cost);
      hops.add(d.hops);
    } else if (d.placed_at < run.scenario.horizon) {
      ++out.truncated;
    }
  }
  out.delivered = latency.size();
  Accumulator lat;
  for (double l : latency) lat.add(l);
  out.latency_mean = lat.mean();
  out.latency_p50 = quantile(latency, 0.50);
  out.latency_p95 = quantile(latency, 0.95);
  out.cost_mean = cost.mean();
  out.hops_mean = hops.mean();
  out.redistributed = run.goods.redistributed;
  out.donated = run.goods.donated;
  out.pman_residual = run.goods.pman_residual;
  out.overhead_cost = run.overhead_cost;
  return out;
}

Summary summarize(const RunResult& run, const AttackConfig& attacks) {
  std::vector<KnowledgeView> views = run.views;
  views.insert(views.end(), run.sniffed.begin(), run.sniffed.end());
  Summary s;
  s.privacy = assess_privacy(run.observations, views, run.mix_nodes,
                             run.scenario.topology.intermediaries(), attacks,
                             Rng(run.scenario.seed).split("reident"));
  s.efficiency = assess_efficiency(run);
  return s;
}

std::string format_stat(const Stat& s) { return s ? format_time(*s) : std::string("NA"); }

std::vector<std::pair<std::string, std::string>> summary_rows(const Summary& s) {
  const auto& p = s.privacy;
  const auto& e = s.efficiency;
  std::vector<std::pair<std::string, std::string>> rows = {
      {"packages", std::to_string(p.packages)},
      {"anon_mean", format_stat(p.anon_mean)},
      {"anon_min", format_stat(p.anon_min)},
      {"entropy_mean", format_stat(p.entropy_mean)},
      {"map_accuracy", format_stat(p.map_accuracy)},
      {"orders", std::to_string(p.orders)},
      {"order_anon_mean", format_stat(p.order_anon_mean)},
      {"order_anon_min", format_stat(p.order_anon_min)},
      {"order_entropy_mean", format_stat(p.order_entropy_mean)},
      {"order_map_accuracy", format_stat(p.order_map_accuracy)},
      {"reident_fraction", format_stat(p.reident_fraction)},
  };
  for (const auto& [set, rate] : p.link_exposed) {
    rows.emplace_back("link_exposed[" + set + "]", format_time(rate));
  }
  const std::vector<std::pair<std::string, std::string>> eff = {
      {"delivered", std::to_string(e.delivered)},
      {"truncated", std::to_string(e.truncated)},
      {"latency_mean", format_stat(e.latency_mean)},
      {"latency_p50", format_stat(e.latency_p50)},
      {"latency_p95", format_stat(e.latency_p95)},
      {"cost_mean", format_stat(e.cost_mean)},
      {"hops_mean", format_stat(e.hops_mean)},
      {"redistributed", std::to_string(e.redistributed)},
      {"donated", std::to_string(e.donated)},
      {"pman_residual", std::to_string(e.pman_residual)},
      {"overhead_cost", format_time(e.overhead_cost)},
  };
  rows.insert(rows.end(), eff.begin(), eff.end());
  return rows;
}

std::vector<FrontierRow> frontier(std::vector<FrontierRow> points) {
  if (points.size() < 2) throw InvalidParam("values", "a frontier needs at least 2 sweep points");
  std::stable_sort(points.begin(), points.end(),
                   [](const FrontierRow& a, const FrontierRow& b) { return a.knob < b.knob; });
  return points;
}

std::string frontier_header() {
  return "knob,packages,anon_mean,anon_min,entropy_mean,map_accuracy,order_entropy_mean,"
         "order_map_accuracy,reident_fraction,delivered,truncated,latency_mean,latency_p50,"
         "latency_p95,cost_mean,hops_mean,redistributed,overhead_cost";
}

std::string frontier_line(const FrontierRow& row) {
  const auto& p = row.summary.privacy;
  const auto& e = row.summary.efficiency;
  std::string out = format_time(row.knob);
  for (const std::string& cell :
       {std::to_string(p.packages), format_stat(p.anon_mean), format_stat(p.anon_min),
        format_stat(p.entropy_mean), format_stat(p.map_accuracy),
        format_stat(p.order_entropy_mean), format_stat(p.order_map_accuracy),
        format_stat(p.reident_fraction), std::to_string(e.delivered), std::to_string(e.truncated),
        format_stat(e.latency_mean), format_stat(e.latency_p50), format_stat(e.latency_p95),
        format_stat(e.cost_mean), format_stat(e.hops_mean), std::to_string(e.redistributed),
        format_time(e.overhead_cost)}) {
    out += ',';
    out += cell;
  }
  return out;
}

}  // namespace pdn
