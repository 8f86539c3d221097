#include "pdn/reident.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "pdn/errors.hpp"

namespace pdn {

Trace make_trace(std::vector<TracePoint> points) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  return points;
}

std::vector<Trace> purchase_traces(std::span<const KnowledgeView> views, double time_bin) {
  if (!(time_bin > 0)) throw InvalidParam("attacks.reident.time_bin", "must be > 0");
  std::map<Pseudonym, std::vector<TracePoint>> points;
  for (const auto& v : views) {
    if (v.owner.role != Role::Vendor) continue;
    for (const auto& f : v.facts) {
      const auto* p = std::get_if<fact::Purchased>(&f);
      if (!p) continue;
      const auto bin = static_cast<std::int64_t>(std::floor(p->time / time_bin));
      auto& dst = points[p->pseudonym];
      for (auto item : p->items) dst.push_back(TracePoint{item, bin});
    }
  }
  std::vector<Trace> out;
  out.reserve(points.size());
  for (auto& [pseudo, pts] : points) out.push_back(make_trace(std::move(pts)));
  return out;
}

std::uint64_t TraceIndex::key(const TracePoint& p) {
  return splitmix64(p.item.value * 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(p.bin));
}

TraceIndex::TraceIndex(std::span<const Trace> corpus) : corpus_(corpus) {
  for (std::size_t t = 0; t < corpus.size(); ++t) {
    for (const auto& p : corpus[t]) postings_[key(p)].push_back(static_cast<std::uint32_t>(t));
  }
}

std::size_t TraceIndex::count_containing(std::span<const TracePoint> points,
                                         std::size_t cap) const {
  if (points.empty()) return std::min(corpus_.size(), cap);
  // Hash collisions only widen the candidate list; membership is rechecked.
  const std::vector<std::uint32_t>* shortest = nullptr;
  for (const auto& p : points) {
    auto it = postings_.find(key(p));
    if (it == postings_.end()) return 0;
    if (!shortest || it->second.size() < shortest->size()) shortest = &it->second;
  }
  std::size_t count = 0;
  std::uint32_t last = UINT32_MAX;
  for (auto t : *shortest) {
    if (t == last) continue;
    last = t;
    const auto& trace = corpus_[t];
    const bool all = std::all_of(points.begin(), points.end(), [&](const TracePoint& p) {
      return std::binary_search(trace.begin(), trace.end(), p);
    });
    if (all && ++count >= cap) break;
  }
  return count;
}

namespace {

void check_p(std::span<const Trace> traces, std::size_t p) {
  if (p == 0) throw InvalidParam("attacks.reident.p", "must be >= 1");
  for (std::size_t t = 0; t < traces.size(); ++t) {
    if (traces[t].size() < p) {
      throw InvalidParam("attacks.reident.p", "p = " + std::to_string(p) + " exceeds the " +
                                                  std::to_string(traces[t].size()) +
                                                  " points of trace " + std::to_string(t));
    }
  }
}

// Forward partial Fisher-Yates: the first k draws fix the first k entries, so
// samples for smaller p are prefixes of samples for larger p.
void sample_prefix(const Trace& target, std::size_t p, Rng& rng, std::vector<std::size_t>& order,
                   std::vector<TracePoint>& out) {
  order.resize(target.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  out.clear();
  for (std::size_t i = 0; i < p; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(order.size() - i));
    std::swap(order[i], order[j]);
    out.push_back(target[order[i]]);
  }
}

bool trial_unique(const TraceIndex& index, std::span<const std::size_t> targets, std::size_t p,
                  const Rng& rng, std::size_t trial, std::vector<std::size_t>& order,
                  std::vector<TracePoint>& sample) {
  Rng r = rng.split(static_cast<std::uint64_t>(trial));
  const auto& target = index.corpus()[targets[r.below(targets.size())]];
  sample_prefix(target, p, r, order, sample);
  return index.count_containing(sample, 2) == 1;
}

double run_trials(std::span<const Trace> traces, std::span<const std::size_t> targets,
                  std::size_t p, std::size_t trials, const Rng& rng, bool parallel) {
  if (trials == 0) throw InvalidParam("attacks.reident.trials", "must be >= 1");
  const TraceIndex index(traces);
  std::size_t unique = 0;
  const auto n = static_cast<std::ptrdiff_t>(trials);
  if (parallel) {
#pragma omp parallel reduction(+ : unique)
    {
      std::vector<std::size_t> order;
      std::vector<TracePoint> sample;
#pragma omp for schedule(static)
      for (std::ptrdiff_t t = 0; t < n; ++t) {
        unique += trial_unique(index, targets, p, rng, static_cast<std::size_t>(t), order, sample);
      }
    }
  } else {
    std::vector<std::size_t> order;
    std::vector<TracePoint> sample;
    for (std::ptrdiff_t t = 0; t < n; ++t) {
      unique += trial_unique(index, targets, p, rng, static_cast<std::size_t>(t), order, sample);
    }
  }
  return static_cast<double>(unique) / static_cast<double>(trials);
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

double uniqueness_reident(std::span<const Trace> traces, std::size_t p, std::size_t trials,
                          const Rng& rng) {
  check_p(traces, p);
  if (traces.empty()) throw InvalidParam("traces", "no traces to sample from");
  return run_trials(traces, all_indices(traces.size()), p, trials, rng, true);
}

double uniqueness_reident_serial(std::span<const Trace> traces, std::size_t p,
                                 std::size_t trials, const Rng& rng) {
  check_p(traces, p);
  if (traces.empty()) throw InvalidParam("traces", "no traces to sample from");
  return run_trials(traces, all_indices(traces.size()), p, trials, rng, false);
}

std::optional<double> uniqueness_reident_eligible(std::span<const Trace> traces, std::size_t p,
                                                  std::size_t trials, const Rng& rng) {
  if (p == 0) throw InvalidParam("attacks.reident.p", "must be >= 1");
  std::vector<std::size_t> targets;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    if (traces[t].size() >= p) targets.push_back(t);
  }
  if (targets.empty()) return std::nullopt;
  return run_trials(traces, targets, p, trials, rng, true);
}

double uniqueness_reident_exhaustive(std::span<const Trace> traces, std::size_t p) {
  check_p(traces, p);
  if (traces.empty()) throw InvalidParam("traces", "no traces to sample from");
  const TraceIndex index(traces);
  double total = 0.0;
  std::vector<TracePoint> sample(p);
  for (const auto& target : traces) {
    // Walk every p-combination of the target's points via a selection mask.
    std::vector<bool> pick(target.size(), false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(p), true);
    std::size_t subsets = 0;
    std::size_t unique = 0;
    do {
      sample.clear();
      for (std::size_t i = 0; i < target.size(); ++i) {
        if (pick[i]) sample.push_back(target[i]);
      }
      ++subsets;
      unique += index.count_containing(sample, 2) == 1;
    } while (std::prev_permutation(pick.begin(), pick.end()));
    total += static_cast<double>(unique) / static_cast<double>(subsets);
  }
  return total / static_cast<double>(traces.size());
}

std::vector<double> uniqueness_curve(std::span<const Trace> traces, std::size_t p_max,
                                     std::size_t trials, const Rng& rng) {
  std::vector<double> out;
  for (std::size_t p = 1; p <= p_max; ++p) out.push_back(uniqueness_reident(traces, p, trials, rng));
  return out;
}

}  // namespace pdn
