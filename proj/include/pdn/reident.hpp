#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "pdn/knowledge.hpp"
#include "pdn/rng.hpp"

namespace pdn {

struct TracePoint {
  ItemId item;
  std::int64_t bin = 0;
  friend auto operator<=>(const TracePoint&, const TracePoint&) = default;
};

/// Sorted, duplicate-free set of (item, time bin) points.
using Trace = std::vector<TracePoint>;

Trace make_trace(std::vector<TracePoint> points);

/// One trace per pseudonym from the vendors' Purchased facts, in pseudonym
/// order. Each purchased item contributes (item, floor(time / time_bin)).
std::vector<Trace> purchase_traces(std::span<const KnowledgeView> views, double time_bin);

/// Inverted index from points to the traces containing them.
class TraceIndex {
 public:
  explicit TraceIndex(std::span<const Trace> corpus);

  /// Number of traces containing every point, counting no further than `cap`.
  std::size_t count_containing(std::span<const TracePoint> points,
                               std::size_t cap = SIZE_MAX) const;
  std::span<const Trace> corpus() const { return corpus_; }

 private:
  static std::uint64_t key(const TracePoint& p);
  std::span<const Trace> corpus_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> postings_;
};

/// Fraction of trials in which p points sampled from a random target trace
/// match that trace alone. Trial t draws from rng.split(t): a uniform target,
/// then the first p entries of a uniform permutation of its points, so the
/// sampled sets are nested in p. Throws InvalidParam if p is 0 or exceeds the
/// length of any trace.
double uniqueness_reident(std::span<const Trace> traces, std::size_t p, std::size_t trials,
                          const Rng& rng);
/// Serial reference of uniqueness_reident; identical result.
double uniqueness_reident_serial(std::span<const Trace> traces, std::size_t p,
                                 std::size_t trials, const Rng& rng);

/// Same, but targets are only the traces with at least p points. Returns
/// nullopt when there are none.
std::optional<double> uniqueness_reident_eligible(std::span<const Trace> traces, std::size_t p,
                                                  std::size_t trials, const Rng& rng);

/// Exhaustive sampling: every target equally likely, every p-subset of the
/// target's points equally likely.
double uniqueness_reident_exhaustive(std::span<const Trace> traces, std::size_t p);

/// Sampled fractions for p = 1..p_max using the same trials; non-decreasing.
std::vector<double> uniqueness_curve(std::span<const Trace> traces, std::size_t p_max,
                                     std::size_t trials, const Rng& rng);

}  // namespace pdn
