#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "pdn/errors.hpp"
#include "pdn/reident.hpp"

using namespace pdn;

namespace {

Trace trace(std::initializer_list<std::pair<std::uint64_t, std::int64_t>> pts) {
  std::vector<TracePoint> v;
  for (auto [i, b] : pts) v.push_back({ItemId{i}, b});
  return make_trace(v);
}

// Four traces with deliberate overlaps.
std::vector<Trace> four_traces() {
  return {
      trace({{1, 0}, {2, 0}, {3, 1}}),
      trace({{1, 0}, {2, 0}, {4, 1}}),
      trace({{1, 0}, {3, 1}, {5, 2}}),
      trace({{2, 0}, {3, 1}, {4, 1}, {6, 3}}),
  };
}

// Oracle: average over targets of the fraction of the target's p-subsets
// that no other trace contains, by direct subset enumeration and scanning.
double enumerate_fraction(const std::vector<Trace>& corpus, std::size_t p) {
  double total = 0;
  for (const auto& t : corpus) {
    std::vector<bool> pick(t.size(), false);
    std::fill(pick.begin(), pick.begin() + p, true);
    std::size_t subsets = 0, unique = 0;
    do {
      std::vector<TracePoint> sel;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (pick[i]) sel.push_back(t[i]);
      }
      std::size_t holders = 0;
      for (const auto& other : corpus) {
        holders += std::all_of(sel.begin(), sel.end(), [&](const TracePoint& x) {
          return std::find(other.begin(), other.end(), x) != other.end();
        });
      }
      ++subsets;
      unique += holders == 1;
    } while (std::prev_permutation(pick.begin(), pick.end()));
    total += static_cast<double>(unique) / static_cast<double>(subsets);
  }
  return total / static_cast<double>(corpus.size());
}

std::vector<Trace> synthetic(std::size_t n, std::size_t catalog, std::size_t len, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<Trace> out;
  std::uniform_int_distribution<std::uint64_t> item(1, catalog);
  std::uniform_int_distribution<std::int64_t> bin(0, 4);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<TracePoint> pts;
    while (make_trace(pts).size() < len) pts.push_back({ItemId{item(gen)}, bin(gen)});
    out.push_back(make_trace(pts));
  }
  return out;
}

}  // namespace

TEST(Trace, SortedAndDeduplicated) {
  const Trace t = trace({{3, 1}, {1, 0}, {3, 1}, {1, 2}});
  EXPECT_EQ(t.size(), 3u);
  EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
}

TEST(Trace, FromPurchaseFacts) {
  KnowledgeView vendor{{Role::Vendor, EntityId{1}}, {}};
  vendor.facts.push_back(fact::Purchased{Pseudonym{7}, {ItemId{1}, ItemId{2}}, OrderId{0}, 3.0});
  vendor.facts.push_back(fact::Purchased{Pseudonym{5}, {ItemId{1}}, OrderId{1}, 12.0});
  vendor.facts.push_back(fact::Purchased{Pseudonym{7}, {ItemId{1}}, OrderId{2}, 9.9});
  KnowledgeView customer{{Role::Customer, EntityId{9}}, {}};
  customer.facts.push_back(fact::Purchased{Pseudonym{7}, {ItemId{8}}, OrderId{0}, 3.0});
  const std::vector<KnowledgeView> views{vendor, customer};
  const auto traces = purchase_traces(views, 10.0);
  ASSERT_EQ(traces.size(), 2u);
  EXPECT_EQ(traces[0], trace({{1, 1}}));          // pseudonym 5
  EXPECT_EQ(traces[1], trace({{1, 0}, {2, 0}}));  // pseudonym 7, deduplicated
}

TEST(TraceIndex, CountsWithCap) {
  const auto corpus = four_traces();
  const TraceIndex idx(corpus);
  const std::vector<TracePoint> a{{ItemId{1}, 0}};
  EXPECT_EQ(idx.count_containing(a), 3u);
  EXPECT_EQ(idx.count_containing(a, 2), 2u);
  const std::vector<TracePoint> b{{ItemId{1}, 0}, {ItemId{2}, 0}};
  EXPECT_EQ(idx.count_containing(b), 2u);
  const std::vector<TracePoint> c{{ItemId{6}, 3}};
  EXPECT_EQ(idx.count_containing(c), 1u);
  const std::vector<TracePoint> d{{ItemId{9}, 9}};
  EXPECT_EQ(idx.count_containing(d), 0u);
}

TEST(Reident, ExhaustiveMatchesEnumeration) {
  const auto corpus = four_traces();
  for (std::size_t p = 1; p <= 3; ++p) {
    EXPECT_DOUBLE_EQ(uniqueness_reident_exhaustive(corpus, p), enumerate_fraction(corpus, p))
        << "p=" << p;
  }
  // Hand count for p=2: trace 0 has no unique pair, trace 1 has 1 of 3 (ad),
  // trace 2 has 2 of 3 (ae, ce), trace 3 has 4 of 6 (bf, cd, cf, df).
  EXPECT_NEAR(uniqueness_reident_exhaustive(corpus, 2), 5.0 / 12.0, 1e-15);
  EXPECT_NEAR(enumerate_fraction(corpus, 2), 5.0 / 12.0, 1e-15);
}

TEST(Reident, SampledConvergesToExhaustive) {
  const auto corpus = four_traces();
  const std::size_t trials = 20000;
  const double f = uniqueness_reident(corpus, 2, trials, Rng(3));
  const double e = enumerate_fraction(corpus, 2);
  EXPECT_NEAR(f, e, 3 * std::sqrt(e * (1 - e) / trials));
}

TEST(Reident, SingleTraceIsAlwaysUnique) {
  const std::vector<Trace> one{trace({{1, 0}, {2, 0}})};
  EXPECT_EQ(uniqueness_reident(one, 1, 100, Rng(1)), 1.0);
  EXPECT_EQ(uniqueness_reident_exhaustive(one, 2), 1.0);
}

TEST(Reident, IdenticalTracesNeverUnique) {
  const std::vector<Trace> two{trace({{1, 0}, {2, 0}}), trace({{1, 0}, {2, 0}})};
  EXPECT_EQ(uniqueness_reident(two, 2, 100, Rng(1)), 0.0);
  EXPECT_EQ(uniqueness_reident_exhaustive(two, 1), 0.0);
}

TEST(Reident, InvalidParameters) {
  const auto corpus = four_traces();
  EXPECT_THROW(uniqueness_reident(corpus, 0, 10, Rng(1)), InvalidParam);
  EXPECT_THROW(uniqueness_reident(corpus, 4, 10, Rng(1)), InvalidParam);  // trace 0 has 3
  EXPECT_THROW(uniqueness_reident({}, 1, 10, Rng(1)), InvalidParam);
  EXPECT_EQ(uniqueness_reident_eligible(corpus, 4, 10, Rng(1)), 1.0);  // only trace 3 qualifies
  EXPECT_FALSE(uniqueness_reident_eligible(corpus, 5, 10, Rng(1)));
}

TEST(Reident, ParallelEqualsSerial) {
  const auto corpus = synthetic(300, 40, 6, 5);
  for (std::size_t p = 1; p <= 4; ++p) {
    EXPECT_EQ(uniqueness_reident(corpus, p, 3000, Rng(p)), uniqueness_reident_serial(corpus, p, 3000, Rng(p)));
  }
}

TEST(Reident, ExhaustiveMonotoneInP) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto corpus = synthetic(30, 12, 6, seed);
    double prev = 0;
    for (std::size_t p = 1; p <= 6; ++p) {
      const double f = uniqueness_reident_exhaustive(corpus, p);
      EXPECT_DOUBLE_EQ(f, enumerate_fraction(corpus, p));
      EXPECT_GE(f, prev);
      prev = f;
    }
  }
}

TEST(Reident, SampledMonotoneInPOnLargeCorpus) {
  const auto corpus = synthetic(1000, 100, 10, 17);
  const auto curve = uniqueness_curve(corpus, 10, 2000, Rng(4));
  ASSERT_EQ(curve.size(), 10u);
  for (std::size_t p = 1; p < curve.size(); ++p) EXPECT_GE(curve[p], curve[p - 1]);
  double prev = 0;
  for (std::size_t p = 1; p <= 10; ++p) {
    const double f = uniqueness_reident(corpus, p, 2000, Rng(4));
    EXPECT_EQ(f, curve[p - 1]);
    EXPECT_GE(f, prev);
    prev = f;
  }
  EXPECT_EQ(curve.back(), 1.0);  // a whole trace of 10 points is unique here
}
