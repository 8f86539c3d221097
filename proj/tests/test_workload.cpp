#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "pdn/errors.hpp"
#include "pdn/workload.hpp"
#include "support.hpp"

using namespace pdn;

namespace {

std::vector<Address> homes(std::size_t n) {
  std::vector<Address> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(pdn::testing::home(10 + i));
  return out;
}

std::set<ItemId> support_of(const CustomerProfile& p) {
  return {p.support.begin(), p.support.end()};
}

double pairwise_collision_rate(const std::vector<std::set<ItemId>>& supports) {
  std::size_t same = 0, pairs = 0;
  for (std::size_t i = 0; i < supports.size(); ++i) {
    for (std::size_t j = i + 1; j < supports.size(); ++j) {
      ++pairs;
      same += supports[i] == supports[j];
    }
  }
  return static_cast<double>(same) / static_cast<double>(pairs);
}

}  // namespace

TEST(Catalog, SingleItemHasWeightOne) {
  const Catalog c = gen_catalog(1, 1.0);
  ASSERT_EQ(c.items.size(), 1u);
  EXPECT_DOUBLE_EQ(c.popularity[0], 1.0);
}

TEST(Catalog, ZeroExponentIsUniform) {
  const Catalog c = gen_catalog(4, 0.0);
  for (double w : c.popularity) EXPECT_NEAR(w, 0.25, 1e-15);
}

TEST(Catalog, ZipfThreeItems) {
  const Catalog c = gen_catalog(3, 1.0);
  EXPECT_NEAR(c.popularity[0], 6.0 / 11.0, 1e-15);
  EXPECT_NEAR(c.popularity[1], 3.0 / 11.0, 1e-15);
  EXPECT_NEAR(c.popularity[2], 2.0 / 11.0, 1e-15);
}

TEST(Catalog, NormalizedMonotoneDistinct) {
  const Catalog c = gen_catalog(200, 1.3);
  EXPECT_NEAR(pdn::testing::sum(c.popularity), 1.0, 1e-9);
  for (std::size_t i = 1; i < c.popularity.size(); ++i) {
    EXPECT_LE(c.popularity[i], c.popularity[i - 1]);
  }
  EXPECT_EQ(std::set<ItemId>(c.items.begin(), c.items.end()).size(), 200u);
}

TEST(Catalog, RejectsBadParams) {
  EXPECT_THROW(gen_catalog(0, 1.0), InvalidParam);
  EXPECT_THROW(gen_catalog(3, -0.5), InvalidParam);
  EXPECT_THROW(gen_catalog(3, NAN), InvalidParam);
}

TEST(Customers, FullSparsityCoversCatalog) {
  const Catalog c = gen_catalog(10, 1.0);
  const auto profiles = gen_customers(c, homes(5), {10, 1.0, 0}, Rng(3));
  for (const auto& p : profiles) {
    EXPECT_EQ(support_of(p), std::set<ItemId>(c.items.begin(), c.items.end()));
    EXPECT_NEAR(pdn::testing::sum(p.propensity), 1.0, 1e-9);
  }
}

TEST(Customers, Deterministic) {
  const Catalog c = gen_catalog(50, 1.0);
  const auto a = gen_customers(c, homes(2), {3, 1.0, 2}, Rng(42));
  const auto b = gen_customers(c, homes(2), {3, 1.0, 2}, Rng(42));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].support, b[i].support);
    EXPECT_EQ(a[i].propensity, b[i].propensity);
    EXPECT_EQ(a[i].home, b[i].home);
  }
}

TEST(Customers, RejectsSparsityOutOfRange) {
  const Catalog c = gen_catalog(5, 1.0);
  EXPECT_THROW(gen_customers(c, homes(2), {0, 1.0, 0}, Rng(1)), InvalidParam);
  EXPECT_THROW(gen_customers(c, homes(2), {6, 1.0, 0}, Rng(1)), InvalidParam);
}

TEST(Customers, PropensityIsRenormalizedPopularity) {
  const Catalog c = gen_catalog(20, 1.0);
  const auto profiles = gen_customers(c, homes(30), {4, 1.0, 0}, Rng(9));
  for (const auto& p : profiles) {
    double mass = 0;
    for (auto it : p.support) mass += c.popularity[it.value - c.items.front().value];
    for (std::size_t i = 0; i < p.support.size(); ++i) {
      EXPECT_NEAR(p.propensity[i], c.popularity[p.support[i].value - c.items.front().value] / mass,
                  1e-12);
    }
  }
}

// Oracle: draw supports independently by sequential popularity-weighted
// sampling without replacement and estimate the chance two customers share
// the exact same support.
TEST(Customers, PairwiseCollisionMatchesResamplingOracle) {
  const Catalog c = gen_catalog(50, 1.0);
  const std::size_t k = 3, n = 100;

  std::mt19937_64 gen(20240611);
  auto draw = [&] {
    std::vector<double> w = c.popularity;
    std::set<ItemId> s;
    for (std::size_t j = 0; j < k; ++j) {
      std::discrete_distribution<std::size_t> d(w.begin(), w.end());
      const auto idx = d(gen);
      s.insert(c.items[idx]);
      w[idx] = 0.0;
    }
    return s;
  };
  const std::size_t oracle_pairs = 400000;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < oracle_pairs; ++i) hits += draw() == draw();
  const double q = static_cast<double>(hits) / oracle_pairs;
  const double q_se = std::sqrt(q * (1 - q) / oracle_pairs);

  const std::size_t seeds = 60;
  std::vector<double> rates;
  for (std::size_t s = 0; s < seeds; ++s) {
    const auto profiles = gen_customers(c, homes(n), {k, 1.0, 0}, Rng(1000 + s));
    std::vector<std::set<ItemId>> supports;
    for (const auto& p : profiles) supports.push_back(support_of(p));
    rates.push_back(pairwise_collision_rate(supports));
  }
  const double mean = pdn::testing::sum(rates) / seeds;
  double var = 0;
  for (double r : rates) var += (r - mean) * (r - mean);
  var /= (seeds - 1);
  const double se = std::sqrt(var / seeds);
  EXPECT_GT(q, 0.0);
  EXPECT_NEAR(mean, q, 3 * std::hypot(se, q_se)) << "oracle " << q << " generated " << mean;
}

TEST(Orders, EmptyHorizonIsEmpty) {
  const Catalog c = gen_catalog(10, 1.0);
  const auto profiles = gen_customers(c, homes(3), {2, 1.0, 0}, Rng(1));
  const std::vector<EntityId> vendors{EntityId{1}};
  EXPECT_TRUE(gen_orders(profiles, c, vendors, 0.0, {}, Rng(1)).empty());
}

TEST(Orders, TinyRateIsEmptyAlmostSurely) {
  const Catalog c = gen_catalog(10, 1.0);
  const auto profiles = gen_customers(c, homes(3), {2, 1e-12, 0}, Rng(1));
  const std::vector<EntityId> vendors{EntityId{1}};
  EXPECT_TRUE(gen_orders(profiles, c, vendors, 100.0, {}, Rng(1)).empty());
}

TEST(Orders, NoNoiseOutsidePman) {
  const Catalog c = gen_catalog(10, 1.0);
  const auto profiles = gen_customers(c, homes(5), {2, 1.0, 3}, Rng(1));
  const std::vector<EntityId> vendors{EntityId{1}, EntityId{2}};
  OrderParams params;
  params.with_noise = false;
  const auto orders = gen_orders(profiles, c, vendors, 50.0, params, Rng(2));
  ASSERT_FALSE(orders.empty());
  for (const auto& o : orders) {
    EXPECT_TRUE(o.noise_items.empty());
    EXPECT_FALSE(o.self_items.empty());
  }
}

TEST(Orders, NoiseBoundedByBudgetAndSelfFromSupport) {
  const Catalog c = gen_catalog(10, 1.0);
  const auto profiles = gen_customers(c, homes(5), {2, 1.0, 3}, Rng(1));
  const std::vector<EntityId> vendors{EntityId{1}};
  OrderParams params;
  params.with_noise = true;
  params.items_per_order = 2;
  const auto orders = gen_orders(profiles, c, vendors, 50.0, params, Rng(2));
  std::size_t with_noise = 0;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const auto& o = orders[i];
    EXPECT_EQ(o.id.value, i);
    EXPECT_EQ(o.self_items.size(), 2u);
    EXPECT_LE(o.noise_items.size(), 3u);
    with_noise += !o.noise_items.empty();
    const auto sup = support_of(profiles[o.customer.value]);
    for (auto it : o.self_items) EXPECT_TRUE(sup.count(it));
    if (i) {
      EXPECT_LE(orders[i - 1].placed_at, o.placed_at);
    }
    EXPECT_LT(o.placed_at, 50.0);
  }
  EXPECT_GT(with_noise, 0u);
}

TEST(Orders, PoissonCountWithinThreeSigma) {
  const Catalog c = gen_catalog(10, 1.0);
  const auto profiles = gen_customers(c, homes(1), {2, 2.0, 0}, Rng(5));
  const std::vector<EntityId> vendors{EntityId{1}};
  const auto orders = gen_orders(profiles, c, vendors, 100.0, {}, Rng(6));
  EXPECT_NEAR(static_cast<double>(orders.size()), 200.0, 3 * std::sqrt(200.0));
}

TEST(Orders, PoissonMeanOverManySeeds) {
  const Catalog c = gen_catalog(10, 1.0);
  const auto profiles = gen_customers(c, homes(1), {2, 2.0, 0}, Rng(5));
  const std::vector<EntityId> vendors{EntityId{1}};
  double total = 0;
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) total += gen_orders(profiles, c, vendors, 100.0, {}, Rng(s)).size();
  // Mean of 200 Poisson(200) counts: sd = sqrt(200/200) = 1.
  EXPECT_NEAR(total / seeds, 200.0, 3.0);
}

TEST(Requests, NoRecipientsNoRequests) {
  const Catalog c = gen_catalog(10, 1.0);
  EXPECT_TRUE(gen_secondary_requests({}, c, 1.0, 1, 100.0, Rng(1)).empty());
}

TEST(Requests, Deterministic) {
  const Catalog c = gen_catalog(10, 1.0);
  const std::vector<EntityId> r{EntityId{7}, EntityId{8}};
  EXPECT_EQ(gen_secondary_requests(r, c, 0.5, 2, 100.0, Rng(4)),
            gen_secondary_requests(r, c, 0.5, 2, 100.0, Rng(4)));
}

TEST(Requests, ItemMarginalsFollowPopularity) {
  const Catalog c = gen_catalog(5, 1.0);
  std::vector<EntityId> r;
  for (int i = 0; i < 20; ++i) r.emplace_back(100 + i);
  const auto reqs = gen_secondary_requests(r, c, 5.0, 1, 200.0, Rng(11));
  std::map<ItemId, double> count;
  double n = 0;
  for (const auto& q : reqs) {
    EXPECT_FALSE(q.items.empty());
    for (auto it : q.items) {
      ++count[it];
      ++n;
    }
  }
  ASSERT_GT(n, 10000);
  // Pearson chi-square, 4 degrees of freedom, 5% critical value 9.488.
  double chi2 = 0;
  for (std::size_t i = 0; i < c.items.size(); ++i) {
    const double e = n * c.popularity[i];
    chi2 += (count[c.items[i]] - e) * (count[c.items[i]] - e) / e;
  }
  EXPECT_LT(chi2, 9.488);
}
