#include "pdn/workload.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pdn {

Catalog gen_catalog(std::size_t n, double s) {
  if (n == 0) throw InvalidParam("catalog.n", "catalog needs at least one item");
  if (!std::isfinite(s) || s < 0) throw InvalidParam("catalog.zipf_s", "must be finite and >= 0");

  Catalog c;
  c.zipf_s = s;
  c.items.reserve(n);
  c.popularity.reserve(n);
  double total = 0.0;
  for (std::size_t rank = 1; rank <= n; ++rank) {
    c.items.push_back(ItemId{rank - 1});
    const double w = std::pow(static_cast<double>(rank), -s);
    c.popularity.push_back(w);
    total += w;
  }
  for (auto& w : c.popularity) w /= total;
  return c;
}

std::vector<CustomerProfile> gen_customers(const Catalog& catalog, std::span<const Address> homes,
                                           const ProfileParams& params, const Rng& rng) {
  const std::size_t k = params.sparsity_k;
  if (k < 1 || k > catalog.items.size()) {
    throw InvalidParam("profile.sparsity_k", "must lie in [1, catalog size]");
  }
  if (!(params.order_rate > 0)) throw InvalidParam("profile.order_rate", "must be > 0");

  std::vector<CustomerProfile> out;
  out.reserve(homes.size());
  const std::size_t n = catalog.items.size();
  std::vector<std::pair<double, std::size_t>> keys(n);
  for (std::size_t c = 0; c < homes.size(); ++c) {
    Rng local = rng.split(c);
    // Efraimidis-Spirakis: the k largest u^(1/w) keys form a weighted sample
    // without replacement. Compared in log space to avoid underflow.
    for (std::size_t i = 0; i < n; ++i) {
      const double u = local.uniform();
      const double key = std::log1p(-u) / catalog.popularity[i];
      keys[i] = {key, i};
    }
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(k), keys.end(),
                      [](const auto& a, const auto& b) {
                        return a.first > b.first || (a.first == b.first && a.second < b.second);
                      });
    std::vector<std::size_t> chosen;
    for (std::size_t j = 0; j < k; ++j) chosen.push_back(keys[j].second);
    std::sort(chosen.begin(), chosen.end());

    CustomerProfile p;
    p.customer = CustomerId{c};
    p.home = homes[c];
    p.order_rate = params.order_rate;
    p.noise_budget = params.noise_budget;
    double total = 0.0;
    for (auto idx : chosen) total += catalog.popularity[idx];
    for (auto idx : chosen) {
      p.support.push_back(catalog.items[idx]);
      p.propensity.push_back(catalog.popularity[idx] / total);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Order> gen_orders(std::span<const CustomerProfile> profiles, const Catalog& catalog,
                              std::span<const EntityId> vendors, Time horizon,
                              const OrderParams& params, const Rng& rng) {
  std::vector<Order> orders;
  if (!(horizon > 0) || vendors.empty()) return orders;

  for (const auto& p : profiles) {
    Rng local = rng.split(p.customer.value);
    Time t = 0.0;
    while (true) {
      t += local.exponential(1.0 / p.order_rate);
      if (t >= horizon) break;
      Order o;
      o.customer = p.customer;
      o.placed_at = t;
      o.vendor = vendors[local.below(vendors.size())];
      std::vector<ItemId> self;
      for (std::size_t i = 0; i < params.items_per_order; ++i) {
        self.push_back(p.support[local.weighted_index(p.propensity)]);
      }
      o.self_items = make_bag(std::move(self));
      if (params.with_noise && p.noise_budget > 0) {
        const auto count = local.below(p.noise_budget + 1);
        std::vector<ItemId> noise;
        for (std::uint64_t i = 0; i < count; ++i) {
          if (params.noise_draw == NoiseDraw::Uniform) {
            noise.push_back(catalog.items[local.below(catalog.items.size())]);
          } else {
            noise.push_back(p.support[local.weighted_index(p.propensity)]);
          }
        }
        o.noise_items = make_bag(std::move(noise));
      }
      orders.push_back(std::move(o));
    }
  }
  std::stable_sort(orders.begin(), orders.end(), [](const Order& a, const Order& b) {
    return a.placed_at < b.placed_at;
  });
  for (std::size_t i = 0; i < orders.size(); ++i) orders[i].id = OrderId{i};
  return orders;
}

std::vector<SecondaryRequest> gen_secondary_requests(std::span<const EntityId> recipients,
                                                     const Catalog& catalog, double rate,
                                                     std::size_t items_per_request, Time horizon,
                                                     const Rng& rng) {
  std::vector<SecondaryRequest> out;
  if (!(horizon > 0) || !(rate > 0) || items_per_request == 0) return out;
  for (std::size_t r = 0; r < recipients.size(); ++r) {
    Rng local = rng.split(r);
    Time t = 0.0;
    while (true) {
      t += local.exponential(1.0 / rate);
      if (t >= horizon) break;
      std::vector<ItemId> items;
      for (std::size_t i = 0; i < items_per_request; ++i) {
        items.push_back(catalog.items[local.weighted_index(catalog.popularity)]);
      }
      out.push_back(SecondaryRequest{recipients[r], make_bag(std::move(items)), t});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.requested_at < b.requested_at;
  });
  return out;
}

}  // namespace pdn
