#pragma once

#include <span>
#include <vector>

#include "pdn/core_model.hpp"
#include "pdn/rng.hpp"

namespace pdn {

struct Catalog {
  std::vector<ItemId> items;
  // Normalized, non-increasing in rank.
  std::vector<double> popularity;
  double zipf_s = 0.0;
};

/// n items with popularity proportional to rank^(-s).
/// Throws InvalidParam when n == 0 or s is negative or not finite.
Catalog gen_catalog(std::size_t n, double s);

struct CustomerProfile {
  CustomerId customer;
  Address home;
  std::vector<ItemId> support;    // items the customer buys
  std::vector<double> propensity;  // parallel to support, sums to 1
  double order_rate = 0.0;
  unsigned noise_budget = 0;
};

struct ProfileParams {
  std::size_t sparsity_k = 1;
  double order_rate = 1.0;
  unsigned noise_budget = 0;

  friend bool operator==(const ProfileParams&, const ProfileParams&) = default;
};

/// One profile per home. Each profile's support is k distinct catalog items
/// drawn by popularity without replacement; propensities are the
/// popularities re-normalized over the support.
std::vector<CustomerProfile> gen_customers(const Catalog& catalog, std::span<const Address> homes,
                                           const ProfileParams& params, const Rng& rng);

enum class NoiseDraw { Uniform, Profile };

struct OrderParams {
  std::size_t items_per_order = 1;
  bool with_noise = false;  // only the DPN+PMAN topology carries noise
  NoiseDraw noise_draw = NoiseDraw::Uniform;
};

/// Poisson order stream per customer over [0, horizon), merged and sorted by
/// time. Order ids are assigned in the merged order.
std::vector<Order> gen_orders(std::span<const CustomerProfile> profiles, const Catalog& catalog,
                              std::span<const EntityId> vendors, Time horizon,
                              const OrderParams& params, const Rng& rng);

struct SecondaryRequest {
  EntityId recipient;
  ItemBag items;
  Time requested_at = 0.0;

  friend bool operator==(const SecondaryRequest&, const SecondaryRequest&) = default;
};

/// Poisson request stream per recipient; items drawn by catalog popularity.
std::vector<SecondaryRequest> gen_secondary_requests(std::span<const EntityId> recipients,
                                                     const Catalog& catalog, double rate,
                                                     std::size_t items_per_request, Time horizon,
                                                     const Rng& rng);

}  // namespace pdn
