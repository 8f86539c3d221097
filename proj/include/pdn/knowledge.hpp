#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pdn/core_model.hpp"

namespace pdn {

/// One physically observable event. Every movement produces two records with
/// the same surface: one when the parcel leaves `src` and one when it is
/// delivered into `dst`. The earlier record is the departure.
struct ObservationEvent {
  Time time = 0.0;
  Address src;
  Address dst;
  SurfaceId surface;
  SizeClass size = SizeClass::S0;

  friend bool operator==(const ObservationEvent&, const ObservationEvent&) = default;
};

using ObservationLog = std::vector<ObservationEvent>;

namespace fact {

struct Purchased {
  Pseudonym pseudonym;
  ItemBag items;
  OrderId order;
  Time time = 0.0;  // when the order was placed
  friend bool operator==(const Purchased&, const Purchased&) = default;
};

/// Vendor knowledge: which address (and parcel) an order was handed to.
struct ShippedTo {
  OrderId order;
  Address address;
  SurfaceId surface;
  friend bool operator==(const ShippedTo&, const ShippedTo&) = default;
};

struct HoldsAddressOf {
  CustomerId customer;
  Address address;
  friend bool operator==(const HoldsAddressOf&, const HoldsAddressOf&) = default;
};

/// PMAN knowledge of a donation: the goods and the parcel they came in.
struct ReceivedGoods {
  ItemBag items;
  Time time = 0.0;
  SurfaceId surface;
  friend bool operator==(const ReceivedGoods&, const ReceivedGoods&) = default;
};

struct RequestedGoods {
  EntityId recipient;
  ItemBag items;
  friend bool operator==(const RequestedGoods&, const RequestedGoods&) = default;
};

struct ObservedMove {
  ObservationEvent event;
  friend bool operator==(const ObservedMove&, const ObservedMove&) = default;
};

/// Custodian knowledge: the parcel that arrived as `in` left as `out`.
struct Forwarded {
  SurfaceId in;
  SurfaceId out;
  friend bool operator==(const Forwarded&, const Forwarded&) = default;
};

/// Contents learned by opening a parcel in custody without authorization.
struct Sniffed {
  SurfaceId surface;
  Manifest manifest;
  friend bool operator==(const Sniffed&, const Sniffed&) = default;
};

}  // namespace fact

using Fact = std::variant<fact::Purchased, fact::ShippedTo, fact::HoldsAddressOf,
                          fact::ReceivedGoods, fact::RequestedGoods, fact::ObservedMove,
                          fact::Forwarded, fact::Sniffed>;

enum class Role { Vendor, Dpn, Pman, Customer, Recipient, Adversary, Sniffer };

std::string_view to_string(Role r);
std::optional<Role> parse_role(std::string_view text);

struct Owner {
  Role role = Role::Adversary;
  EntityId entity;  // 0 for the global adversary

  friend auto operator<=>(const Owner&, const Owner&) = default;
};

struct KnowledgeView {
  Owner owner;
  std::vector<Fact> facts;
};

/// Tab-separated single-line encodings used by observations.log and
/// views.log. Times use the shortest round-trip decimal form.
std::string format_time(Time t);
std::string format_observation(const ObservationEvent& e);
std::optional<ObservationEvent> parse_observation(std::string_view line);
std::string format_fact(const Owner& owner, const Fact& f);
/// Inverse of format_fact. Returns nullopt on a malformed line.
std::optional<std::pair<Owner, Fact>> parse_fact(std::string_view line);

}  // namespace pdn
