#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pdn/errors.hpp"
#include "pdn/ids.hpp"

namespace pdn {

// Ladder of package sizes: small, medium, large, pallet.
enum class SizeClass : std::uint8_t { S0 = 0, S1 = 1, S2 = 2, S3 = 3 };

inline constexpr SizeClass kLargestSize = SizeClass::S3;

SizeClass size_class_for_items(std::size_t item_count);
std::string_view to_string(SizeClass s);
std::optional<SizeClass> parse_size_class(std::string_view text);

enum class AddressKind : std::uint8_t {
  CustomerHome,
  VendorSite,
  DpnSite,
  PmanSite,
  SecondaryRecipientHome,
};

struct Address {
  EntityId entity;
  AddressKind kind = AddressKind::CustomerHome;

  friend auto operator<=>(const Address&, const Address&) = default;
};

/// Compact text form used in logs: one kind letter plus the entity number,
/// e.g. "C17" or "D3".
std::string format_address(const Address& a);
std::optional<Address> parse_address(std::string_view text);

/// Sorted multiset of items.
using ItemBag = std::vector<ItemId>;

ItemBag make_bag(std::vector<ItemId> items);
ItemBag bag_union(const ItemBag& a, const ItemBag& b);

struct Manifest {
  ItemBag items;
  Address final_recipient;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Mints surface ids for one run. Ids are never reused.
class SurfaceMinter {
 public:
  SurfaceId mint() { return SurfaceId{next_++}; }
  std::uint64_t minted() const noexcept { return next_ - 1; }

 private:
  std::uint64_t next_ = 1;
};

class Package;
struct Unwrapped;

/// What an authorized unwrap (or a tampering open) reveals: either the next
/// sealed layer or, at the innermost layer, the goods.
using Interior = std::variant<Package, Manifest>;

/// A physical parcel. Only the surface (id, label, size) is public; the
/// interior is reachable through unwrap_package by the designated opener.
class Package {
 public:
  SurfaceId surface() const noexcept { return surface_; }
  const Address& visible_dest() const noexcept { return dest_; }
  SizeClass size_class() const noexcept { return size_; }
  EntityId opener() const noexcept { return opener_; }

  /// Number of layers including this one.
  std::size_t depth() const;
  /// Surface ids of every layer, outermost first.
  std::vector<SurfaceId> surfaces() const;
  bool holds_goods() const noexcept { return std::holds_alternative<Manifest>(interior_); }

  friend bool operator==(const Package& a, const Package& b);

 private:
  Package(SurfaceId s, Address dest, SizeClass size, EntityId opener,
          std::variant<Manifest, std::shared_ptr<const Package>> interior)
      : surface_(s), dest_(dest), size_(size), opener_(opener), interior_(std::move(interior)) {}

  SurfaceId surface_;
  Address dest_;
  SizeClass size_ = SizeClass::S0;
  EntityId opener_;
  std::variant<Manifest, std::shared_ptr<const Package>> interior_;

  friend Package seal_goods(Manifest, Address, EntityId, SizeClass, SurfaceMinter&);
  friend Package wrap_package(const Package&, Address, EntityId, SizeClass, SurfaceMinter&);
  friend Unwrapped unwrap_package(const Package&, EntityId);
  friend Interior tamper_open(const Package&);
};

/// Innermost layer: goods sealed for `opener` and labelled for `dest`.
Package seal_goods(Manifest manifest, Address dest, EntityId opener, SizeClass size,
                   SurfaceMinter& minter);

/// Adds a fresh outer layer. The outer size class is
/// max(inner size, common_class), so wrapping never shrinks a parcel.
Package wrap_package(const Package& inner, Address dest, EntityId opener, SizeClass common_class,
                     SurfaceMinter& minter);

struct Unwrapped {
  Address next_dest;
  Interior content;
};

/// Opens the outer layer. Throws AccessDenied unless `by` is the layer's
/// opener.
Unwrapped unwrap_package(const Package& p, EntityId by);

/// Physically opens the outer layer without authorization. Exists only to
/// model a custodian sniffing parcels; never used on the delivery path.
Interior tamper_open(const Package& p);

struct RouteSpec {
  std::vector<Address> hops;

  std::size_t intermediaries() const { return hops.size() < 2 ? 0 : hops.size() - 2; }
  friend bool operator==(const RouteSpec&, const RouteSpec&) = default;
};

/// Origin is a vendor site (delivery) or a customer home (donation
/// re-shipment); the terminus is a home or a PMAN site; everything in
/// between is a DPN or PMAN site.
bool is_valid_route(const RouteSpec& route);

struct Order {
  OrderId id;
  CustomerId customer;
  EntityId vendor;
  ItemBag self_items;
  ItemBag noise_items;
  Time placed_at = 0.0;

  ItemBag all_items() const { return bag_union(self_items, noise_items); }
  friend bool operator==(const Order&, const Order&) = default;
};

}  // namespace pdn
