#pragma once

#include <compare>
#include <cstdint>
#include <functional>

namespace pdn {

/// Opaque unsigned identifier. The tag keeps unrelated id families from
/// being mixed up at compile time.
template <class Tag>
struct StrongId {
  std::uint64_t value = 0;

  constexpr StrongId() = default;
  constexpr explicit StrongId(std::uint64_t v) : value(v) {}

  friend constexpr auto operator<=>(StrongId, StrongId) = default;
};

using ItemId = StrongId<struct ItemTag>;
using CustomerId = StrongId<struct CustomerTag>;
using EntityId = StrongId<struct EntityTag>;
using OrderId = StrongId<struct OrderTag>;
using SurfaceId = StrongId<struct SurfaceTag>;
// Vendor-side account handle of a customer.
using Pseudonym = StrongId<struct PseudonymTag>;

using Time = double;

}  // namespace pdn

template <class Tag>
struct std::hash<pdn::StrongId<Tag>> {
  std::size_t operator()(pdn::StrongId<Tag> id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};
