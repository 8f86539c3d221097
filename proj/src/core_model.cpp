#include "pdn/core_model.hpp"

#include <algorithm>
#include <charconv>

namespace pdn {

SizeClass size_class_for_items(std::size_t item_count) {
  if (item_count <= 2) return SizeClass::S0;
  if (item_count <= 5) return SizeClass::S1;
  if (item_count <= 10) return SizeClass::S2;
  return SizeClass::S3;
}

std::string_view to_string(SizeClass s) {
  switch (s) {
    case SizeClass::S0: return "S0";
    case SizeClass::S1: return "S1";
    case SizeClass::S2: return "S2";
    case SizeClass::S3: return "S3";
  }
  return "S?";
}

std::optional<SizeClass> parse_size_class(std::string_view text) {
  if (text == "S0") return SizeClass::S0;
  if (text == "S1") return SizeClass::S1;
  if (text == "S2") return SizeClass::S2;
  if (text == "S3") return SizeClass::S3;
  return std::nullopt;
}

namespace {

char kind_letter(AddressKind k) {
  switch (k) {
    case AddressKind::CustomerHome: return 'C';
    case AddressKind::VendorSite: return 'V';
    case AddressKind::DpnSite: return 'D';
    case AddressKind::PmanSite: return 'P';
    case AddressKind::SecondaryRecipientHome: return 'R';
  }
  return '?';
}

}  // namespace

std::string format_address(const Address& a) {
  return kind_letter(a.kind) + std::to_string(a.entity.value);
}

std::optional<Address> parse_address(std::string_view text) {
  if (text.size() < 2) return std::nullopt;
  AddressKind kind;
  switch (text.front()) {
    case 'C': kind = AddressKind::CustomerHome; break;
    case 'V': kind = AddressKind::VendorSite; break;
    case 'D': kind = AddressKind::DpnSite; break;
    case 'P': kind = AddressKind::PmanSite; break;
    case 'R': kind = AddressKind::SecondaryRecipientHome; break;
    default: return std::nullopt;
  }
  std::uint64_t value = 0;
  auto digits = text.substr(1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
  return Address{EntityId{value}, kind};
}

ItemBag make_bag(std::vector<ItemId> items) {
  std::sort(items.begin(), items.end());
  return items;
}

ItemBag bag_union(const ItemBag& a, const ItemBag& b) {
  ItemBag out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::size_t Package::depth() const {
  std::size_t d = 1;
  const Package* p = this;
  while (auto* inner = std::get_if<std::shared_ptr<const Package>>(&p->interior_)) {
    p = inner->get();
    ++d;
  }
  return d;
}

std::vector<SurfaceId> Package::surfaces() const {
  std::vector<SurfaceId> out{surface_};
  const Package* p = this;
  while (auto* inner = std::get_if<std::shared_ptr<const Package>>(&p->interior_)) {
    p = inner->get();
    out.push_back(p->surface_);
  }
  return out;
}

bool operator==(const Package& a, const Package& b) {
  if (a.surface_ != b.surface_ || a.dest_ != b.dest_ || a.size_ != b.size_ ||
      a.opener_ != b.opener_ || a.interior_.index() != b.interior_.index()) {
    return false;
  }
  if (auto* m = std::get_if<Manifest>(&a.interior_)) return *m == std::get<Manifest>(b.interior_);
  return *std::get<1>(a.interior_) == *std::get<1>(b.interior_);
}

Package seal_goods(Manifest manifest, Address dest, EntityId opener, SizeClass size,
                   SurfaceMinter& minter) {
  return Package(minter.mint(), dest, size, opener, std::move(manifest));
}

Package wrap_package(const Package& inner, Address dest, EntityId opener, SizeClass common_class,
                     SurfaceMinter& minter) {
  const SizeClass size = std::max(inner.size_class(), common_class);
  return Package(minter.mint(), dest, size, opener, std::make_shared<const Package>(inner));
}

Interior tamper_open(const Package& p) {
  if (auto* m = std::get_if<Manifest>(&p.interior_)) return *m;
  return *std::get<1>(p.interior_);
}

Unwrapped unwrap_package(const Package& p, EntityId by) {
  if (by != p.opener_) {
    throw AccessDenied("entity " + std::to_string(by.value) + " may not open surface " +
                       std::to_string(p.surface_.value) + " (opener " +
                       std::to_string(p.opener_.value) + ")");
  }
  if (auto* m = std::get_if<Manifest>(&p.interior_)) {
    return Unwrapped{m->final_recipient, *m};
  }
  const Package& inner = *std::get<1>(p.interior_);
  return Unwrapped{inner.visible_dest(), inner};
}

bool is_valid_route(const RouteSpec& route) {
  const auto& h = route.hops;
  if (h.size() < 2) return false;
  const auto origin = h.front().kind;
  if (origin != AddressKind::VendorSite && origin != AddressKind::CustomerHome) return false;
  const auto end = h.back().kind;
  if (end != AddressKind::CustomerHome && end != AddressKind::SecondaryRecipientHome &&
      end != AddressKind::PmanSite) {
    return false;
  }
  // A vendor delivery ends at a home, a donation ends at a PMAN.
  if (origin == AddressKind::VendorSite && end == AddressKind::PmanSite) return false;
  if (origin == AddressKind::CustomerHome && end != AddressKind::PmanSite) return false;
  for (std::size_t i = 1; i + 1 < h.size(); ++i) {
    if (h[i].kind != AddressKind::DpnSite && h[i].kind != AddressKind::PmanSite) return false;
  }
  return true;
}

}  // namespace pdn
