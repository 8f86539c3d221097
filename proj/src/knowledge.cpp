#include "pdn/knowledge.hpp"

#include <charconv>
#include <cmath>

namespace pdn {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Vendor: return "vendor";
    case Role::Dpn: return "dpn";
    case Role::Pman: return "pman";
    case Role::Customer: return "customer";
    case Role::Recipient: return "recipient";
    case Role::Adversary: return "adversary";
    case Role::Sniffer: return "sniff";
  }
  return "?";
}

std::optional<Role> parse_role(std::string_view text) {
  for (Role r : {Role::Vendor, Role::Dpn, Role::Pman, Role::Customer, Role::Recipient,
                 Role::Adversary, Role::Sniffer}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string format_items(const ItemBag& items) {
  if (items.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(items[i].value);
  }
  return out;
}

std::optional<ItemBag> parse_items(std::string_view s) {
  ItemBag out;
  if (s == "-") return out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto pos = s.find(',', start);
    auto tok = s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    auto v = parse_u64(tok);
    if (!v) return std::nullopt;
    out.push_back(ItemId{*v});
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return make_bag(std::move(out));
}

std::string id(std::uint64_t v) { return std::to_string(v); }

}  // namespace

std::string format_time(Time t) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, t);
  return std::string(buf, ptr);
}

std::string format_observation(const ObservationEvent& e) {
  std::string out = format_time(e.time);
  out += '\t';
  out += format_address(e.src);
  out += '\t';
  out += format_address(e.dst);
  out += '\t';
  out += id(e.surface.value);
  out += '\t';
  out += to_string(e.size);
  return out;
}

std::optional<ObservationEvent> parse_observation(std::string_view line) {
  auto f = split_tabs(line);
  if (f.size() != 5) return std::nullopt;
  auto t = parse_double(f[0]);
  auto src = parse_address(f[1]);
  auto dst = parse_address(f[2]);
  auto s = parse_u64(f[3]);
  auto size = parse_size_class(f[4]);
  if (!t || !src || !dst || !s || !size) return std::nullopt;
  return ObservationEvent{*t, *src, *dst, SurfaceId{*s}, *size};
}

std::string format_fact(const Owner& owner, const Fact& f) {
  std::string out = std::string(to_string(owner.role)) + '\t' + id(owner.entity.value) + '\t';
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, fact::Purchased>) {
          out += "purchased\t" + id(x.pseudonym.value) + '\t' + id(x.order.value) + '\t' +
                 format_time(x.time) + '\t' + format_items(x.items);
        } else if constexpr (std::is_same_v<T, fact::ShippedTo>) {
          out += "shipped_to\t" + id(x.order.value) + '\t' + format_address(x.address) + '\t' +
                 id(x.surface.value);
        } else if constexpr (std::is_same_v<T, fact::HoldsAddressOf>) {
          out += "holds_address\t" + id(x.customer.value) + '\t' + format_address(x.address);
        } else if constexpr (std::is_same_v<T, fact::ReceivedGoods>) {
          out += "received_goods\t" + format_time(x.time) + '\t' + id(x.surface.value) + '\t' +
                 format_items(x.items);
        } else if constexpr (std::is_same_v<T, fact::RequestedGoods>) {
          out += "requested_goods\t" + id(x.recipient.value) + '\t' + format_items(x.items);
        } else if constexpr (std::is_same_v<T, fact::ObservedMove>) {
          out += "observed\t" + format_observation(x.event);
        } else if constexpr (std::is_same_v<T, fact::Forwarded>) {
          out += "forwarded\t" + id(x.in.value) + '\t' + id(x.out.value);
        } else {
          out += "sniffed\t" + id(x.surface.value) + '\t' +
                 format_address(x.manifest.final_recipient) + '\t' + format_items(x.manifest.items);
        }
      },
      f);
  return out;
}

std::optional<std::pair<Owner, Fact>> parse_fact(std::string_view line) {
  auto f = split_tabs(line);
  if (f.size() < 3) return std::nullopt;
  auto role = parse_role(f[0]);
  auto entity = parse_u64(f[1]);
  if (!role || !entity) return std::nullopt;
  Owner owner{*role, EntityId{*entity}};
  const auto kind = f[2];
  const auto n = f.size() - 3;
  auto at = [&](std::size_t i) { return f[3 + i]; };

  if (kind == "purchased" && n == 4) {
    auto p = parse_u64(at(0));
    auto o = parse_u64(at(1));
    auto t = parse_double(at(2));
    auto items = parse_items(at(3));
    if (p && o && t && items) {
      return std::pair{owner, Fact{fact::Purchased{Pseudonym{*p}, *items, OrderId{*o}, *t}}};
    }
  } else if (kind == "shipped_to" && n == 3) {
    auto o = parse_u64(at(0));
    auto a = parse_address(at(1));
    auto s = parse_u64(at(2));
    if (o && a && s) return std::pair{owner, Fact{fact::ShippedTo{OrderId{*o}, *a, SurfaceId{*s}}}};
  } else if (kind == "holds_address" && n == 2) {
    auto c = parse_u64(at(0));
    auto a = parse_address(at(1));
    if (c && a) return std::pair{owner, Fact{fact::HoldsAddressOf{CustomerId{*c}, *a}}};
  } else if (kind == "received_goods" && n == 3) {
    auto t = parse_double(at(0));
    auto s = parse_u64(at(1));
    auto items = parse_items(at(2));
    if (t && s && items) {
      return std::pair{owner, Fact{fact::ReceivedGoods{*items, *t, SurfaceId{*s}}}};
    }
  } else if (kind == "requested_goods" && n == 2) {
    auto r = parse_u64(at(0));
    auto items = parse_items(at(1));
    if (r && items) return std::pair{owner, Fact{fact::RequestedGoods{EntityId{*r}, *items}}};
  } else if (kind == "observed" && n == 5) {
    auto pos = line.find("observed\t");
    auto e = parse_observation(line.substr(pos + 9));
    if (e) return std::pair{owner, Fact{fact::ObservedMove{*e}}};
  } else if (kind == "forwarded" && n == 2) {
    auto i = parse_u64(at(0));
    auto o = parse_u64(at(1));
    if (i && o) return std::pair{owner, Fact{fact::Forwarded{SurfaceId{*i}, SurfaceId{*o}}}};
  } else if (kind == "sniffed" && n == 3) {
    auto s = parse_u64(at(0));
    auto a = parse_address(at(1));
    auto items = parse_items(at(2));
    if (s && a && items) {
      return std::pair{owner, Fact{fact::Sniffed{SurfaceId{*s}, Manifest{*items, *a}}}};
    }
  }
  return std::nullopt;
}

}  // namespace pdn
