#pragma once

// Independent oracles and fixtures shared by the unit tests and the
// acceptance binary. Nothing here calls into the code under test except to
// build inputs.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "pdn/knowledge.hpp"
#include "pdn/sim_engine.hpp"

namespace pdn::testing {

/// Brute-force posterior over every injective assignment of rows to
/// feasible columns, enumerated by backtracking. weight[r][c] is the
/// fraction of consistent assignments that pair r with c.
struct BruteForce {
  std::size_t matchings = 0;
  std::vector<std::vector<double>> weight;
};

inline BruteForce brute_force_marginals(const std::vector<std::vector<bool>>& feasible,
                                        std::size_t cols) {
  const std::size_t rows = feasible.size();
  BruteForce out;
  out.weight.assign(rows, std::vector<double>(cols, 0.0));
  std::vector<std::size_t> pick(rows);
  std::vector<bool> used(cols, false);
  std::vector<std::vector<std::size_t>> counts(rows, std::vector<std::size_t>(cols, 0));
  std::function<void(std::size_t)> rec = [&](std::size_t r) {
    if (r == rows) {
      ++out.matchings;
      for (std::size_t i = 0; i < rows; ++i) ++counts[i][pick[i]];
      return;
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (used[c] || !feasible[r][c]) continue;
      used[c] = true;
      pick[r] = c;
      rec(r + 1);
      used[c] = false;
    }
  };
  rec(0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out.weight[r][c] =
          out.matchings ? static_cast<double>(counts[r][c]) / static_cast<double>(out.matchings)
                        : 0.0;
    }
  }
  return out;
}

/// Builds a time-ordered two-record-per-movement observation log.
class LogBuilder {
 public:
  LogBuilder& move(Time depart, Time arrive, Address src, Address dst, std::uint64_t surface,
                   SizeClass size = SizeClass::S1) {
    records_.push_back({depart, seq_++, {depart, src, dst, SurfaceId{surface}, size}});
    records_.push_back({arrive, seq_++, {arrive, src, dst, SurfaceId{surface}, size}});
    return *this;
  }

  ObservationLog build() const {
    auto sorted = records_;
    std::stable_sort(sorted.begin(), sorted.end(), [](const Rec& a, const Rec& b) {
      return a.time < b.time || (a.time == b.time && a.seq < b.seq);
    });
    ObservationLog log;
    for (const auto& r : sorted) log.push_back(r.event);
    return log;
  }

 private:
  struct Rec {
    Time time;
    std::uint64_t seq;
    ObservationEvent event;
  };
  std::vector<Rec> records_;
  std::uint64_t seq_ = 0;
};

inline Address vendor(std::uint64_t e) { return {EntityId{e}, AddressKind::VendorSite}; }
inline Address dpn(std::uint64_t e) { return {EntityId{e}, AddressKind::DpnSite}; }
inline Address home(std::uint64_t e) { return {EntityId{e}, AddressKind::CustomerHome}; }

/// Busy periods of one node recomputed straight from the log: maximal runs
/// of records during which the node holds at least one parcel.
struct BusyPeriod {
  std::vector<std::size_t> inbound;   // arrival record indices
  std::vector<std::size_t> outbound;  // departure record indices
};

inline std::vector<BusyPeriod> busy_periods(const ObservationLog& log, EntityId node) {
  std::vector<BusyPeriod> out;
  std::vector<std::uint64_t> seen;
  std::vector<bool> arrival(log.size(), false);
  {
    std::vector<std::uint64_t> first;
    for (std::size_t i = 0; i < log.size(); ++i) {
      const auto s = log[i].surface.value;
      if (std::find(first.begin(), first.end(), s) != first.end()) arrival[i] = true;
      else first.push_back(s);
    }
  }
  long held = 0;
  BusyPeriod cur;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& e = log[i];
    if (arrival[i] && e.dst.entity == node) {
      ++held;
      cur.inbound.push_back(i);
    } else if (!arrival[i] && e.src.entity == node) {
      --held;
      cur.outbound.push_back(i);
      if (held == 0) {
        out.push_back(cur);
        cur = {};
      }
    }
  }
  if (!cur.inbound.empty()) out.push_back(cur);
  return out;
}

inline double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace pdn::testing
