#include "pdn/matching.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "pdn/errors.hpp"

namespace pdn {

namespace {

struct Components {
  std::vector<std::vector<std::size_t>> rows;
  std::vector<std::vector<std::size_t>> cols;
};

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

// Components of the bipartite feasibility graph that contain at least one row.
Components components_of(const MatchingProblem& p) {
  const std::size_t n = p.rows + p.cols;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  for (std::size_t r = 0; r < p.rows; ++r) {
    for (std::size_t c = 0; c < p.cols; ++c) {
      if (!p.at(r, c)) continue;
      auto a = find_root(parent, r);
      auto b = find_root(parent, p.rows + c);
      if (a != b) parent[a] = b;
    }
  }
  std::vector<std::ptrdiff_t> slot(n, -1);
  Components out;
  for (std::size_t r = 0; r < p.rows; ++r) {
    auto root = find_root(parent, r);
    if (slot[root] < 0) {
      slot[root] = static_cast<std::ptrdiff_t>(out.rows.size());
      out.rows.emplace_back();
      out.cols.emplace_back();
    }
    out.rows[slot[root]].push_back(r);
  }
  for (std::size_t c = 0; c < p.cols; ++c) {
    auto root = find_root(parent, p.rows + c);
    if (slot[root] >= 0) out.cols[slot[root]].push_back(c);
  }
  return out;
}

[[noreturn]] void no_matching(std::size_t rows, std::size_t cols) {
  throw Infeasible("no consistent matching: " + std::to_string(rows) + " outbound vs " +
                   std::to_string(cols) + " feasible inbound");
}

bool complete(const MatchingProblem& p, const std::vector<std::size_t>& rs,
              const std::vector<std::size_t>& cs) {
  for (auto r : rs) {
    for (auto c : cs) {
      if (!p.at(r, c)) return false;
    }
  }
  return true;
}

// Forward/backward counts over column subsets. f[mask]: ways to match the
// first popcount(mask) rows onto exactly `mask`; g[mask]: ways to match the
// remaining rows into the complement.
double subset_dp(const MatchingProblem& p, const std::vector<std::size_t>& rs,
                 const std::vector<std::size_t>& cs, MatchingMarginals& out) {
  const std::size_t r = rs.size();
  const std::size_t m = cs.size();
  const std::uint32_t full = (std::uint32_t{1} << m);
  std::vector<std::uint32_t> allowed(r, 0);
  for (std::size_t j = 0; j < r; ++j) {
    for (std::size_t c = 0; c < m; ++c) {
      if (p.at(rs[j], cs[c])) allowed[j] |= (std::uint32_t{1} << c);
    }
  }
  std::vector<double> f(full, 0.0), g(full, 0.0);
  f[0] = 1.0;
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    const auto j = static_cast<std::size_t>(std::popcount(mask));
    if (j > r) continue;
    double sum = 0.0;
    for (std::uint32_t bits = mask & allowed[j - 1]; bits; bits &= bits - 1) {
      sum += f[mask ^ (bits & -bits)];
    }
    f[mask] = sum;
  }
  for (std::uint32_t mask = full; mask-- > 0;) {
    const auto j = static_cast<std::size_t>(std::popcount(mask));
    if (j > r) continue;
    if (j == r) {
      g[mask] = 1.0;
      continue;
    }
    double sum = 0.0;
    for (std::uint32_t bits = ~mask & (full - 1) & allowed[j]; bits; bits &= bits - 1) {
      sum += g[mask | (bits & -bits)];
    }
    g[mask] = sum;
  }
  const double total = g[0];
  if (total <= 0.0) no_matching(r, m);
  for (std::uint32_t mask = 0; mask < full; ++mask) {
    const auto j = static_cast<std::size_t>(std::popcount(mask));
    if (j >= r || f[mask] == 0.0) continue;
    for (std::uint32_t bits = ~mask & (full - 1) & allowed[j]; bits; bits &= bits - 1) {
      const std::uint32_t bit = bits & -bits;
      const auto c = static_cast<std::size_t>(std::countr_zero(bit));
      out.weight[rs[j] * out.cols + cs[c]] += f[mask] * g[mask | bit] / total;
    }
  }
  return std::log(total);
}

MatchingProblem restrict(const MatchingProblem& p, const std::vector<std::size_t>& rs,
                         const std::vector<std::size_t>& cs) {
  MatchingProblem sub(rs.size(), cs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    for (std::size_t j = 0; j < cs.size(); ++j) sub.set(i, j, p.at(rs[i], cs[j]));
  }
  return sub;
}

}  // namespace

MatchingMarginals exact_marginals(const MatchingProblem& problem, std::size_t column_limit) {
  column_limit = std::min<std::size_t>(column_limit, 24);
  MatchingMarginals out;
  out.rows = problem.rows;
  out.cols = problem.cols;
  out.weight.assign(problem.rows * problem.cols, 0.0);
  const auto comps = components_of(problem);
  for (std::size_t k = 0; k < comps.rows.size(); ++k) {
    const auto& rs = comps.rows[k];
    const auto& cs = comps.cols[k];
    if (rs.size() > cs.size()) no_matching(rs.size(), cs.size());
    if (complete(problem, rs, cs)) {
      const double w = 1.0 / static_cast<double>(cs.size());
      for (auto r : rs) {
        for (auto c : cs) out.weight[r * out.cols + c] = w;
      }
      out.log_matchings += std::lgamma(static_cast<double>(cs.size()) + 1.0) -
                           std::lgamma(static_cast<double>(cs.size() - rs.size()) + 1.0);
    } else if (cs.size() <= column_limit) {
      out.log_matchings += subset_dp(problem, rs, cs, out);
    } else {
      const auto approx = candidate_marginals(restrict(problem, rs, cs));
      for (std::size_t i = 0; i < rs.size(); ++i) {
        for (std::size_t j = 0; j < cs.size(); ++j) {
          out.weight[rs[i] * out.cols + cs[j]] = approx.at(i, j);
        }
      }
      out.log_matchings += approx.log_matchings;
      out.exact = false;
    }
  }
  return out;
}

MatchingMarginals candidate_marginals(const MatchingProblem& problem) {
  const std::size_t R = problem.rows;
  const std::size_t C = problem.cols;
  std::vector<std::uint8_t> cand = problem.feasible;
  std::vector<std::size_t> count(R, 0);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) count[r] += cand[r * C + c];
  }
  // A row with a single candidate owns that column; no other row may use it.
  std::vector<bool> settled(R, false);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t r = 0; r < R; ++r) {
      if (count[r] == 0) no_matching(R, C);
      if (settled[r] || count[r] != 1) continue;
      settled[r] = true;
      std::size_t c = 0;
      while (!cand[r * C + c]) ++c;
      for (std::size_t o = 0; o < R; ++o) {
        if (o != r && cand[o * C + c]) {
          cand[o * C + c] = 0;
          --count[o];
          changed = true;
        }
      }
    }
  }
  MatchingMarginals out;
  out.rows = R;
  out.cols = C;
  out.exact = false;
  out.weight.assign(R * C, 0.0);
  for (std::size_t r = 0; r < R; ++r) {
    if (count[r] == 0) no_matching(R, C);
    const double w = 1.0 / static_cast<double>(count[r]);
    for (std::size_t c = 0; c < C; ++c) {
      if (cand[r * C + c]) out.weight[r * C + c] = w;
    }
    out.log_matchings += std::log(static_cast<double>(count[r]));
  }
  return out;
}

}  // namespace pdn
