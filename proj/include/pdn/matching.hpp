#pragma once

#include <cstdint>
#include <vector>

namespace pdn {

/// Bipartite feasibility between outbound parcels (rows) and inbound parcels
/// (columns) of one mix node.
struct MatchingProblem {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> feasible;  // row-major, rows * cols

  MatchingProblem() = default;
  MatchingProblem(std::size_t r, std::size_t c) : rows(r), cols(c), feasible(r * c, 0) {}

  bool at(std::size_t r, std::size_t c) const { return feasible[r * cols + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v = true) { feasible[r * cols + c] = v ? 1 : 0; }
};

/// Posterior over assignments under a uniform prior on every matching that
/// pairs each row with a distinct feasible column.
struct MatchingMarginals {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weight;  // P(row r came from column c), row-major
  double log_matchings = 0.0;  // natural log of the number of consistent matchings
  bool exact = true;           // false when a component fell back to candidate mode

  double at(std::size_t r, std::size_t c) const { return weight[r * cols + c]; }
};

/// Connected components larger than this many columns use candidate mode.
inline constexpr std::size_t kExactColumnLimit = 20;

/// Exact marginals. Components are solved independently: complete blocks in
/// closed form, the rest by subset dynamic programming over columns.
/// Throws Infeasible when no consistent matching exists.
MatchingMarginals exact_marginals(const MatchingProblem& problem,
                                  std::size_t column_limit = kExactColumnLimit);

/// Per-row uniform weights over candidate columns, after propagating forced
/// assignments. Throws Infeasible when some row has no candidate.
MatchingMarginals candidate_marginals(const MatchingProblem& problem);

}  // namespace pdn
