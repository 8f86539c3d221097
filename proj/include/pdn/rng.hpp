#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace pdn {

/// Seeded random stream with stable labeled substreams.
///
/// Only the raw 64-bit engine output of std::mt19937_64 is used; every
/// distribution is implemented here so that a seed produces the same draws
/// on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent substream keyed by `label`. Depends only on this stream's
  /// seed, never on how many values were already drawn.
  Rng split(std::string_view label) const;
  Rng split(std::uint64_t index) const;

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 bits of precision.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  double exponential(double mean);
  bool bernoulli(double p) { return uniform() < p; }
  /// Index drawn proportionally to the nonnegative `weights`.
  std::size_t weighted_index(std::span<const double> weights);

  template <class It>
  void shuffle(It first, It last) {
    auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      auto j = below(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

/// Nonnegative delay/latency distribution.
struct Distribution {
  enum class Kind { Constant, Uniform, Exponential };

  Kind kind = Kind::Constant;
  // Constant: a = value. Uniform: [a, b]. Exponential: a = mean.
  double a = 0.0;
  double b = 0.0;

  static Distribution constant(double v) { return {Kind::Constant, v, 0.0}; }
  static Distribution uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
  static Distribution exponential(double mean) { return {Kind::Exponential, mean, 0.0}; }

  double sample(Rng& rng) const;
  double mean() const;

  friend bool operator==(const Distribution&, const Distribution&) = default;
};

}  // namespace pdn
