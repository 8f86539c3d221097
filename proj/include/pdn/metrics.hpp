#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pdn/adversary.hpp"
#include "pdn/sim_engine.hpp"

namespace pdn {

/// Entropy in bits of a (not necessarily normalized) weight vector.
double shannon_bits(std::span<const double> weights);

/// Support size of the target outbound parcel's candidate set.
/// Throws UnknownTarget when the posterior does not cover it.
std::size_t anonymity_set_size(const Posterior& posterior, SurfaceId target);
double linkage_entropy(const Posterior& posterior, SurfaceId target);

std::size_t anonymity_set_size(const Linkage& linkage);
double linkage_entropy(const Linkage& linkage);

/// Summary statistic that may have no samples.
using Stat = std::optional<double>;

struct PrivacyReport {
  // Per parcel leaving a mix node: who it was on the way in.
  std::size_t packages = 0;
  Stat anon_mean;
  Stat anon_min;
  Stat entropy_mean;
  Stat map_accuracy;
  // Per delivered order: which home the vendor's parcel ended at.
  std::size_t orders = 0;
  Stat order_anon_mean;
  Stat order_anon_min;
  Stat order_entropy_mean;
  Stat order_map_accuracy;
  Stat reident_fraction;
  std::vector<std::pair<std::string, double>> link_exposed;  // rate per collusion set
};

struct EfficiencyReport {
  std::size_t delivered = 0;
  std::size_t truncated = 0;  // orders not delivered by the horizon
  Stat latency_mean;
  Stat latency_p50;
  Stat latency_p95;
  Stat cost_mean;
  Stat hops_mean;
  std::uint64_t redistributed = 0;  // items received by secondary recipients
  std::uint64_t donated = 0;
  std::uint64_t pman_residual = 0;
  double overhead_cost = 0.0;
};

/// Linear-interpolation quantile of unsorted samples; nullopt when empty.
Stat quantile(std::vector<double> samples, double q);

/// Privacy metrics from the artifacts an analyst would hold: the observation
/// log and every view (sniffer views included). Ground truth comes from the
/// views; attack posteriors only from the log and the public route length.
PrivacyReport assess_privacy(const ObservationLog& log, std::span<const KnowledgeView> views,
                             std::span<const MixNodeInfo> mix_nodes,
                             std::optional<std::size_t> route_hops, const AttackConfig& attacks,
                             const Rng& rng);

EfficiencyReport assess_efficiency(const RunResult& run);

struct Summary {
  PrivacyReport privacy;
  EfficiencyReport efficiency;
};

/// Deterministic aggregation of a finished run. Re-identification draws from
/// Rng(run seed).split("reident").
Summary summarize(const RunResult& run, const AttackConfig& attacks);

/// Long-form rows (metric, value) in a fixed order; empty statistics read NA.
std::vector<std::pair<std::string, std::string>> summary_rows(const Summary& s);

struct FrontierRow {
  double knob = 0.0;
  Summary summary;
};

/// Rows sorted by knob value. Throws InvalidParam with fewer than 2 points.
std::vector<FrontierRow> frontier(std::vector<FrontierRow> points);

/// Fixed wide header and rows for frontier.csv.
std::string frontier_header();
std::string frontier_line(const FrontierRow& row);

std::string format_stat(const Stat& s);

}  // namespace pdn
