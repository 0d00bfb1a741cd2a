#pragma once

#include <optional>
#include <span>
#include <utility>

#include "streamq/types.hpp"

namespace streamq {

// Builds per-stratum tallies and estimates for one segment from the
// oracle-resolved samples. `samples` pairs each outcome with the stratum it
// was drawn from; `counts` is the number of records routed to each stratum.
// Degenerate cells are defined, not errors: p_hat = 0 with no samples,
// mu_hat = 0 with no matches, sigma_hat = 0 with fewer than two matches.
SegmentStats segment_stats(
    std::span<const std::pair<int, OracleOutcome>> samples,
    std::span<const uint64_t> counts);

// Point estimate of the query mean over the whole history: the average of
// the cell means mu_tk weighted by p_tk |D_tk|. Empty when no cell carries
// weight (no predicate-matching samples observed yet).
std::optional<double> try_prediction(std::span<const SegmentStats> history);

// Same, but throws std::runtime_error on zero total weight.
double get_prediction(std::span<const SegmentStats> history);

// Estimated number of predicate-matching records, sum_tk p_tk |D_tk|.
double matching_population(std::span<const SegmentStats> history);

// The query answer for a given aggregate: AVG is the prediction itself,
// COUNT is the matching population, SUM their product.
std::optional<double> try_aggregate_estimate(
    Aggregate agg, std::span<const SegmentStats> history);
double aggregate_estimate(Aggregate agg,
                          std::span<const SegmentStats> history);

struct ConfidenceInterval {
    double low = 0.0;
    double high = 0.0;
};

// Percentile bootstrap over the flat sample list. Each round resamples with
// replacement within every (segment, stratum) cell, rebuilds the per-cell
// estimates and recomputes the aggregate estimator; the interval is the
// empirical (1-c)/2 and 1-(1-c)/2 quantiles over rounds, widened if needed
// to contain the full-sample point estimate. `history` supplies the routed
// counts per cell. Deterministic for a given seed. Rounds that draw no
// matching sample at all have an undefined estimator and are skipped.
ConfidenceInterval bootstrap_ci(std::span<const CellSample> samples,
                                std::span<const SegmentStats> history,
                                double confidence, int rounds, uint64_t seed,
                                Aggregate agg = Aggregate::Avg);

}  // namespace streamq
