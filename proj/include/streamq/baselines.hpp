#pragma once

#include <optional>

#include "streamq/engine.hpp"
#include "streamq/types.hpp"

namespace streamq {

struct BaselineResult {
    QueryEstimate estimate;
    std::vector<SegmentStats> history;
    uint64_t oracle_calls = 0;
    uint64_t failed_oracle_calls = 0;
};

// Uniform sampling over the whole query: a single reservoir of capacity
// `total_budget` (NT) spanning every segment, oracle resolved on the
// survivors at the end. The per-segment estimates needed for segment-level
// error metrics are derived post hoc from the samples falling inside each
// segment, falling back to the cumulative estimate for segments without a
// matching sample. Throws when no sample matches the predicate at all.
BaselineResult uniform_baseline(RecordSource& source, Aggregate agg,
                                uint64_t total_budget,
                                uint64_t segment_length,
                                std::optional<uint64_t> duration,
                                Oracle& oracle, uint64_t seed);

// Stratified sampling with a fixed stratification and a fixed per-stratum
// budget of N/K samples per segment. Shares the engine's per-(segment,
// stratum) seed schedule, so it matches the engine run draw-for-draw when
// the engine is configured with the same frozen strata, a frozen uniform
// allocation and no pilot.
BaselineResult fixed_stratified_baseline(RecordSource& source, Aggregate agg,
                                         int budget_per_segment,
                                         const Stratification& strata,
                                         uint64_t segment_length,
                                         std::optional<uint64_t> duration,
                                         Oracle& oracle, uint64_t seed);

// The fixed stratification used throughout the evaluation.
Stratification default_fixed_strata(int k);

}  // namespace streamq
