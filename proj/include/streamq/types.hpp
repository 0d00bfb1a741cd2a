#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace streamq {

enum class Aggregate { Avg, Sum, Count };

std::string to_string(Aggregate agg);

// Result of one oracle invocation on a record: the predicate flag and the
// statistic value. For queries without a predicate, matches is always true.
struct OracleOutcome {
    bool matches = true;
    double stat = 0.0;
};

// One stream element. `truth` carries the record's payload (the labels a
// column-backed oracle would compute); the engine never reads it. `oracle`
// is set at most once, when the oracle is actually invoked on the record.
struct Record {
    uint64_t index = 0;
    double proxy = 0.0;
    std::optional<OracleOutcome> truth;
    std::optional<OracleOutcome> oracle;
};

// K proxy-score intervals partitioning [0,1]. Interior boundaries are
// ascending; stratum k covers [b_{k-1}, b_k) with b_0 = 0 implicit and the
// last stratum closed at 1. Coincident boundaries yield empty strata.
struct Stratification {
    std::vector<double> boundaries;  // size K-1

    int strata_count() const { return static_cast<int>(boundaries.size()) + 1; }
};

// Length-K vector of nonnegative budget fractions summing to 1.
struct Allocation {
    std::vector<double> fractions;

    int strata_count() const { return static_cast<int>(fractions.size()); }
    void validate() const;
};

// Per-segment oracle budget split into a defensive part N1, spread evenly
// across strata, and a dynamic part N2 steered by the allocation rule.
struct BudgetPlan {
    int total = 0;      // N
    int defensive = 0;  // N1
    int dynamic = 0;    // N2
    int strata = 1;     // K
    double alpha = 0.8;

    // Defensive floor of samples every stratum is entitled to.
    int defensive_floor() const {
        return static_cast<int>(
            std::lround(static_cast<double>(defensive) / strata));
    }
    void validate() const;
};

// Builds a plan from the user-facing parameterization: a per-segment budget
// and the fraction of it reserved for defensive sampling.
BudgetPlan make_plan(int budget, double defensive_frac, int strata,
                     double alpha);

// Per-stratum tallies and estimates for one segment.
struct StratumStats {
    uint64_t count = 0;    // records routed to the stratum, |D_tk|
    uint64_t sampled = 0;  // oracle-resolved samples, |X_tk|
    uint64_t matched = 0;  // predicate-matching samples, |X_tk+|
    double p_hat = 0.0;
    double mu_hat = 0.0;
    double sigma_hat = 0.0;
    double w_hat = 0.0;
};

struct SegmentStats {
    std::vector<StratumStats> strata;

    int strata_count() const { return static_cast<int>(strata.size()); }
    uint64_t total_count() const;
};

// One oracle-resolved sample, keyed by the (segment, stratum) cell it was
// drawn from. The flat list of these is the estimator's entire input.
struct CellSample {
    int segment = 0;
    int stratum = 0;
    OracleOutcome outcome;
};

// Final answer for a query: point estimate, bootstrap CI, the per-segment
// estimates and the number of oracle invocations spent.
struct QueryEstimate {
    double mu_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::vector<std::pair<int, double>> per_segment;
    uint64_t oracle_calls = 0;
};

// Per-segment record emitted on the engine's output channel as each segment
// closes. `estimate` is the running estimate over all history up to and
// including this segment (absent until the first matching sample);
// `segment_estimate` uses this segment's cells only and is absent when the
// segment produced no matching samples.
struct SegmentEstimate {
    int segment = 0;
    std::optional<double> estimate;
    std::optional<double> segment_estimate;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    uint64_t oracle_calls = 0;       // calls spent in this segment
    uint64_t budget_unused = 0;      // capacity left unspent (empty strata)
};

}  // namespace streamq
