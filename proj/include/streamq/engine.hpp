#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "streamq/estimator.hpp"
#include "streamq/ewma.hpp"
#include "streamq/reservoir.hpp"
#include "streamq/rng.hpp"
#include "streamq/types.hpp"

namespace streamq {

// Expensive per-record model. Every invoke() is charged against the budget;
// nullopt means the call failed (it still counts, the sample is dropped).
class Oracle {
public:
    virtual ~Oracle() = default;
    virtual std::optional<OracleOutcome> invoke(const Record& rec) = 0;
    // Called when a new accounting window (segment, or whole query for the
    // uniform baseline) opens with the stated invocation limit.
    virtual void begin_window(uint64_t limit) { (void)limit; }
};

// Pull-based record stream.
class RecordSource {
public:
    virtual ~RecordSource() = default;
    virtual std::optional<Record> next() = 0;
};

class VectorSource final : public RecordSource {
public:
    explicit VectorSource(std::span<const Record> records)
        : records_(records) {}
    std::optional<Record> next() override {
        if (pos_ >= records_.size()) return std::nullopt;
        return records_[pos_++];
    }

private:
    std::span<const Record> records_;
    size_t pos_ = 0;
};

// Seed-stream tags; every random stream in a run is derived from the run
// seed with derive_seed(seed, tag, ...). The reservoir schedule is keyed by
// (segment, stratum) and shared with the stratified baseline so that lesion
// configurations are comparable draw-for-draw.
namespace seed_tag {
inline constexpr uint64_t reservoir = 1;  // derive(seed, tag, segment, stratum)
inline constexpr uint64_t pilot = 2;      // derive(seed, tag)
inline constexpr uint64_t bootstrap = 3;  // derive(seed, tag)
}  // namespace seed_tag

struct EngineConfig {
    BudgetPlan plan;
    uint64_t segment_length = 0;       // records per tumbling segment
    std::optional<uint64_t> duration;  // total records; absent = run to end
    Aggregate agg = Aggregate::Avg;

    // Smoothing of strata boundaries and allocations: EWMA with plan.alpha,
    // or a running mean over all completed segments.
    bool history_average = false;

    // Lesion switches: freeze the stratification and/or use a uniform
    // sample allocation instead of the adaptive one.
    bool fixed_strata = false;
    std::vector<double> fixed_boundaries;  // required with fixed_strata
    bool fixed_alloc = false;

    // Uniform pilot pass over segment 1. May only be disabled when both
    // fixed_strata and fixed_alloc are set (nothing is left to initialize).
    bool pilot = true;

    enum class CiMode { None, Final, PerSegment };
    CiMode ci_mode = CiMode::None;
    double confidence = 0.95;
    int bootstrap_rounds = 1000;
};

// Per-segment internals kept for diagnostics and experiments.
struct SegmentTrace {
    Stratification strata;          // boundaries used to route the segment
    std::vector<double> dyn_alloc;  // smoothed dynamic allocation (empty for pilot)
    std::vector<uint64_t> capacities;
};

struct EngineResult {
    QueryEstimate estimate;
    std::vector<SegmentStats> history;
    std::vector<SegmentEstimate> emitted;
    std::vector<SegmentTrace> traces;
    uint64_t oracle_calls = 0;
    uint64_t failed_oracle_calls = 0;
};

// Empirical quantile stratification: boundary b_k is the smallest score v
// with at least a k/K fraction of the scores <= v (nearest-rank rule).
Stratification stratify_by_quantile(std::span<const double> scores, int k);

// Smoothed stratification for the next segment: observes the previous
// segment's quantile boundaries and returns the updated state, re-sorted
// and clamped to [0,1].
Stratification get_strata(EwmaState& strata_ewma,
                          std::span<const double> prev_scores, int k);

// Raw per-segment allocation: w_hat * sigma_hat normalized. When every
// product is zero, falls back to w_hat-proportional weights, and to uniform
// when those vanish too.
std::vector<double> raw_allocation(const SegmentStats& stats);

// Smoothed allocation for the next segment composed with the defensive
// share: observes raw_allocation(prev) and returns
// (N1/K + N2 * smoothed_k) / N, which sums to 1.
Allocation get_alloc(EwmaState& alloc_ewma, const SegmentStats& prev,
                     const BudgetPlan& plan);

// The segment-loop engine: pilots the first segment, then per segment
// restratifies, reallocates, reservoir-samples each stratum, resolves the
// oracle on the survivors and emits a running estimate.
class StreamEngine {
public:
    StreamEngine(EngineConfig config, Oracle& oracle, uint64_t seed);

    // Processes the source until `duration` records (when set) or stream
    // end, invoking `sink` as each segment closes.
    EngineResult run(RecordSource& source,
                     const std::function<void(const SegmentEstimate&)>& sink = {});

    std::span<const CellSample> samples() const { return samples_; }

private:
    struct PrevSegment {
        std::vector<double> quantiles;
        std::vector<double> raw_alloc;
        bool nonempty = false;
    };

    void begin_segment();
    void ingest(const Record& rec);
    void close_segment();
    std::vector<std::pair<int, OracleOutcome>> resolve(
        std::vector<Record> survivors, int stratum_of_all,
        const Stratification& strat);

    EngineConfig config_;
    Oracle& oracle_;
    uint64_t seed_;

    EwmaState strata_ewma_;
    EwmaState alloc_ewma_;
    PrevSegment prev_;

    int segment_ = 0;  // 1-based; 0 = not started
    uint64_t records_in_segment_ = 0;
    std::vector<double> proxy_buffer_;
    Stratification strata_;
    std::vector<uint64_t> capacities_;
    std::vector<Reservoir> reservoirs_;
    std::vector<std::unique_ptr<Rng>> reservoir_rngs_;
    std::vector<uint64_t> counts_;
    std::optional<Reservoir> pilot_reservoir_;
    std::optional<Rng> pilot_rng_;

    std::vector<SegmentStats> history_;
    std::vector<CellSample> samples_;
    EngineResult result_;
    const std::function<void(const SegmentEstimate&)>* sink_ = nullptr;
};

}  // namespace streamq
