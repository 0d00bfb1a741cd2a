#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "streamq/dataset.hpp"
#include "streamq/engine.hpp"
#include "streamq/query.hpp"
#include "streamq/types.hpp"

namespace streamq {

// ---- metrics -------------------------------------------------------------

double median(std::vector<double> values);
double geometric_mean(std::span<const double> values);

struct SegmentScore {
    int segment = 0;
    double estimate = 0.0;
    double truth = 0.0;
    double sq_error = 0.0;
};

// Per-segment scores against ground truth. Segments whose truth is
// undefined (NaN) are skipped; per-segment RMSE of a single trial is the
// absolute error.
std::vector<SegmentScore> score_segments(
    std::span<const std::pair<int, double>> estimates,
    std::span<const double> truth);

double median_segment_rmse(std::span<const SegmentScore> scores);

// ---- trial runner ----------------------------------------------------—--

struct MethodSpec {
    std::string name;  // inquest | uniform | fixed-stratified
    bool fixed_strata = false;
    bool fixed_alloc = false;
    bool history_average = false;

    std::string label() const;
};

struct BenchConfig {
    std::vector<MethodSpec> methods;
    std::vector<std::string> datasets;  // dataset file paths
    std::vector<uint64_t> budgets;      // total oracle budget NT per query
    int trials = 100;
    uint64_t base_seed = 1;
    int segments = 5;                  // T; per-segment budget N = NT / T
    int strata = 3;
    double alpha = 0.8;
    double defensive_frac = 0.1;
    Aggregate agg = Aggregate::Avg;
    std::optional<uint64_t> duration;  // records; default: whole file
    unsigned threads = 0;              // 0 = hardware concurrency
};

BenchConfig load_bench_config(const std::string& path);

struct TrialReport {
    std::string method;
    std::string dataset;
    uint64_t budget = 0;  // NT
    uint64_t seed = 0;
    std::vector<SegmentScore> segments;
    double median_segment_rmse = 0.0;
    double full_query_rmse = 0.0;
    uint64_t oracle_calls = 0;
    bool failed = false;
    std::string error;
};

struct AggregateRow {
    std::string method;
    std::string dataset;
    uint64_t budget = 0;
    int trials_ok = 0;
    int trials_failed = 0;
    double mean_median_rmse = 0.0;
    double mean_full_rmse = 0.0;
};

struct SummaryRow {  // per (method, budget), geometric mean across datasets
    std::string method;
    uint64_t budget = 0;
    double geo_mean_rmse = 0.0;
};

struct BenchResult {
    std::vector<TrialReport> reports;
    std::vector<AggregateRow> rows;
    std::vector<SummaryRow> summary;
};

// Pure re-aggregation: tables are a function of the trial reports alone.
std::vector<AggregateRow> aggregate_reports(
    std::span<const TrialReport> reports);
std::vector<SummaryRow> summarize(std::span<const AggregateRow> rows);

// Runs every (method, dataset, budget, trial) combination. Per-trial seeds
// derive from the base seed and the (dataset, budget, trial) coordinates,
// shared across methods so method comparisons are paired. Each dataset file
// is loaded once and shared read-only across trials. Failed trials are
// recorded and excluded from aggregates.
BenchResult run_trials(const BenchConfig& config);

// Serialization of trial reports (one JSON object per line).
void write_reports_jsonl(const std::string& path,
                         std::span<const TrialReport> reports);
std::vector<TrialReport> read_reports_jsonl(const std::string& path);

std::string format_aggregate_table(std::span<const AggregateRow> rows);
std::string format_summary_table(std::span<const SummaryRow> rows);

// ---- single-trial execution ----------------------------------------------

// One method run over an in-memory record stream; returns answer-unit
// per-segment estimates and the final estimate.
struct TrialOutcome {
    QueryEstimate estimate;
    uint64_t oracle_calls = 0;
};

TrialOutcome run_method(const MethodSpec& method,
                        std::span<const Record> records, Aggregate agg,
                        uint64_t total_budget, int segments_hint,
                        uint64_t segment_length,
                        std::optional<uint64_t> duration, int strata,
                        double alpha, double defensive_frac, uint64_t seed);

// ---- query execution (CLI `run`) ------------------------------------------

struct RunOptions {
    std::optional<double> rate;  // records per second, for time intervals
    std::string method = "inquest";
    bool fixed_strata = false;
    bool fixed_alloc = false;
    bool history_average = false;
    std::optional<int> strata;
    std::optional<double> alpha;
    std::optional<double> defensive_frac;
    std::optional<uint64_t> budget;    // overrides ORACLE LIMIT
    std::optional<uint64_t> window;    // overrides TUMBLE (records)
    std::optional<int> segments;       // split DURATION into T segments
    uint64_t seed = 1;
    std::string external_oracle;      // command; empty = column oracle
    bool with_ci = true;
    std::function<void(const SegmentEstimate&)> sink;  // real-time emission
};

struct RunOutcome {
    QueryEstimate estimate;
    std::vector<SegmentEstimate> emitted;
    TruthTable truth;            // defined when the file carries labels
    bool truth_available = false;
    uint64_t clamped_proxies = 0;
    uint64_t failed_oracle_calls = 0;
};

// Parses nothing: takes a validated spec, resolves intervals to records,
// wires the oracle and streams the dataset file through the chosen method.
RunOutcome execute_query(const QuerySpec& spec, const std::string& dataset,
                         const RunOptions& options);

}  // namespace streamq
