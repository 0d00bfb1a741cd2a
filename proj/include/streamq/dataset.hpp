#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "streamq/engine.hpp"
#include "streamq/types.hpp"

namespace streamq {

class SchemaError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Streaming reader for the dataset-file format: delimited text (comma or
// tab, sniffed from the header) with a header row naming the columns
//
//   index     stream position, strictly increasing integer   (required)
//   proxy     proxy score, clamped to [0,1] with a warning    (required)
//   stat      statistic value f(x)                            (oracle column)
//   matches   predicate flag, 0 or 1; defaults to 1 if absent (oracle column)
//   timestamp accepted and ignored                            (optional)
//
// Rows stream one at a time; the file is never materialized. Schema
// violations report the offending row number.
class DatasetReader final : public RecordSource {
public:
    // `need_labels` demands the stat column (column-backed oracle mode);
    // without it records carry no inline labels and an external oracle must
    // be used.
    explicit DatasetReader(const std::string& path, bool need_labels = true);

    std::optional<Record> next() override;

    uint64_t rows_read() const { return rows_read_; }
    uint64_t clamped_proxies() const { return clamped_proxies_; }
    bool has_labels() const { return col_stat_ >= 0; }

private:
    [[noreturn]] void fail(const std::string& what) const;

    std::ifstream in_;
    std::string path_;
    char delim_ = ',';
    int col_index_ = -1, col_proxy_ = -1, col_stat_ = -1, col_matches_ = -1,
        col_timestamp_ = -1;
    size_t columns_ = 0;
    uint64_t rows_read_ = 0;
    uint64_t line_no_ = 1;  // header consumed in the constructor
    std::optional<uint64_t> prev_index_;
    uint64_t clamped_proxies_ = 0;
};

// Writes records in the same format (index,proxy,stat,matches).
void write_dataset(const std::string& path, std::span<const Record> records);

// Ground truth for error measurement: the exact per-segment and full-query
// answers in the query's answer units. AVG is undefined (NaN) on segments
// with no matching records; COUNT and SUM are 0 there.
struct TruthTable {
    std::vector<double> per_segment;
    double full = 0.0;
    uint64_t records = 0;  // records inside the query duration
};

// Incremental truth computation shared by the file and in-memory paths.
class TruthAccumulator {
public:
    TruthAccumulator(Aggregate agg, uint64_t segment_length,
                     std::optional<uint64_t> duration);
    // Returns false once the duration is exhausted.
    bool add(const OracleOutcome& outcome);
    TruthTable finish();

private:
    void close_segment();

    Aggregate agg_;
    uint64_t segment_length_;
    std::optional<uint64_t> duration_;
    uint64_t consumed_ = 0, in_segment_ = 0;
    uint64_t seg_matched_ = 0, all_matched_ = 0;
    double seg_sum_ = 0.0, all_sum_ = 0.0;
    TruthTable table_;
};

TruthTable compute_truth(const std::string& path, Aggregate agg,
                         uint64_t segment_length,
                         std::optional<uint64_t> duration);

TruthTable compute_truth(std::span<const Record> records, Aggregate agg,
                         uint64_t segment_length,
                         std::optional<uint64_t> duration);

}  // namespace streamq
