#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "streamq/types.hpp"

namespace streamq {

// Named function applied to a field (count(car)) or a bare field reference.
// Both are opaque to the parser; they resolve against the dataset's column
// registry at execution time. A bare field has no argument and is flagged
// for the executor to interpret.
struct ExprRef {
    std::string name;
    std::optional<std::string> arg;

    bool is_call() const { return arg.has_value(); }
    bool operator==(const ExprRef&) const = default;
};

enum class IntervalUnit { Records, Frames, Seconds, Minutes, Hours };

// FRAMES and RECORDS are synonyms (count-based); time units convert to a
// record horizon only when the source declares a rate (records per second).
struct Interval {
    double magnitude = 0.0;
    IntervalUnit unit = IntervalUnit::Records;

    bool is_count() const {
        return unit == IntervalUnit::Records || unit == IntervalUnit::Frames;
    }
    double seconds() const;
    // Record horizon; nullopt for time intervals without a declared rate.
    std::optional<uint64_t> records(std::optional<double> rate) const;
    bool operator==(const Interval&) const = default;
};

struct QuerySpec {
    Aggregate agg = Aggregate::Avg;
    ExprRef expr;
    std::string source;
    std::optional<ExprRef> predicate;
    std::string tumble_column;
    Interval tumble;
    uint64_t oracle_limit = 0;
    std::optional<Interval> duration;
    ExprRef proxy;

    bool operator==(const QuerySpec&) const = default;
};

enum class ParseCode {
    unexpected_token,
    unknown_aggregate,
    missing_select,
    missing_from,
    missing_tumble,
    missing_oracle_limit,
    missing_using,
    bad_number,
    bad_interval_unit,
    nonpositive_limit,
    nonpositive_interval,
    fractional_count,
    duration_too_short,
    duplicate_where,
    trailing_input,
};

std::string_view to_string(ParseCode code);

struct Diagnostic {
    ParseCode code = ParseCode::unexpected_token;
    int line = 1;
    int column = 1;
    std::string message;

    std::string format() const;  // "line:col: code: message"
};

class ParseError : public std::runtime_error {
public:
    explicit ParseError(Diagnostic diag)
        : std::runtime_error(diag.format()), diagnostic_(std::move(diag)) {}
    const Diagnostic& diagnostic() const { return diagnostic_; }

private:
    Diagnostic diagnostic_;
};

// Parses the query language:
//
//   SELECT { AVG | SUM | COUNT } ( field | EXPR(field) )
//   FROM streaming_dataset
//   [WHERE filter_predicate]
//   TUMBLE(column, interval)
//   ORACLE LIMIT o
//   [DURATION interval]
//   USING proxy
//
// Keywords are case-insensitive, numeric literals may carry comma
// separators, interval magnitudes may be quoted, and WHERE is accepted
// either before or after TUMBLE (canonicalized to before). Throws
// ParseError with a positioned diagnostic on any malformed input.
QuerySpec parse_query(std::string_view text);

// Non-throwing variant.
std::optional<QuerySpec> try_parse_query(std::string_view text,
                                         Diagnostic* diag = nullptr);

// Canonical text form: uppercase keywords, clause-per-line in grammar
// order, digit separators stripped. parse_query(render_query(s)) == s.
std::string render_query(const QuerySpec& spec);

}  // namespace streamq
