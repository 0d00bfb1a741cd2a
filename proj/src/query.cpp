#include "streamq/query.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <vector>

namespace streamq {

double Interval::seconds() const {
    switch (unit) {
        case IntervalUnit::Seconds: return magnitude;
        case IntervalUnit::Minutes: return magnitude * 60.0;
        case IntervalUnit::Hours: return magnitude * 3600.0;
        default: throw std::logic_error("seconds() on a count interval");
    }
}

std::optional<uint64_t> Interval::records(std::optional<double> rate) const {
    if (is_count()) return static_cast<uint64_t>(std::llround(magnitude));
    if (!rate) return std::nullopt;
    return static_cast<uint64_t>(std::llround(seconds() * *rate));
}

std::string_view to_string(ParseCode code) {
    switch (code) {
        case ParseCode::unexpected_token: return "unexpected-token";
        case ParseCode::unknown_aggregate: return "unknown-aggregate";
        case ParseCode::missing_select: return "missing-select";
        case ParseCode::missing_from: return "missing-from";
        case ParseCode::missing_tumble: return "missing-tumble";
        case ParseCode::missing_oracle_limit: return "missing-oracle-limit";
        case ParseCode::missing_using: return "missing-using";
        case ParseCode::bad_number: return "bad-number";
        case ParseCode::bad_interval_unit: return "bad-interval-unit";
        case ParseCode::nonpositive_limit: return "nonpositive-limit";
        case ParseCode::nonpositive_interval: return "nonpositive-interval";
        case ParseCode::fractional_count: return "fractional-count";
        case ParseCode::duration_too_short: return "duration-too-short";
        case ParseCode::duplicate_where: return "duplicate-where";
        case ParseCode::trailing_input: return "trailing-input";
    }
    return "parse-error";
}

std::string Diagnostic::format() const {
    return std::to_string(line) + ":" + std::to_string(column) + ": " +
           std::string(to_string(code)) + ": " + message;
}

namespace {

enum class TokKind { Ident, Number, String, Punct, End };

struct Token {
    TokKind kind = TokKind::End;
    std::string text;   // idents uppercased separately via upper()
    int line = 1;
    int column = 1;
};

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    return out;
}

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    Token next() {
        skip_space();
        Token tok;
        tok.line = line_;
        tok.column = column_;
        if (pos_ >= text_.size()) return tok;
        const char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            tok.kind = TokKind::Ident;
            while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                           text_[pos_] == '_'))
                tok.text.push_back(advance());
            return tok;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            tok.kind = TokKind::Number;
            while (pos_ < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == ',' || text_[pos_] == '.'))
                tok.text.push_back(advance());
            return tok;
        }
        if (c == '\'') {
            tok.kind = TokKind::String;
            advance();
            while (pos_ < text_.size() && text_[pos_] != '\'')
                tok.text.push_back(advance());
            if (pos_ >= text_.size())
                throw ParseError({ParseCode::unexpected_token, tok.line,
                                  tok.column, "unterminated quoted literal"});
            advance();
            return tok;
        }
        tok.kind = TokKind::Punct;
        tok.text.push_back(advance());
        return tok;
    }

private:
    char advance() {
        const char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        return c;
    }
    void skip_space() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_])))
            advance();
    }

    std::string_view text_;
    size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
};

class Parser {
public:
    explicit Parser(std::string_view text) : lexer_(text) { shift(); }

    QuerySpec parse() {
        QuerySpec spec;
        expect_keyword("SELECT", ParseCode::missing_select);
        spec.agg = parse_aggregate();
        expect_punct("(");
        spec.expr = parse_expr_ref();
        expect_punct(")");
        expect_keyword("FROM", ParseCode::missing_from);
        spec.source = expect_ident("dataset name");

        if (at_keyword("WHERE")) spec.predicate = parse_where();

        expect_keyword("TUMBLE", ParseCode::missing_tumble);
        expect_punct("(");
        spec.tumble_column = expect_ident("tumble column");
        expect_punct(",");
        spec.tumble = parse_interval();
        expect_punct(")");

        // Accepted after TUMBLE as well; canonical order puts it before.
        if (at_keyword("WHERE")) {
            if (spec.predicate)
                fail(ParseCode::duplicate_where, "WHERE given twice");
            spec.predicate = parse_where();
        }

        expect_keyword("ORACLE", ParseCode::missing_oracle_limit);
        expect_keyword("LIMIT", ParseCode::missing_oracle_limit);
        spec.oracle_limit = parse_limit();

        if (at_keyword("DURATION")) {
            shift();
            spec.duration = parse_interval();
        }

        expect_keyword("USING", ParseCode::missing_using);
        spec.proxy = parse_expr_ref();

        if (cur_.kind == TokKind::Punct && cur_.text == ";") shift();
        if (cur_.kind != TokKind::End)
            fail(ParseCode::trailing_input,
                 "unexpected input after USING clause");

        validate(spec);
        return spec;
    }

private:
    [[noreturn]] void fail(ParseCode code, std::string message) {
        throw ParseError({code, cur_.line, cur_.column, std::move(message)});
    }

    void shift() { cur_ = lexer_.next(); }

    bool at_keyword(std::string_view kw) const {
        return cur_.kind == TokKind::Ident && upper(cur_.text) == kw;
    }

    void expect_keyword(std::string_view kw, ParseCode code) {
        if (!at_keyword(kw))
            fail(code, "expected " + std::string(kw) + ", found '" +
                           cur_.text + "'");
        shift();
    }

    void expect_punct(std::string_view p) {
        if (cur_.kind != TokKind::Punct || cur_.text != p)
            fail(ParseCode::unexpected_token,
                 "expected '" + std::string(p) + "', found '" + cur_.text +
                     "'");
        shift();
    }

    std::string expect_ident(std::string_view what) {
        if (cur_.kind != TokKind::Ident)
            fail(ParseCode::unexpected_token,
                 "expected " + std::string(what) + ", found '" + cur_.text +
                     "'");
        std::string name = cur_.text;
        shift();
        return name;
    }

    Aggregate parse_aggregate() {
        if (cur_.kind != TokKind::Ident)
            fail(ParseCode::unknown_aggregate, "expected AVG, SUM or COUNT");
        const std::string name = upper(cur_.text);
        if (name == "AVG") return shift(), Aggregate::Avg;
        if (name == "SUM") return shift(), Aggregate::Sum;
        if (name == "COUNT") return shift(), Aggregate::Count;
        fail(ParseCode::unknown_aggregate,
             "unsupported aggregate '" + cur_.text + "'");
    }

    ExprRef parse_expr_ref() {
        ExprRef ref;
        ref.name = expect_ident("expression");
        if (cur_.kind == TokKind::Punct && cur_.text == "(") {
            shift();
            ref.arg = expect_ident("expression argument");
            expect_punct(")");
        }
        return ref;
    }

    ExprRef parse_where() {
        shift();  // WHERE
        return parse_expr_ref();
    }

    double parse_magnitude(ParseCode overflow_code) {
        std::string digits;
        if (cur_.kind == TokKind::Number) {
            digits = cur_.text;
        } else if (cur_.kind == TokKind::String) {
            digits = cur_.text;
        } else {
            fail(ParseCode::bad_number,
                 "expected a number, found '" + cur_.text + "'");
        }
        digits.erase(std::remove(digits.begin(), digits.end(), ','),
                     digits.end());
        double value = 0.0;
        const auto [ptr, ec] =
            std::from_chars(digits.data(), digits.data() + digits.size(), value);
        if (ec != std::errc{} || ptr != digits.data() + digits.size())
            fail(overflow_code, "malformed number '" + cur_.text + "'");
        shift();
        return value;
    }

    uint64_t parse_limit() {
        const int line = cur_.line, column = cur_.column;
        const double value = parse_magnitude(ParseCode::bad_number);
        if (value < 1.0 || value != std::floor(value))
            throw ParseError({ParseCode::nonpositive_limit, line, column,
                              "ORACLE LIMIT must be a positive integer"});
        return static_cast<uint64_t>(value);
    }

    Interval parse_interval() {
        expect_keyword("INTERVAL", ParseCode::unexpected_token);
        const int line = cur_.line, column = cur_.column;
        Interval interval;
        interval.magnitude = parse_magnitude(ParseCode::bad_number);
        interval.unit = parse_unit();
        if (interval.magnitude <= 0.0)
            throw ParseError({ParseCode::nonpositive_interval, line, column,
                              "interval must be positive"});
        if (interval.is_count() &&
            interval.magnitude != std::floor(interval.magnitude))
            throw ParseError({ParseCode::fractional_count, line, column,
                              "record-count interval must be an integer"});
        return interval;
    }

    IntervalUnit parse_unit() {
        if (cur_.kind != TokKind::Ident)
            fail(ParseCode::bad_interval_unit, "expected an interval unit");
        const std::string unit = upper(cur_.text);
        shift();
        if (unit == "RECORDS" || unit == "RECORD") return IntervalUnit::Records;
        if (unit == "FRAMES" || unit == "FRAME") return IntervalUnit::Frames;
        if (unit == "SECONDS" || unit == "SECOND") return IntervalUnit::Seconds;
        if (unit == "MINUTES" || unit == "MINUTE") return IntervalUnit::Minutes;
        if (unit == "HOURS" || unit == "HOUR") return IntervalUnit::Hours;
        throw ParseError({ParseCode::bad_interval_unit, cur_.line, cur_.column,
                          "unknown interval unit '" + unit + "'"});
    }

    void validate(const QuerySpec& spec) {
        if (!spec.duration) return;
        const Interval& d = *spec.duration;
        // Comparable only within a dimension; mixed units are checked at
        // execution time once a rate is known.
        if (d.is_count() && spec.tumble.is_count()) {
            if (d.magnitude < spec.tumble.magnitude)
                fail(ParseCode::duration_too_short,
                     "DURATION shorter than the tumbling interval");
        } else if (!d.is_count() && !spec.tumble.is_count()) {
            if (d.seconds() < spec.tumble.seconds())
                fail(ParseCode::duration_too_short,
                     "DURATION shorter than the tumbling interval");
        }
    }

    Lexer lexer_;
    Token cur_;
};

std::string render_magnitude(double value) {
    if (value == std::floor(value) && std::abs(value) < 1e18) {
        return std::to_string(static_cast<long long>(value));
    }
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::string render_unit(IntervalUnit unit) {
    switch (unit) {
        case IntervalUnit::Records: return "RECORDS";
        case IntervalUnit::Frames: return "FRAMES";
        case IntervalUnit::Seconds: return "SECONDS";
        case IntervalUnit::Minutes: return "MINUTES";
        case IntervalUnit::Hours: return "HOURS";
    }
    return "RECORDS";
}

std::string render_interval(const Interval& interval) {
    return "INTERVAL '" + render_magnitude(interval.magnitude) + "' " +
           render_unit(interval.unit);
}

std::string render_expr(const ExprRef& ref) {
    return ref.arg ? ref.name + "(" + *ref.arg + ")" : ref.name;
}

}  // namespace

QuerySpec parse_query(std::string_view text) {
    return Parser(text).parse();
}

std::optional<QuerySpec> try_parse_query(std::string_view text,
                                         Diagnostic* diag) {
    try {
        return parse_query(text);
    } catch (const ParseError& err) {
        if (diag) *diag = err.diagnostic();
        return std::nullopt;
    }
}

std::string render_query(const QuerySpec& spec) {
    std::string out;
    out += "SELECT " + to_string(spec.agg) + "(" + render_expr(spec.expr) +
           ") FROM " + spec.source + "\n";
    if (spec.predicate) out += "WHERE " + render_expr(*spec.predicate) + "\n";
    out += "TUMBLE(" + spec.tumble_column + ", " +
           render_interval(spec.tumble) + ")\n";
    out += "ORACLE LIMIT " + std::to_string(spec.oracle_limit) + "\n";
    if (spec.duration)
        out += "DURATION " + render_interval(*spec.duration) + "\n";
    out += "USING " + render_expr(spec.proxy) + "\n";
    return out;
}

}  // namespace streamq
