#include "streamq/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <limits>

namespace streamq {

namespace {

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> fields;
    size_t start = 0;
    for (;;) {
        const size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool parse_double(std::string_view s, double& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_u64(std::string_view s, uint64_t& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

DatasetReader::DatasetReader(const std::string& path, bool need_labels)
    : in_(path), path_(path) {
    if (!in_) throw SchemaError(path + ": cannot open");
    std::string header;
    if (!std::getline(in_, header)) fail("empty file, no header");
    strip_cr(header);
    delim_ = header.find('\t') != std::string::npos ? '\t' : ',';
    const auto names = split(header, delim_);
    columns_ = names.size();
    for (size_t i = 0; i < names.size(); ++i) {
        const std::string name = lower(names[i]);
        const int idx = static_cast<int>(i);
        if (name == "index") col_index_ = idx;
        else if (name == "proxy") col_proxy_ = idx;
        else if (name == "stat") col_stat_ = idx;
        else if (name == "matches") col_matches_ = idx;
        else if (name == "timestamp") col_timestamp_ = idx;
        else fail("unknown column '" + std::string(names[i]) + "'");
    }
    if (col_index_ < 0) fail("missing required column 'index'");
    if (col_proxy_ < 0) fail("missing required column 'proxy'");
    if (need_labels && col_stat_ < 0)
        fail("missing oracle column 'stat' (required without an external oracle)");
}

void DatasetReader::fail(const std::string& what) const {
    throw SchemaError(path_ + ":" + std::to_string(line_no_) + ": " + what);
}

std::optional<Record> DatasetReader::next() {
    std::string line;
    for (;;) {
        if (!std::getline(in_, line)) return std::nullopt;
        ++line_no_;
        strip_cr(line);
        if (!line.empty()) break;
    }
    const auto fields = split(line, delim_);
    if (fields.size() != columns_)
        fail("expected " + std::to_string(columns_) + " fields, got " +
             std::to_string(fields.size()));

    Record rec;
    if (!parse_u64(fields[col_index_], rec.index))
        fail("bad index '" + std::string(fields[col_index_]) + "'");
    if (prev_index_ && rec.index <= *prev_index_)
        fail("index not strictly increasing");
    prev_index_ = rec.index;

    if (!parse_double(fields[col_proxy_], rec.proxy))
        fail("bad proxy '" + std::string(fields[col_proxy_]) + "'");
    if (rec.proxy < 0.0 || rec.proxy > 1.0 || std::isnan(rec.proxy)) {
        if (std::isnan(rec.proxy)) fail("proxy is NaN");
        rec.proxy = std::clamp(rec.proxy, 0.0, 1.0);
        ++clamped_proxies_;
    }

    if (col_stat_ >= 0) {
        OracleOutcome truth;
        if (!parse_double(fields[col_stat_], truth.stat))
            fail("bad stat '" + std::string(fields[col_stat_]) + "'");
        if (col_matches_ >= 0) {
            const auto f = fields[col_matches_];
            if (f == "0") truth.matches = false;
            else if (f == "1") truth.matches = true;
            else fail("matches must be 0 or 1, got '" + std::string(f) + "'");
        } else {
            truth.matches = true;
        }
        rec.truth = truth;
    }
    ++rows_read_;
    return rec;
}

void write_dataset(const std::string& path,
                   std::span<const Record> records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot write");
    out << "index,proxy,stat,matches\n";
    char buf[160];
    for (const Record& rec : records) {
        const OracleOutcome truth = rec.truth.value_or(OracleOutcome{});
        const int n = std::snprintf(buf, sizeof(buf), "%llu,%.17g,%.17g,%d\n",
                                    static_cast<unsigned long long>(rec.index),
                                    rec.proxy, truth.stat,
                                    truth.matches ? 1 : 0);
        out.write(buf, n);
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

TruthAccumulator::TruthAccumulator(Aggregate agg, uint64_t segment_length,
                                   std::optional<uint64_t> duration)
    : agg_(agg), segment_length_(segment_length), duration_(duration) {
    if (segment_length_ == 0)
        throw std::invalid_argument("truth: segment length is 0");
}

bool TruthAccumulator::add(const OracleOutcome& outcome) {
    if (duration_ && consumed_ >= *duration_) return false;
    if (in_segment_ == segment_length_) close_segment();
    ++consumed_;
    ++in_segment_;
    if (outcome.matches) {
        ++seg_matched_;
        ++all_matched_;
        seg_sum_ += outcome.stat;
        all_sum_ += outcome.stat;
    }
    return true;
}

void TruthAccumulator::close_segment() {
    double value = 0.0;
    switch (agg_) {
        case Aggregate::Avg:
            value = seg_matched_ > 0
                        ? seg_sum_ / static_cast<double>(seg_matched_)
                        : std::numeric_limits<double>::quiet_NaN();
            break;
        case Aggregate::Count:
            value = static_cast<double>(seg_matched_);
            break;
        case Aggregate::Sum:
            value = seg_sum_;
            break;
    }
    table_.per_segment.push_back(value);
    seg_matched_ = 0;
    seg_sum_ = 0.0;
    in_segment_ = 0;
}

TruthTable TruthAccumulator::finish() {
    if (in_segment_ > 0) close_segment();
    switch (agg_) {
        case Aggregate::Avg:
            table_.full = all_matched_ > 0
                              ? all_sum_ / static_cast<double>(all_matched_)
                              : std::numeric_limits<double>::quiet_NaN();
            break;
        case Aggregate::Count:
            table_.full = static_cast<double>(all_matched_);
            break;
        case Aggregate::Sum:
            table_.full = all_sum_;
            break;
    }
    table_.records = consumed_;
    return table_;
}

TruthTable compute_truth(const std::string& path, Aggregate agg,
                         uint64_t segment_length,
                         std::optional<uint64_t> duration) {
    DatasetReader reader(path);
    TruthAccumulator acc(agg, segment_length, duration);
    while (auto rec = reader.next()) {
        if (!acc.add(*rec->truth)) break;
    }
    return acc.finish();
}

TruthTable compute_truth(std::span<const Record> records, Aggregate agg,
                         uint64_t segment_length,
                         std::optional<uint64_t> duration) {
    TruthAccumulator acc(agg, segment_length, duration);
    for (const Record& rec : records) {
        if (!rec.truth) throw std::invalid_argument("truth: unlabeled record");
        if (!acc.add(*rec.truth)) break;
    }
    return acc.finish();
}

}  // namespace streamq
