#include "streamq/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "streamq/rng.hpp"

namespace streamq {

SegmentStats segment_stats(
    std::span<const std::pair<int, OracleOutcome>> samples,
    std::span<const uint64_t> counts) {
    const int k = static_cast<int>(counts.size());
    SegmentStats stats;
    stats.strata.resize(k);

    uint64_t total = 0;
    for (int i = 0; i < k; ++i) {
        stats.strata[i].count = counts[i];
        total += counts[i];
    }

    // Two-pass moments per stratum.
    std::vector<double> sum(k, 0.0);
    for (const auto& [stratum, outcome] : samples) {
        if (stratum < 0 || stratum >= k)
            throw std::invalid_argument("segment_stats: stratum out of range");
        auto& s = stats.strata[stratum];
        ++s.sampled;
        if (outcome.matches) {
            ++s.matched;
            sum[stratum] += outcome.stat;
        }
    }
    for (int i = 0; i < k; ++i) {
        auto& s = stats.strata[i];
        if (s.sampled > s.count)
            throw std::invalid_argument(
                "segment_stats: more samples than routed records");
        s.p_hat = s.sampled > 0
                      ? static_cast<double>(s.matched) / s.sampled
                      : 0.0;
        s.mu_hat = s.matched > 0 ? sum[i] / s.matched : 0.0;
    }
    std::vector<double> sq(k, 0.0);
    for (const auto& [stratum, outcome] : samples) {
        if (!outcome.matches) continue;
        const double d = outcome.stat - stats.strata[stratum].mu_hat;
        sq[stratum] += d * d;
    }
    for (int i = 0; i < k; ++i) {
        auto& s = stats.strata[i];
        // Unbiased (n-1) variance; defined as 0 below two matches.
        s.sigma_hat = s.matched > 1 ? std::sqrt(sq[i] / (s.matched - 1)) : 0.0;
        s.w_hat = total > 0
                      ? std::sqrt(s.p_hat) * static_cast<double>(s.count) / total
                      : 0.0;
    }
    return stats;
}

std::optional<double> try_prediction(std::span<const SegmentStats> history) {
    double weighted = 0.0;
    double weight = 0.0;
    for (const auto& seg : history) {
        for (const auto& s : seg.strata) {
            const double w = s.p_hat * static_cast<double>(s.count);
            weighted += s.mu_hat * w;
            weight += w;
        }
    }
    if (weight <= 0.0) return std::nullopt;
    return weighted / weight;
}

double get_prediction(std::span<const SegmentStats> history) {
    auto est = try_prediction(history);
    if (!est)
        throw std::runtime_error("no predicate-matching samples observed");
    return *est;
}

double matching_population(std::span<const SegmentStats> history) {
    double mass = 0.0;
    for (const auto& seg : history)
        for (const auto& s : seg.strata)
            mass += s.p_hat * static_cast<double>(s.count);
    return mass;
}

std::optional<double> try_aggregate_estimate(
    Aggregate agg, std::span<const SegmentStats> history) {
    if (agg == Aggregate::Count) return matching_population(history);
    auto mean = try_prediction(history);
    if (!mean) return std::nullopt;
    if (agg == Aggregate::Avg) return mean;
    return *mean * matching_population(history);
}

double aggregate_estimate(Aggregate agg,
                          std::span<const SegmentStats> history) {
    auto est = try_aggregate_estimate(agg, history);
    if (!est)
        throw std::runtime_error("no predicate-matching samples observed");
    return *est;
}

namespace {

// (segment, stratum) cell with its routed count and drawn stat values.
struct Cell {
    double count = 0.0;
    std::vector<double> stats;    // one entry per sample; NaN = non-matching
};

double estimate_from_cells(Aggregate agg, const std::vector<Cell>& cells,
                           std::span<const double> draw_stats) {
    // draw_stats holds the current bootstrap draw laid out cell by cell;
    // p_hat and mu_hat are rebuilt per cell on the fly.
    double weighted = 0.0;
    double weight = 0.0;
    double mass = 0.0;
    size_t pos = 0;
    for (const auto& cell : cells) {
        const size_t n = cell.stats.size();
        uint64_t matched = 0;
        double sum = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double v = draw_stats[pos + i];
            if (!std::isnan(v)) {
                ++matched;
                sum += v;
            }
        }
        pos += n;
        if (n == 0) continue;
        const double p_hat = static_cast<double>(matched) / n;
        const double mu_hat = matched > 0 ? sum / matched : 0.0;
        const double w = p_hat * cell.count;
        weighted += mu_hat * w;
        weight += w;
        mass += w;
    }
    if (weight <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double mean = weighted / weight;
    switch (agg) {
        case Aggregate::Avg: return mean;
        case Aggregate::Count: return mass;
        case Aggregate::Sum: return mean * mass;
    }
    return mean;
}

}  // namespace

ConfidenceInterval bootstrap_ci(std::span<const CellSample> samples,
                                std::span<const SegmentStats> history,
                                double confidence, int rounds, uint64_t seed,
                                Aggregate agg) {
    if (confidence <= 0.0 || confidence >= 1.0)
        throw std::invalid_argument("bootstrap_ci: confidence outside (0,1)");
    if (rounds < 1) throw std::invalid_argument("bootstrap_ci: rounds < 1");

    // Group samples by cell, preserving the routed counts from history.
    std::map<std::pair<int, int>, Cell> grouped;
    for (const auto& s : samples) {
        auto& cell = grouped[{s.segment, s.stratum}];
        cell.stats.push_back(s.outcome.matches
                                 ? s.outcome.stat
                                 : std::numeric_limits<double>::quiet_NaN());
    }
    for (auto& [key, cell] : grouped) {
        const auto [segment, stratum] = key;
        if (segment < 0 || segment >= static_cast<int>(history.size()) ||
            stratum < 0 || stratum >= history[segment].strata_count())
            throw std::invalid_argument("bootstrap_ci: sample outside history");
        cell.count = static_cast<double>(
            history[segment].strata[stratum].count);
    }

    std::vector<Cell> cells;
    cells.reserve(grouped.size());
    size_t total_samples = 0;
    for (auto& [key, cell] : grouped) {
        total_samples += cell.stats.size();
        cells.push_back(std::move(cell));
    }

    // Point estimate from the full sample; the interval must contain it.
    std::vector<double> full(total_samples);
    {
        size_t pos = 0;
        for (const auto& cell : cells)
            for (double v : cell.stats) full[pos++] = v;
    }
    const double point = estimate_from_cells(agg, cells, full);
    if (std::isnan(point))
        throw std::runtime_error("no predicate-matching samples observed");

    Rng rng(seed);
    std::vector<double> draw(total_samples);
    std::vector<double> estimates;
    estimates.reserve(rounds);
    for (int b = 0; b < rounds; ++b) {
        size_t pos = 0;
        for (const auto& cell : cells) {
            const size_t n = cell.stats.size();
            for (size_t i = 0; i < n; ++i)
                draw[pos + i] = cell.stats[rng.uniform_index(n)];
            pos += n;
        }
        const double est = estimate_from_cells(agg, cells, draw);
        if (!std::isnan(est)) estimates.push_back(est);
    }
    if (estimates.empty()) return {point, point};

    std::sort(estimates.begin(), estimates.end());
    const auto quantile = [&](double q) {
        const double idx = q * static_cast<double>(estimates.size() - 1);
        const size_t lo = static_cast<size_t>(idx);
        const size_t hi = std::min(lo + 1, estimates.size() - 1);
        const double frac = idx - static_cast<double>(lo);
        return estimates[lo] * (1.0 - frac) + estimates[hi] * frac;
    };
    const double tail = (1.0 - confidence) / 2.0;
    ConfidenceInterval ci;
    ci.low = std::min(quantile(tail), point);
    ci.high = std::max(quantile(1.0 - tail), point);
    return ci;
}

}  // namespace streamq
