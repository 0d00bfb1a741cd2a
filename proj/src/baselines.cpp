#include "streamq/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "streamq/estimator.hpp"

namespace streamq {

Stratification default_fixed_strata(int k) {
    Stratification strat;
    for (int j = 1; j < k; ++j)
        strat.boundaries.push_back(
            std::round(100.0 * j / k) / 100.0);  // K=3: 0.33, 0.67
    return strat;
}

BaselineResult uniform_baseline(RecordSource& source, Aggregate agg,
                                uint64_t total_budget,
                                uint64_t segment_length,
                                std::optional<uint64_t> duration,
                                Oracle& oracle, uint64_t seed) {
    if (total_budget < 1)
        throw std::invalid_argument("uniform baseline: budget < 1");
    if (segment_length == 0)
        throw std::invalid_argument("uniform baseline: segment length is 0");

    struct Offered {
        Record rec;
        uint64_t ordinal;
    };
    Rng rng(derive_seed(seed, seed_tag::reservoir, 0, 0));
    BasicReservoir<Offered> reservoir(total_budget);
    oracle.begin_window(total_budget);

    uint64_t consumed = 0;
    while (!duration || consumed < *duration) {
        auto rec = source.next();
        if (!rec) break;
        reservoir.offer({*rec, consumed}, rng);
        ++consumed;
    }
    const uint64_t segments =
        consumed == 0 ? 0 : (consumed + segment_length - 1) / segment_length;

    BaselineResult result;
    auto survivors = reservoir.take();
    std::sort(survivors.begin(), survivors.end(),
              [](const Offered& a, const Offered& b) {
                  return a.ordinal < b.ordinal;
              });

    result.history.assign(segments, SegmentStats{{StratumStats{}}});
    for (uint64_t t = 0; t < segments; ++t)
        result.history[t].strata[0].count =
            std::min(segment_length, consumed - t * segment_length);

    std::vector<std::vector<std::pair<int, OracleOutcome>>> by_segment(
        segments);
    for (const Offered& item : survivors) {
        ++result.oracle_calls;
        const auto outcome = oracle.invoke(item.rec);
        if (!outcome) {
            ++result.failed_oracle_calls;
            continue;
        }
        by_segment[item.ordinal / segment_length].emplace_back(0, *outcome);
    }

    for (uint64_t t = 0; t < segments; ++t) {
        const uint64_t count = result.history[t].strata[0].count;
        result.history[t] = segment_stats(
            by_segment[t], std::vector<uint64_t>{count});
    }

    // Plain sample means: the estimate is the mean of f over the matching
    // samples, with the population scaled by the global matching rate for
    // COUNT and SUM. Per-segment values use each segment's own samples and
    // fall back to the cumulative estimate when none match.
    const auto answer_from = [&](uint64_t matched, double sum,
                                 uint64_t resolved,
                                 uint64_t population) -> std::optional<double> {
        switch (agg) {
            case Aggregate::Avg:
                if (matched == 0) return std::nullopt;
                return sum / static_cast<double>(matched);
            case Aggregate::Count:
                if (resolved == 0) return std::nullopt;
                return static_cast<double>(matched) / resolved * population;
            case Aggregate::Sum:
                if (matched == 0 && resolved == 0) return std::nullopt;
                if (resolved == 0) return std::nullopt;
                if (matched == 0) return 0.0;
                return sum / static_cast<double>(matched) *
                       (static_cast<double>(matched) / resolved * population);
        }
        return std::nullopt;
    };

    uint64_t cum_matched = 0, cum_resolved = 0, cum_population = 0;
    double cum_sum = 0.0;
    for (uint64_t t = 0; t < segments; ++t) {
        uint64_t matched = 0, resolved = 0;
        double sum = 0.0;
        for (const auto& [stratum, outcome] : by_segment[t]) {
            ++resolved;
            if (outcome.matches) {
                ++matched;
                sum += outcome.stat;
            }
        }
        const uint64_t population = result.history[t].strata[0].count;
        cum_matched += matched;
        cum_resolved += resolved;
        cum_sum += sum;
        cum_population += population;
        const auto own = answer_from(matched, sum, resolved, population);
        const auto sofar =
            answer_from(cum_matched, cum_sum, cum_resolved, cum_population);
        const auto answer = own ? own : sofar;
        if (answer)
            result.estimate.per_segment.emplace_back(
                static_cast<int>(t + 1), *answer);
    }

    const auto final_answer =
        answer_from(cum_matched, cum_sum, cum_resolved, cum_population);
    if (!final_answer || cum_matched == 0)
        throw std::runtime_error("no predicate-matching samples observed");
    result.estimate.mu_hat = *final_answer;
    result.estimate.ci_low = result.estimate.mu_hat;
    result.estimate.ci_high = result.estimate.mu_hat;
    result.estimate.oracle_calls = result.oracle_calls;
    return result;
}

BaselineResult fixed_stratified_baseline(RecordSource& source, Aggregate agg,
                                         int budget_per_segment,
                                         const Stratification& strata,
                                         uint64_t segment_length,
                                         std::optional<uint64_t> duration,
                                         Oracle& oracle, uint64_t seed) {
    if (budget_per_segment < 1)
        throw std::invalid_argument("stratified baseline: budget < 1");
    if (segment_length == 0)
        throw std::invalid_argument("stratified baseline: segment length is 0");

    const int k = strata.strata_count();
    const std::vector<double> uniform(k, 1.0 / k);
    const auto capacities = round_capacities(
        uniform, static_cast<uint64_t>(budget_per_segment));

    BaselineResult result;
    std::vector<Reservoir> reservoirs;
    std::vector<Rng> rngs;
    std::vector<uint64_t> counts;
    int segment = 0;

    const auto begin_segment = [&] {
        ++segment;
        oracle.begin_window(budget_per_segment);
        reservoirs.clear();
        rngs.clear();
        counts.assign(k, 0);
        for (int i = 0; i < k; ++i) {
            reservoirs.emplace_back(capacities[i]);
            rngs.emplace_back(derive_seed(seed, seed_tag::reservoir,
                                          static_cast<uint64_t>(segment),
                                          static_cast<uint64_t>(i)));
        }
    };
    const auto close_segment = [&] {
        std::vector<std::pair<int, OracleOutcome>> resolved;
        for (int i = 0; i < k; ++i) {
            for (const Record& rec : reservoirs[i].take()) {
                ++result.oracle_calls;
                const auto outcome = oracle.invoke(rec);
                if (!outcome) {
                    ++result.failed_oracle_calls;
                    continue;
                }
                resolved.emplace_back(i, *outcome);
            }
        }
        result.history.push_back(segment_stats(resolved, counts));
        const auto own = try_aggregate_estimate(
            agg, std::span<const SegmentStats>(&result.history.back(), 1));
        const auto sofar = try_aggregate_estimate(agg, result.history);
        const auto answer = own ? own : sofar;
        if (answer)
            result.estimate.per_segment.emplace_back(segment, *answer);
    };

    uint64_t consumed = 0, in_segment = 0;
    begin_segment();
    while (!duration || consumed < *duration) {
        auto rec = source.next();
        if (!rec) break;
        if (in_segment == segment_length) {
            close_segment();
            begin_segment();
            in_segment = 0;
        }
        const int stratum = route(*rec, strata);
        ++counts[stratum];
        reservoirs[stratum].offer(*rec, rngs[stratum]);
        ++in_segment;
        ++consumed;
    }
    close_segment();

    result.estimate.mu_hat = aggregate_estimate(agg, result.history);
    result.estimate.ci_low = result.estimate.mu_hat;
    result.estimate.ci_high = result.estimate.mu_hat;
    result.estimate.oracle_calls = result.oracle_calls;
    return result;
}

}  // namespace streamq
