#include "streamq/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace streamq {

Stratification stratify_by_quantile(std::span<const double> scores, int k) {
    if (scores.empty())
        throw std::invalid_argument("stratify_by_quantile: no scores");
    if (k < 1) throw std::invalid_argument("stratify_by_quantile: k < 1");
    Stratification strat;
    if (k == 1) return strat;
    std::vector<double> buf(scores.begin(), scores.end());
    const size_t n = buf.size();
    strat.boundaries.reserve(k - 1);
    size_t prev = 0;
    for (int j = 1; j < k; ++j) {
        // Nearest-rank quantile at fraction j/k. Successive selections can
        // start past the previous rank since nth_element partitions.
        const size_t rank = (n * static_cast<size_t>(j) + k - 1) / k - 1;
        std::nth_element(buf.begin() + prev, buf.begin() + rank, buf.end());
        strat.boundaries.push_back(buf[rank]);
        prev = rank;
    }
    return strat;
}

Stratification get_strata(EwmaState& strata_ewma,
                          std::span<const double> prev_scores, int k) {
    const Stratification observed = stratify_by_quantile(prev_scores, k);
    strata_ewma.observe(observed.boundaries);
    Stratification out;
    out.boundaries = strata_ewma.current();
    std::sort(out.boundaries.begin(), out.boundaries.end());
    for (double& b : out.boundaries) b = std::clamp(b, 0.0, 1.0);
    return out;
}

std::vector<double> raw_allocation(const SegmentStats& stats) {
    const int k = stats.strata_count();
    std::vector<double> alloc(k, 0.0);
    double denom = 0.0;
    for (int i = 0; i < k; ++i) {
        alloc[i] = stats.strata[i].w_hat * stats.strata[i].sigma_hat;
        denom += alloc[i];
    }
    if (denom <= 0.0) {
        // No variance signal; fall back to the predicate-rate weights, then
        // to uniform.
        denom = 0.0;
        for (int i = 0; i < k; ++i) {
            alloc[i] = stats.strata[i].w_hat;
            denom += alloc[i];
        }
        if (denom <= 0.0) {
            std::fill(alloc.begin(), alloc.end(), 1.0 / k);
            return alloc;
        }
    }
    for (double& a : alloc) a /= denom;
    return alloc;
}

Allocation get_alloc(EwmaState& alloc_ewma, const SegmentStats& prev,
                     const BudgetPlan& plan) {
    alloc_ewma.observe(raw_allocation(prev));
    const auto& dyn = alloc_ewma.current();
    Allocation out;
    out.fractions.resize(plan.strata);
    const double floor_share =
        static_cast<double>(plan.defensive) / plan.strata;
    for (int i = 0; i < plan.strata; ++i)
        out.fractions[i] =
            (floor_share + plan.dynamic * dyn[i]) / plan.total;
    return out;
}

StreamEngine::StreamEngine(EngineConfig config, Oracle& oracle, uint64_t seed)
    : config_(std::move(config)), oracle_(oracle), seed_(seed) {
    config_.plan.validate();
    if (config_.segment_length == 0)
        throw std::invalid_argument("engine: segment length is 0");
    if (config_.fixed_strata &&
        static_cast<int>(config_.fixed_boundaries.size()) !=
            config_.plan.strata - 1)
        throw std::invalid_argument(
            "engine: fixed_strata needs K-1 boundaries");
    if (!config_.pilot && !(config_.fixed_strata && config_.fixed_alloc))
        throw std::invalid_argument(
            "engine: pilot may only be skipped with fixed strata and "
            "fixed allocation");
    const auto mode = config_.history_average ? EwmaState::Mode::HistoryAverage
                                              : EwmaState::Mode::Ewma;
    strata_ewma_ = EwmaState(config_.plan.alpha, mode);
    alloc_ewma_ = EwmaState(config_.plan.alpha, mode);
}

void StreamEngine::begin_segment() {
    ++segment_;
    records_in_segment_ = 0;
    proxy_buffer_.clear();
    const int k = config_.plan.strata;
    counts_.assign(k, 0);
    oracle_.begin_window(config_.plan.total);

    if (segment_ == 1 && config_.pilot) {
        pilot_rng_.emplace(derive_seed(seed_, seed_tag::pilot));
        pilot_reservoir_.emplace(config_.plan.total);
        result_.traces.push_back({});
        return;
    }

    // Smoothed stratification and allocation from the previous segment's
    // observations; an empty previous segment contributes none.
    if (prev_.nonempty) {
        if (!config_.fixed_strata) strata_ewma_.observe(prev_.quantiles);
        if (!config_.fixed_alloc) alloc_ewma_.observe(prev_.raw_alloc);
        prev_.nonempty = false;
    }

    if (config_.fixed_strata) {
        strata_.boundaries = config_.fixed_boundaries;
    } else {
        strata_.boundaries = strata_ewma_.current();
        std::sort(strata_.boundaries.begin(), strata_.boundaries.end());
        for (double& b : strata_.boundaries) b = std::clamp(b, 0.0, 1.0);
    }

    std::vector<double> dyn(k, 1.0 / k);
    if (!config_.fixed_alloc) dyn = alloc_ewma_.current();

    const auto& plan = config_.plan;
    const double floor_share = static_cast<double>(plan.defensive) / k;
    std::vector<double> fractions(k);
    for (int i = 0; i < k; ++i)
        fractions[i] = (floor_share + plan.dynamic * dyn[i]) / plan.total;
    capacities_ = round_capacities(fractions, plan.total,
                                   static_cast<uint64_t>(plan.defensive_floor()));

    reservoirs_.clear();
    reservoir_rngs_.clear();
    for (int i = 0; i < k; ++i) {
        reservoirs_.emplace_back(capacities_[i]);
        reservoir_rngs_.push_back(std::make_unique<Rng>(derive_seed(
            seed_, seed_tag::reservoir, static_cast<uint64_t>(segment_),
            static_cast<uint64_t>(i))));
    }
    result_.traces.push_back({strata_, dyn, capacities_});
}

void StreamEngine::ingest(const Record& rec) {
    ++records_in_segment_;
    proxy_buffer_.push_back(rec.proxy);
    if (pilot_reservoir_) {
        pilot_reservoir_->offer(rec, *pilot_rng_);
        return;
    }
    const int k = route(rec, strata_);
    ++counts_[k];
    reservoirs_[k].offer(rec, *reservoir_rngs_[k]);
}

std::vector<std::pair<int, OracleOutcome>> StreamEngine::resolve(
    std::vector<Record> survivors, int stratum_of_all,
    const Stratification& strat) {
    std::vector<std::pair<int, OracleOutcome>> out;
    out.reserve(survivors.size());
    for (Record& rec : survivors) {
        ++result_.oracle_calls;
        auto outcome = oracle_.invoke(rec);
        if (!outcome) {
            // Budget is invocations, not successes; the call is spent.
            ++result_.failed_oracle_calls;
            continue;
        }
        rec.oracle = *outcome;
        const int stratum =
            stratum_of_all >= 0 ? stratum_of_all : route(rec, strat);
        out.emplace_back(stratum, *outcome);
    }
    return out;
}

void StreamEngine::close_segment() {
    const int k = config_.plan.strata;
    std::vector<std::pair<int, OracleOutcome>> resolved;
    uint64_t calls_before = result_.oracle_calls;
    uint64_t capacity_total = 0;

    if (pilot_reservoir_) {
        if (records_in_segment_ == 0)
            throw std::runtime_error("pilot segment empty");
        // The pilot's own quantile stratification routes both the sampled
        // records and the segment's full score buffer.
        strata_ = config_.fixed_strata
                      ? Stratification{config_.fixed_boundaries}
                      : stratify_by_quantile(proxy_buffer_, k);
        counts_.assign(k, 0);
        for (double score : proxy_buffer_) ++counts_[route(score, strata_)];
        resolved = resolve(pilot_reservoir_->take(), -1, strata_);
        capacity_total = config_.plan.total;
        pilot_reservoir_.reset();
        pilot_rng_.reset();
        result_.traces.back().strata = strata_;
    } else {
        for (int i = 0; i < k; ++i) {
            auto part = resolve(reservoirs_[i].take(), i, strata_);
            resolved.insert(resolved.end(), part.begin(), part.end());
            capacity_total += capacities_[i];
        }
    }

    SegmentStats stats =
        records_in_segment_ > 0
            ? segment_stats(resolved, counts_)
            : SegmentStats{std::vector<StratumStats>(k)};
    history_.push_back(stats);
    for (const auto& [stratum, outcome] : resolved)
        samples_.push_back({segment_ - 1, stratum, outcome});

    if (records_in_segment_ > 0) {
        prev_.quantiles = config_.fixed_strata
                              ? std::vector<double>{}
                              : stratify_by_quantile(proxy_buffer_, k).boundaries;
        prev_.raw_alloc = raw_allocation(stats);
        prev_.nonempty = true;
    }

    SegmentEstimate emit;
    emit.segment = segment_;
    emit.estimate = try_aggregate_estimate(config_.agg, history_);
    emit.segment_estimate = try_aggregate_estimate(
        config_.agg, std::span<const SegmentStats>(&history_.back(), 1));
    emit.oracle_calls = result_.oracle_calls - calls_before;
    emit.budget_unused = capacity_total - emit.oracle_calls;
    if (config_.ci_mode == EngineConfig::CiMode::PerSegment &&
        try_prediction(history_)) {
        const auto ci = bootstrap_ci(
            samples_, history_, config_.confidence, config_.bootstrap_rounds,
            derive_seed(seed_, seed_tag::bootstrap,
                        static_cast<uint64_t>(segment_)),
            config_.agg);
        emit.ci_low = ci.low;
        emit.ci_high = ci.high;
    }
    result_.emitted.push_back(emit);
    if (sink_ && *sink_) (*sink_)(emit);

    // Answer-unit estimate per segment; falls back to the running estimate
    // when the segment itself had no matching samples.
    const auto answer =
        emit.segment_estimate ? emit.segment_estimate : emit.estimate;
    if (answer)
        result_.estimate.per_segment.emplace_back(segment_, *answer);
}

EngineResult StreamEngine::run(
    RecordSource& source,
    const std::function<void(const SegmentEstimate&)>& sink) {
    sink_ = &sink;
    result_ = EngineResult{};
    history_.clear();
    samples_.clear();

    uint64_t consumed = 0;
    begin_segment();
    for (;;) {
        if (config_.duration && consumed >= *config_.duration) break;
        auto rec = source.next();
        if (!rec) break;
        if (records_in_segment_ == config_.segment_length) {
            close_segment();
            begin_segment();
        }
        ingest(*rec);
        ++consumed;
    }
    if (records_in_segment_ > 0 || segment_ == 1) close_segment();

    result_.history = history_;
    result_.estimate.mu_hat = aggregate_estimate(config_.agg, history_);
    result_.estimate.oracle_calls = result_.oracle_calls;
    if (config_.ci_mode != EngineConfig::CiMode::None) {
        const auto ci = bootstrap_ci(
            samples_, history_, config_.confidence, config_.bootstrap_rounds,
            derive_seed(seed_, seed_tag::bootstrap), config_.agg);
        result_.estimate.ci_low = ci.low;
        result_.estimate.ci_high = ci.high;
    } else {
        result_.estimate.ci_low = result_.estimate.mu_hat;
        result_.estimate.ci_high = result_.estimate.mu_hat;
    }
    sink_ = nullptr;
    return std::move(result_);
}

}  // namespace streamq
