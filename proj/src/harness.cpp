#include "streamq/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "streamq/baselines.hpp"
#include "streamq/oracle.hpp"
#include "streamq/parallel.hpp"

namespace streamq {

using nlohmann::json;

double median(std::vector<double> values) {
    if (values.empty())
        throw std::invalid_argument("median of an empty list");
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    return n % 2 == 1 ? values[n / 2]
                      : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double geometric_mean(std::span<const double> values) {
    if (values.empty())
        throw std::invalid_argument("geometric mean of an empty list");
    double log_sum = 0.0;
    for (double v : values) {
        if (v < 0.0)
            throw std::invalid_argument("geometric mean of a negative value");
        if (v == 0.0) return 0.0;
        log_sum += std::log(v);
    }
    return std::exp(log_sum / static_cast<double>(values.size()));
}

std::vector<SegmentScore> score_segments(
    std::span<const std::pair<int, double>> estimates,
    std::span<const double> truth) {
    std::vector<SegmentScore> scores;
    scores.reserve(estimates.size());
    for (const auto& [segment, estimate] : estimates) {
        const size_t idx = static_cast<size_t>(segment) - 1;
        if (idx >= truth.size()) continue;
        if (std::isnan(truth[idx])) continue;  // truth undefined, unscorable
        SegmentScore s;
        s.segment = segment;
        s.estimate = estimate;
        s.truth = truth[idx];
        s.sq_error = (estimate - truth[idx]) * (estimate - truth[idx]);
        scores.push_back(s);
    }
    return scores;
}

double median_segment_rmse(std::span<const SegmentScore> scores) {
    std::vector<double> rmse;
    rmse.reserve(scores.size());
    for (const auto& s : scores) rmse.push_back(std::sqrt(s.sq_error));
    return median(std::move(rmse));
}

std::string MethodSpec::label() const {
    std::string out = name;
    if (fixed_strata) out += "+fixed-strata";
    if (fixed_alloc) out += "+fixed-alloc";
    if (history_average) out += "+history-average";
    return out;
}

// ---- single-method execution ----------------------------------------------

TrialOutcome run_method(const MethodSpec& method,
                        std::span<const Record> records, Aggregate agg,
                        uint64_t total_budget, int segments_hint,
                        uint64_t segment_length,
                        std::optional<uint64_t> duration, int strata,
                        double alpha, double defensive_frac, uint64_t seed) {
    if (segments_hint < 1)
        throw std::invalid_argument("run_method: segments < 1");
    const uint64_t per_segment = total_budget / segments_hint;
    if (per_segment < 1)
        throw std::invalid_argument("run_method: budget below segment count");

    ColumnOracle column;
    TrialOutcome outcome;
    VectorSource source(records);

    if (method.name == "uniform") {
        BudgetedOracle oracle(column, total_budget);
        auto result = uniform_baseline(source, agg, total_budget,
                                       segment_length, duration, oracle, seed);
        outcome.estimate = result.estimate;
        outcome.oracle_calls = result.oracle_calls;
        return outcome;
    }
    if (method.name == "fixed-stratified") {
        BudgetedOracle oracle(column, per_segment);
        auto result = fixed_stratified_baseline(
            source, agg, static_cast<int>(per_segment),
            default_fixed_strata(strata), segment_length, duration, oracle,
            seed);
        outcome.estimate = result.estimate;
        outcome.oracle_calls = result.oracle_calls;
        return outcome;
    }
    if (method.name != "inquest")
        throw std::invalid_argument("unknown method '" + method.name + "'");

    EngineConfig config;
    config.plan = make_plan(static_cast<int>(per_segment), defensive_frac,
                            strata, alpha);
    config.segment_length = segment_length;
    config.duration = duration;
    config.agg = agg;
    config.history_average = method.history_average;
    config.fixed_strata = method.fixed_strata;
    if (method.fixed_strata)
        config.fixed_boundaries = default_fixed_strata(strata).boundaries;
    config.fixed_alloc = method.fixed_alloc;
    BudgetedOracle oracle(column, per_segment);
    StreamEngine engine(config, oracle, seed);
    auto result = engine.run(source);
    outcome.estimate = result.estimate;
    outcome.oracle_calls = result.oracle_calls;
    return outcome;
}

// ---- trial runner ----------------------------------------------------------

namespace {

std::vector<Record> load_records(const std::string& path) {
    DatasetReader reader(path);
    std::vector<Record> records;
    while (auto rec = reader.next()) records.push_back(*rec);
    if (records.empty()) throw SchemaError(path + ": no records");
    return records;
}

}  // namespace

BenchResult run_trials(const BenchConfig& config) {
    if (config.methods.empty() || config.datasets.empty() ||
        config.budgets.empty() || config.trials < 1)
        throw std::invalid_argument("bench: empty configuration");

    struct DatasetContext {
        std::string path;
        std::vector<Record> records;
        uint64_t duration = 0;
        uint64_t segment_length = 0;
        TruthTable truth;
    };
    std::vector<DatasetContext> contexts(config.datasets.size());
    for (size_t d = 0; d < config.datasets.size(); ++d) {
        auto& ctx = contexts[d];
        ctx.path = config.datasets[d];
        ctx.records = load_records(ctx.path);
        ctx.duration = config.duration
                           ? std::min<uint64_t>(*config.duration,
                                                ctx.records.size())
                           : ctx.records.size();
        ctx.segment_length =
            (ctx.duration + config.segments - 1) / config.segments;
        ctx.truth = compute_truth(ctx.records, config.agg, ctx.segment_length,
                                  ctx.duration);
    }

    const size_t n_jobs = config.datasets.size() * config.budgets.size() *
                          static_cast<size_t>(config.trials);
    const size_t n_methods = config.methods.size();
    BenchResult result;
    result.reports.resize(n_jobs * n_methods);

    parallel_for(
        n_jobs,
        [&](size_t job) {
            const size_t trial = job % config.trials;
            const size_t rest = job / config.trials;
            const size_t b = rest % config.budgets.size();
            const size_t d = rest / config.budgets.size();
            const auto& ctx = contexts[d];
            const uint64_t budget = config.budgets[b];
            // The same derived seed feeds every method: comparisons pair up.
            const uint64_t seed =
                derive_seed(config.base_seed, d + 1, budget, trial);

            for (size_t m = 0; m < n_methods; ++m) {
                TrialReport report;
                report.method = config.methods[m].label();
                report.dataset = ctx.path;
                report.budget = budget;
                report.seed = seed;
                try {
                    const auto outcome = run_method(
                        config.methods[m], ctx.records, config.agg, budget,
                        config.segments, ctx.segment_length, ctx.duration,
                        config.strata, config.alpha, config.defensive_frac,
                        seed);
                    report.segments = score_segments(
                        outcome.estimate.per_segment, ctx.truth.per_segment);
                    report.median_segment_rmse =
                        median_segment_rmse(report.segments);
                    report.full_query_rmse = std::abs(
                        outcome.estimate.mu_hat - ctx.truth.full);
                    report.oracle_calls = outcome.oracle_calls;
                } catch (const std::exception& err) {
                    report.failed = true;
                    report.error = err.what();
                }
                result.reports[job * n_methods + m] = std::move(report);
            }
        },
        config.threads);

    result.rows = aggregate_reports(result.reports);
    result.summary = summarize(result.rows);
    return result;
}

std::vector<AggregateRow> aggregate_reports(
    std::span<const TrialReport> reports) {
    std::map<std::tuple<std::string, std::string, uint64_t>, AggregateRow>
        rows;
    for (const auto& report : reports) {
        auto& row =
            rows[{report.method, report.dataset, report.budget}];
        row.method = report.method;
        row.dataset = report.dataset;
        row.budget = report.budget;
        if (report.failed) {
            ++row.trials_failed;
            continue;
        }
        ++row.trials_ok;
        row.mean_median_rmse += report.median_segment_rmse;
        row.mean_full_rmse += report.full_query_rmse;
    }
    std::vector<AggregateRow> out;
    out.reserve(rows.size());
    for (auto& [key, row] : rows) {
        if (row.trials_ok > 0) {
            row.mean_median_rmse /= row.trials_ok;
            row.mean_full_rmse /= row.trials_ok;
        }
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<SummaryRow> summarize(std::span<const AggregateRow> rows) {
    std::map<std::pair<std::string, uint64_t>, std::vector<double>> grouped;
    for (const auto& row : rows)
        if (row.trials_ok > 0)
            grouped[{row.method, row.budget}].push_back(row.mean_median_rmse);
    std::vector<SummaryRow> out;
    out.reserve(grouped.size());
    for (const auto& [key, values] : grouped) {
        SummaryRow s;
        s.method = key.first;
        s.budget = key.second;
        s.geo_mean_rmse = geometric_mean(values);
        out.push_back(std::move(s));
    }
    return out;
}

// ---- serialization ----------------------------------------------------------

void write_reports_jsonl(const std::string& path,
                         std::span<const TrialReport> reports) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot write");
    for (const auto& r : reports) {
        json row{{"method", r.method},
                 {"dataset", r.dataset},
                 {"budget", r.budget},
                 {"seed", r.seed},
                 {"median_segment_rmse", r.median_segment_rmse},
                 {"full_query_rmse", r.full_query_rmse},
                 {"oracle_calls", r.oracle_calls},
                 {"failed", r.failed},
                 {"error", r.error}};
        json segments = json::array();
        for (const auto& s : r.segments)
            segments.push_back({s.segment, s.estimate, s.truth, s.sq_error});
        row["segments"] = std::move(segments);
        out << row.dump() << '\n';
    }
}

std::vector<TrialReport> read_reports_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::vector<TrialReport> reports;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json row = json::parse(line);
        TrialReport r;
        r.method = row.at("method").get<std::string>();
        r.dataset = row.at("dataset").get<std::string>();
        r.budget = row.at("budget").get<uint64_t>();
        r.seed = row.at("seed").get<uint64_t>();
        r.median_segment_rmse = row.at("median_segment_rmse").get<double>();
        r.full_query_rmse = row.at("full_query_rmse").get<double>();
        r.oracle_calls = row.at("oracle_calls").get<uint64_t>();
        r.failed = row.at("failed").get<bool>();
        r.error = row.at("error").get<std::string>();
        for (const auto& seg : row.at("segments")) {
            SegmentScore s;
            s.segment = seg.at(0).get<int>();
            s.estimate = seg.at(1).get<double>();
            s.truth = seg.at(2).get<double>();
            s.sq_error = seg.at(3).get<double>();
            r.segments.push_back(s);
        }
        reports.push_back(std::move(r));
    }
    return reports;
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.8g", v);
    return buf;
}

}  // namespace

std::string format_aggregate_table(std::span<const AggregateRow> rows) {
    std::ostringstream out;
    out << "method\tdataset\tbudget\ttrials_ok\ttrials_failed\t"
           "mean_median_rmse\tmean_full_rmse\n";
    for (const auto& r : rows)
        out << r.method << '\t' << r.dataset << '\t' << r.budget << '\t'
            << r.trials_ok << '\t' << r.trials_failed << '\t'
            << format_double(r.mean_median_rmse) << '\t'
            << format_double(r.mean_full_rmse) << '\n';
    return out.str();
}

std::string format_summary_table(std::span<const SummaryRow> rows) {
    std::ostringstream out;
    out << "method\tbudget\tgeo_mean_rmse\n";
    for (const auto& r : rows)
        out << r.method << '\t' << r.budget << '\t'
            << format_double(r.geo_mean_rmse) << '\n';
    return out.str();
}

// ---- config ------------------------------------------------------------------

BenchConfig load_bench_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    const json doc = json::parse(in);
    BenchConfig config;
    for (const auto& m : doc.at("methods")) {
        MethodSpec spec;
        if (m.is_string()) {
            spec.name = m.get<std::string>();
        } else {
            spec.name = m.at("name").get<std::string>();
            spec.fixed_strata = m.value("fixed_strata", false);
            spec.fixed_alloc = m.value("fixed_alloc", false);
            spec.history_average = m.value("history_average", false);
        }
        config.methods.push_back(std::move(spec));
    }
    config.datasets = doc.at("datasets").get<std::vector<std::string>>();
    config.budgets = doc.at("budgets").get<std::vector<uint64_t>>();
    config.trials = doc.value("trials", 100);
    config.base_seed = doc.value("base_seed", 1);
    config.segments = doc.value("segments", 5);
    config.strata = doc.value("strata", 3);
    config.alpha = doc.value("alpha", 0.8);
    config.defensive_frac = doc.value("defensive_frac", 0.1);
    config.threads = doc.value("threads", 0u);
    if (doc.contains("duration"))
        config.duration = doc.at("duration").get<uint64_t>();
    const std::string agg = doc.value("agg", "avg");
    if (agg == "avg") config.agg = Aggregate::Avg;
    else if (agg == "sum") config.agg = Aggregate::Sum;
    else if (agg == "count") config.agg = Aggregate::Count;
    else throw std::runtime_error(path + ": unknown agg '" + agg + "'");
    return config;
}

// ---- query execution -----------------------------------------------------------

RunOutcome execute_query(const QuerySpec& spec, const std::string& dataset,
                         const RunOptions& options) {
    const auto resolve_records =
        [&](const Interval& interval, const char* what) -> uint64_t {
        const auto records = interval.records(options.rate);
        if (!records)
            throw std::runtime_error(
                std::string(what) +
                " uses a time interval; declare the stream rate with --rate");
        if (*records == 0)
            throw std::runtime_error(std::string(what) +
                                     " resolves to zero records");
        return *records;
    };

    std::optional<uint64_t> duration;
    if (spec.duration)
        duration = resolve_records(*spec.duration, "DURATION");
    uint64_t segment_length = 0;
    if (options.window) {
        segment_length = *options.window;
    } else if (options.segments) {
        if (!duration)
            throw std::runtime_error(
                "--segments needs a DURATION to split into windows");
        if (*options.segments < 1)
            throw std::runtime_error("--segments must be positive");
        segment_length =
            (*duration + *options.segments - 1) / *options.segments;
    } else {
        segment_length = resolve_records(spec.tumble, "TUMBLE");
    }

    const uint64_t per_segment = options.budget.value_or(spec.oracle_limit);
    const int strata = options.strata.value_or(3);
    const double alpha = options.alpha.value_or(0.8);
    const double defensive_frac = options.defensive_frac.value_or(0.1);

    ColumnOracle column;
    std::unique_ptr<ProcessOracle> process;
    Oracle* inner = &column;
    const bool external = !options.external_oracle.empty();
    if (external) {
        process = std::make_unique<ProcessOracle>(options.external_oracle);
        inner = process.get();
    }

    RunOutcome outcome;
    DatasetReader reader(dataset, /*need_labels=*/!external);

    if (options.method == "uniform") {
        if (!duration)
            throw std::runtime_error(
                "the uniform method needs DURATION to size its budget");
        const uint64_t segments =
            (*duration + segment_length - 1) / segment_length;
        BudgetedOracle oracle(*inner, per_segment * segments);
        auto result =
            uniform_baseline(reader, spec.agg, per_segment * segments,
                             segment_length, duration, oracle, options.seed);
        outcome.estimate = result.estimate;
        outcome.failed_oracle_calls = result.failed_oracle_calls;
    } else if (options.method == "fixed-stratified") {
        BudgetedOracle oracle(*inner, per_segment);
        auto result = fixed_stratified_baseline(
            reader, spec.agg, static_cast<int>(per_segment),
            default_fixed_strata(strata), segment_length, duration, oracle,
            options.seed);
        outcome.estimate = result.estimate;
        outcome.failed_oracle_calls = result.failed_oracle_calls;
    } else if (options.method == "inquest") {
        EngineConfig config;
        config.plan = make_plan(static_cast<int>(per_segment), defensive_frac,
                                strata, alpha);
        config.segment_length = segment_length;
        config.duration = duration;
        config.agg = spec.agg;
        config.history_average = options.history_average;
        config.fixed_strata = options.fixed_strata;
        if (options.fixed_strata)
            config.fixed_boundaries = default_fixed_strata(strata).boundaries;
        config.fixed_alloc = options.fixed_alloc;
        config.ci_mode = options.with_ci
                             ? EngineConfig::CiMode::PerSegment
                             : EngineConfig::CiMode::None;
        BudgetedOracle oracle(*inner, per_segment);
        StreamEngine engine(config, oracle, options.seed);
        auto result = engine.run(reader, options.sink);
        outcome.estimate = result.estimate;
        outcome.emitted = result.emitted;
        outcome.failed_oracle_calls = result.failed_oracle_calls;
    } else {
        throw std::runtime_error("unknown method '" + options.method + "'");
    }
    outcome.clamped_proxies = reader.clamped_proxies();

    if (!external) {
        outcome.truth =
            compute_truth(dataset, spec.agg, segment_length, duration);
        outcome.truth_available = true;
    }
    return outcome;
}

}  // namespace streamq
