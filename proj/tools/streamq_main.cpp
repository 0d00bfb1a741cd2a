#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "streamq/harness.hpp"
#include "streamq/query.hpp"
#include "streamq/synth.hpp"

namespace {

using namespace streamq;
using nlohmann::json;

std::string read_query_text(const std::string& inline_text,
                            const std::string& file) {
    if (!inline_text.empty()) return inline_text;
    if (!file.empty()) {
        std::ifstream in(file);
        if (!in) throw std::runtime_error(file + ": cannot open");
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    }
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
}

json spec_to_json(const QuerySpec& spec) {
    const auto expr = [](const ExprRef& e) {
        json j{{"name", e.name}};
        if (e.arg) j["arg"] = *e.arg;
        return j;
    };
    const auto interval_json = [](const Interval& i) {
        static const char* names[] = {"RECORDS", "FRAMES", "SECONDS",
                                      "MINUTES", "HOURS"};
        return json{{"magnitude", i.magnitude},
                    {"unit", names[static_cast<int>(i.unit)]}};
    };
    json j{{"aggregate", to_string(spec.agg)},
           {"expr", expr(spec.expr)},
           {"source", spec.source},
           {"tumble_column", spec.tumble_column},
           {"tumble", interval_json(spec.tumble)},
           {"oracle_limit", spec.oracle_limit},
           {"proxy", expr(spec.proxy)}};
    if (spec.predicate) j["predicate"] = expr(*spec.predicate);
    if (spec.duration) j["duration"] = interval_json(*spec.duration);
    return j;
}

int cmd_parse(const std::string& text) {
    Diagnostic diag;
    const auto spec = try_parse_query(text, &diag);
    if (!spec) {
        std::cerr << "parse error at " << diag.format() << "\n";
        return 1;
    }
    std::cout << render_query(*spec);
    std::cout << spec_to_json(*spec).dump(2) << "\n";
    return 0;
}

int cmd_run(const std::string& text, const std::string& dataset,
            RunOptions options, const std::string& output) {
    Diagnostic diag;
    const auto spec = try_parse_query(text, &diag);
    if (!spec) {
        std::cerr << "parse error at " << diag.format() << "\n";
        return 1;
    }

    std::printf("segment\testimate\tci_low\tci_high\toracle_calls\n");
    options.sink = [](const SegmentEstimate& e) {
        std::printf("%d\t%s\t%s\t%s\t%llu\n", e.segment,
                    e.estimate ? std::to_string(*e.estimate).c_str() : "-",
                    e.ci_low ? std::to_string(*e.ci_low).c_str() : "-",
                    e.ci_high ? std::to_string(*e.ci_high).c_str() : "-",
                    static_cast<unsigned long long>(e.oracle_calls));
        std::fflush(stdout);
    };

    const auto outcome = execute_query(*spec, dataset, options);
    std::printf("final\t%.10g\t%.10g\t%.10g\t%llu\n",
                outcome.estimate.mu_hat, outcome.estimate.ci_low,
                outcome.estimate.ci_high,
                static_cast<unsigned long long>(
                    outcome.estimate.oracle_calls));
    if (outcome.truth_available)
        std::printf("# truth\t%.10g\tabs_error\t%.10g\n", outcome.truth.full,
                    std::abs(outcome.estimate.mu_hat - outcome.truth.full));
    if (outcome.clamped_proxies > 0)
        std::fprintf(stderr, "warning: %llu proxy scores clamped to [0,1]\n",
                     static_cast<unsigned long long>(
                         outcome.clamped_proxies));
    if (outcome.failed_oracle_calls > 0)
        std::fprintf(stderr, "warning: %llu oracle calls failed\n",
                     static_cast<unsigned long long>(
                         outcome.failed_oracle_calls));

    if (!output.empty()) {
        json dump{{"estimate", outcome.estimate.mu_hat},
                  {"ci_low", outcome.estimate.ci_low},
                  {"ci_high", outcome.estimate.ci_high},
                  {"oracle_calls", outcome.estimate.oracle_calls},
                  {"clamped_proxies", outcome.clamped_proxies},
                  {"failed_oracle_calls", outcome.failed_oracle_calls}};
        json segments = json::array();
        for (const auto& [segment, estimate] :
             outcome.estimate.per_segment)
            segments.push_back({segment, estimate});
        dump["per_segment"] = std::move(segments);
        if (outcome.truth_available) {
            dump["truth"] = outcome.truth.full;
            dump["truth_per_segment"] = outcome.truth.per_segment;
        }
        std::ofstream out(output);
        if (!out) throw std::runtime_error(output + ": cannot write");
        out << dump.dump(2) << "\n";
    }
    return 0;
}

int cmd_synth(int shifts, uint64_t length, int strata, double beta,
              uint64_t seed, const std::string& output) {
    const auto stream = generate_stream(shifts, length, strata, seed);
    std::vector<double> stats(stream.records.size());
    for (size_t i = 0; i < stats.size(); ++i)
        stats[i] = stream.records[i].stat;
    const auto proxy = make_proxy(stats, beta, seed);
    write_dataset(output, to_records(stream, proxy));
    std::printf("wrote %zu records, %d shifts at [", stream.records.size(),
                shifts);
    for (size_t i = 0; i < stream.shift_indices.size(); ++i)
        std::printf("%s%llu", i ? ", " : "",
                    static_cast<unsigned long long>(
                        stream.shift_indices[i]));
    std::printf("] to %s\n", output.c_str());
    return 0;
}

int cmd_bench(const std::string& config_path, const std::string& output_dir) {
    const auto config = load_bench_config(config_path);
    const auto result = run_trials(config);
    const std::string aggregate = format_aggregate_table(result.rows);
    const std::string summary = format_summary_table(result.summary);
    std::cout << aggregate << "\n" << summary;
    if (!output_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(output_dir);
        write_reports_jsonl((fs::path(output_dir) / "reports.jsonl").string(),
                            result.reports);
        std::ofstream agg_out(fs::path(output_dir) / "aggregate.tsv");
        agg_out << aggregate;
        std::ofstream sum_out(fs::path(output_dir) / "summary.tsv");
        sum_out << summary;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Streaming approximate aggregation over proxy-scored record "
        "streams"};
    app.require_subcommand(1);

    // parse
    auto* parse = app.add_subcommand(
        "parse", "Check a query and print its canonical form");
    std::string parse_text, parse_file;
    parse->add_option("--query,-q", parse_text, "query text");
    parse->add_option("--file,-f", parse_file, "file containing the query");

    // run
    auto* run = app.add_subcommand(
        "run", "Execute one query against a dataset file");
    std::string run_text, run_file, run_dataset, run_output;
    RunOptions options;
    double rate = 0.0;
    uint64_t budget = 0, window = 0;
    int strata = 0;
    double alpha = -1.0, defensive = -1.0;
    bool no_ci = false;
    run->add_option("--query,-q", run_text, "query text");
    run->add_option("--file,-f", run_file, "file containing the query");
    run->add_option("--dataset,-d", run_dataset, "dataset file")->required();
    run->add_option("--rate", rate, "stream rate in records per second");
    run->add_option("--budget", budget,
                    "per-segment oracle budget (overrides ORACLE LIMIT)");
    run->add_option("--window", window,
                    "segment length in records (overrides TUMBLE)");
    int run_segments = 0;
    run->add_option("--segments", run_segments,
                    "split DURATION into this many segments instead of "
                    "using TUMBLE");
    run->add_option("--k", strata, "stratum count (default 3)");
    run->add_option("--alpha", alpha, "smoothing parameter (default 0.8)");
    run->add_option("--defensive-frac", defensive,
                    "defensive budget fraction (default 0.1)");
    run->add_option("--seed", options.seed, "run seed");
    run->add_option("--method", options.method,
                    "inquest | uniform | fixed-stratified");
    run->add_flag("--fixed-strata", options.fixed_strata,
                  "freeze the stratification");
    run->add_flag("--fixed-alloc", options.fixed_alloc,
                  "freeze a uniform sample allocation");
    run->add_flag("--history-average", options.history_average,
                  "average over all history instead of EWMA");
    run->add_option("--oracle-cmd", options.external_oracle,
                    "external oracle command (line protocol)");
    run->add_flag("--no-ci", no_ci, "skip bootstrap confidence intervals");
    run->add_option("--output,-o", run_output, "machine-readable dump path");

    // synth
    auto* synth = app.add_subcommand(
        "synth", "Generate a synthetic dataset file");
    int shifts = 0;
    uint64_t length = 100000;
    int synth_strata = 3;
    double beta = 0.75;
    uint64_t synth_seed = 1;
    std::string synth_output = "synth.csv";
    synth->add_option("--shifts", shifts, "number of parameter shifts");
    synth->add_option("--length", length, "records to generate");
    synth->add_option("--k", synth_strata, "substream count");
    synth->add_option("--beta", beta, "proxy quality interpolation");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--output,-o", synth_output, "output file");

    // bench
    auto* bench = app.add_subcommand(
        "bench", "Run a benchmark sweep from a config file");
    std::string bench_config, bench_output;
    bench->add_option("--config,-c", bench_config, "JSON config file")
        ->required();
    bench->add_option("--output,-o", bench_output, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*parse) return cmd_parse(read_query_text(parse_text, parse_file));
        if (*run) {
            if (rate > 0.0) options.rate = rate;
            if (budget > 0) options.budget = budget;
            if (window > 0) options.window = window;
            if (run_segments > 0) options.segments = run_segments;
            if (strata > 0) options.strata = strata;
            if (alpha >= 0.0) options.alpha = alpha;
            if (defensive >= 0.0) options.defensive_frac = defensive;
            options.with_ci = !no_ci;
            return cmd_run(read_query_text(run_text, run_file), run_dataset,
                           std::move(options), run_output);
        }
        if (*synth)
            return cmd_synth(shifts, length, synth_strata, beta, synth_seed,
                             synth_output);
        if (*bench) return cmd_bench(bench_config, bench_output);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
    return 0;
}
