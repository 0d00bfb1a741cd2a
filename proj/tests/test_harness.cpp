#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "streamq/harness.hpp"
#include "streamq/synth.hpp"

using namespace streamq;

namespace {

struct TempPath {
    std::string path;
    explicit TempPath(const std::string& name) {
        path = (std::filesystem::temp_directory_path() / name).string();
    }
    ~TempPath() { std::remove(path.c_str()); }
};

std::string make_dataset_file(const std::string& name, uint64_t length,
                              int shifts, uint64_t seed) {
    const auto stream = generate_stream(shifts, length, 3, seed);
    std::vector<double> stats(stream.records.size());
    for (size_t i = 0; i < stats.size(); ++i) stats[i] = stream.records[i].stat;
    const auto records = to_records(stream, make_proxy(stats, 0.75, seed));
    const auto path =
        (std::filesystem::temp_directory_path() / name).string();
    write_dataset(path, records);
    return path;
}

}  // namespace

TEST_CASE("metrics: median and geometric mean") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(geometric_mean(std::vector<double>{4.0, 9.0}) ==
          doctest::Approx(6.0));
    CHECK(geometric_mean(std::vector<double>{5.0}) == doctest::Approx(5.0));
    CHECK(geometric_mean(std::vector<double>{0.0, 9.0}) == 0.0);
    CHECK_THROWS_AS(median({}), std::invalid_argument);
}

TEST_CASE("metrics: exact estimates give zero median segment RMSE") {
    const std::vector<std::pair<int, double>> estimates{
        {1, 2.0}, {2, 4.0}, {3, 6.0}};
    const std::vector<double> truth{2.0, 4.0, 6.0};
    const auto scores = score_segments(estimates, truth);
    REQUIRE(scores.size() == 3);
    CHECK(median_segment_rmse(scores) == 0.0);
}

TEST_CASE("metrics: segments with undefined truth are skipped") {
    const std::vector<std::pair<int, double>> estimates{
        {1, 2.0}, {2, 5.0}, {3, 9.0}};
    const std::vector<double> truth{
        2.0, std::numeric_limits<double>::quiet_NaN(), 6.0};
    const auto scores = score_segments(estimates, truth);
    REQUIRE(scores.size() == 2);
    CHECK(scores[1].sq_error == doctest::Approx(9.0));
    CHECK(median_segment_rmse(scores) == doctest::Approx(1.5));
}

TEST_CASE("run_trials: deterministic, paired seeds, reaggregation is "
          "bit-exact") {
    const auto dataset =
        make_dataset_file("sq_trials.csv", 5000, 1, 12);

    BenchConfig config;
    config.methods = {MethodSpec{"inquest"}, MethodSpec{"uniform"},
                      MethodSpec{"fixed-stratified"}};
    config.datasets = {dataset};
    config.budgets = {250, 500};
    config.trials = 8;
    config.base_seed = 77;
    config.segments = 5;
    config.threads = 2;

    const auto result = run_trials(config);
    CHECK(result.reports.size() == 2 * 8 * 3);
    for (const auto& report : result.reports) {
        CHECK_FALSE(report.failed);
        CHECK(report.oracle_calls <= report.budget);
    }
    // Methods share the per-trial seed.
    for (size_t i = 0; i < result.reports.size(); i += 3) {
        CHECK(result.reports[i].seed == result.reports[i + 1].seed);
        CHECK(result.reports[i].seed == result.reports[i + 2].seed);
    }

    // Fully deterministic across re-runs and thread counts.
    auto serial = config;
    serial.threads = 1;
    const auto again = run_trials(serial);
    REQUIRE(again.reports.size() == result.reports.size());
    for (size_t i = 0; i < again.reports.size(); ++i) {
        CHECK(again.reports[i].median_segment_rmse ==
              result.reports[i].median_segment_rmse);
        CHECK(again.reports[i].full_query_rmse ==
              result.reports[i].full_query_rmse);
    }

    // Persisted reports reaggregate to the identical printed tables.
    TempPath jsonl("sq_reports.jsonl");
    write_reports_jsonl(jsonl.path, result.reports);
    const auto loaded = read_reports_jsonl(jsonl.path);
    const auto rows = aggregate_reports(loaded);
    const auto summary = summarize(rows);
    CHECK(format_aggregate_table(rows) ==
          format_aggregate_table(result.rows));
    CHECK(format_summary_table(summary) ==
          format_summary_table(result.summary));
}

TEST_CASE("run_trials: failures are recorded and excluded") {
    // A dataset whose predicate is never true: the uniform baseline cannot
    // produce an estimate and every trial fails.
    TempPath file("sq_nomatch_trials.csv");
    {
        std::ofstream out(file.path);
        out << "index,proxy,stat,matches\n";
        for (int i = 0; i < 1000; ++i)
            out << i << ",0.5,1.0,0\n";
    }
    BenchConfig config;
    config.methods = {MethodSpec{"uniform"}};
    config.datasets = {file.path};
    config.budgets = {100};
    config.trials = 3;
    config.segments = 5;
    config.threads = 1;
    const auto result = run_trials(config);
    REQUIRE(result.rows.size() == 1);
    CHECK(result.rows[0].trials_failed == 3);
    CHECK(result.rows[0].trials_ok == 0);
    for (const auto& report : result.reports) {
        CHECK(report.failed);
        CHECK(report.error.find("predicate") != std::string::npos);
    }
}

TEST_CASE("execute_query: runs the reference query shape end to end") {
    const auto dataset =
        make_dataset_file("sq_exec.csv", 4000, 0, 21);
    const auto spec = parse_query(
        "SELECT AVG(count(car)) FROM video\n"
        "TUMBLE(frame_idx, INTERVAL '1,000' FRAMES)\n"
        "ORACLE LIMIT 100\n"
        "USING proxy_count_cars(frame)");
    RunOptions options;
    options.seed = 5;
    options.with_ci = false;
    int emitted = 0;
    options.sink = [&](const SegmentEstimate&) { ++emitted; };
    const auto outcome = execute_query(spec, dataset, options);
    CHECK(emitted == 4);
    CHECK(outcome.estimate.per_segment.size() == 4);
    CHECK(outcome.truth_available);
    CHECK(outcome.estimate.oracle_calls <= 400);
    CHECK(std::abs(outcome.estimate.mu_hat - outcome.truth.full) < 1.5);
}

TEST_CASE("execute_query: external oracle over the line protocol") {
    // The engine sees only (index, proxy); the oracle process owns the
    // labels and answers by record index.
    const auto stream = generate_stream(0, 1200, 3, 41);
    std::vector<double> stats(stream.records.size());
    for (size_t i = 0; i < stats.size(); ++i) stats[i] = stream.records[i].stat;
    const auto records = to_records(stream, make_proxy(stats, 0.75, 41));

    TempPath labels("sq_ext_labels.csv");
    write_dataset(labels.path, records);
    TempPath unlabeled("sq_ext_data.csv");
    {
        std::ofstream out(unlabeled.path);
        out << "index,proxy\n";
        char buf[64];
        for (const auto& rec : records) {
            std::snprintf(buf, sizeof(buf), "%llu,%.17g\n",
                          static_cast<unsigned long long>(rec.index),
                          rec.proxy);
            out << buf;
        }
    }

    const auto spec = parse_query(
        "SELECT AVG(f(x)) FROM s TUMBLE(c, INTERVAL 400 RECORDS) "
        "ORACLE LIMIT 80 USING p(x)");
    RunOptions options;
    options.seed = 11;
    options.with_ci = false;
    options.external_oracle =
        "python3 -u -c 'import sys\n"
        "data = {}\n"
        "with open(\"" + labels.path + "\") as f:\n"
        "    next(f)\n"
        "    for line in f:\n"
        "        parts = line.strip().split(\",\")\n"
        "        data[int(parts[0])] = (parts[3], parts[2])\n"
        "for line in sys.stdin:\n"
        "    m, s = data[int(line)]\n"
        "    print(m, s, flush=True)'";
    const auto outcome = execute_query(spec, unlabeled.path, options);
    CHECK_FALSE(outcome.truth_available);
    CHECK(outcome.failed_oracle_calls == 0);
    CHECK(outcome.estimate.per_segment.size() == 3);
    CHECK(outcome.estimate.oracle_calls <= 240);

    // Same query through the column oracle gives the same estimate for the
    // same seed: the oracle transport must not change the sampling.
    RunOptions column_options;
    column_options.seed = 11;
    column_options.with_ci = false;
    const auto column_outcome =
        execute_query(spec, labels.path, column_options);
    CHECK(outcome.estimate.mu_hat ==
          doctest::Approx(column_outcome.estimate.mu_hat));
}

TEST_CASE("execute_query: time windows need a declared rate") {
    const auto dataset =
        make_dataset_file("sq_exec_rate.csv", 2000, 0, 22);
    const auto spec = parse_query(
        "SELECT AVG(f(x)) FROM s TUMBLE(ts, INTERVAL '5' MINUTES) "
        "ORACLE LIMIT 50 USING p(x)");
    RunOptions options;
    options.with_ci = false;
    CHECK_THROWS_WITH_AS(execute_query(spec, dataset, options),
                         doctest::Contains("--rate"), std::runtime_error);
    options.rate = 1.0;  // 5-minute window = 300 records
    const auto outcome = execute_query(spec, dataset, options);
    CHECK(outcome.estimate.per_segment.size() == 7);
}
