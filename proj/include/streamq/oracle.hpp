#pragma once

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "streamq/engine.hpp"

namespace streamq {

// Thrown when a caller attempts an oracle invocation beyond the active
// window's limit. This is an engine-bug guard, not a recoverable condition.
class BudgetViolation : public std::logic_error {
    using std::logic_error::logic_error;
};

// Resolves outcomes from the labels the record carries (the dataset's stat
// and matches columns).
class ColumnOracle final : public Oracle {
public:
    std::optional<OracleOutcome> invoke(const Record& rec) override {
        if (!rec.truth)
            throw std::runtime_error("column oracle: record carries no labels");
        return rec.truth;
    }
};

// Adapter for an external oracle process speaking a line protocol: one
// request per record, the record index on stdin, and a "matches stat"
// response line on stdout, e.g.
//
//   -> 1041\n
//   <- 1 3.25\n
//
// A malformed response resolves to nullopt (a failed, still-charged call).
class ProcessOracle final : public Oracle {
public:
    // Runs `command` through /bin/sh with both ends piped.
    explicit ProcessOracle(const std::string& command);
    ~ProcessOracle() override;
    ProcessOracle(const ProcessOracle&) = delete;
    ProcessOracle& operator=(const ProcessOracle&) = delete;

    std::optional<OracleOutcome> invoke(const Record& rec) override;

private:
    FILE* to_child_ = nullptr;
    FILE* from_child_ = nullptr;
    int child_pid_ = -1;
};

// Wraps any oracle with per-window invocation accounting. A window is a
// segment for the engine and the whole query for the uniform baseline; the
// sampler opens windows via begin_window(limit). Calls beyond the window
// limit throw BudgetViolation.
class BudgetedOracle final : public Oracle {
public:
    BudgetedOracle(Oracle& inner, uint64_t window_limit)
        : inner_(inner), limit_(window_limit) {}

    void begin_window(uint64_t limit) override {
        if (window_open_) window_calls_.push_back(calls_in_window_);
        limit_ = limit;
        calls_in_window_ = 0;
        window_open_ = true;
        inner_.begin_window(limit);
    }

    std::optional<OracleOutcome> invoke(const Record& rec) override {
        if (calls_in_window_ >= limit_)
            throw BudgetViolation(
                "oracle budget exceeded: " + std::to_string(limit_) +
                " invocations already spent in this window");
        ++calls_in_window_;
        ++total_calls_;
        return inner_.invoke(rec);
    }

    uint64_t total_calls() const { return total_calls_; }
    uint64_t calls_in_window() const { return calls_in_window_; }
    // Closed windows' call counts, then the open one.
    std::vector<uint64_t> window_calls() const {
        auto out = window_calls_;
        if (window_open_) out.push_back(calls_in_window_);
        return out;
    }

private:
    Oracle& inner_;
    uint64_t limit_;
    uint64_t calls_in_window_ = 0;
    uint64_t total_calls_ = 0;
    bool window_open_ = false;
    std::vector<uint64_t> window_calls_;
};

}  // namespace streamq
