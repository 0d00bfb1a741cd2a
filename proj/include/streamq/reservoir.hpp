#pragma once

#include <span>
#include <vector>

#include "streamq/rng.hpp"
#include "streamq/types.hpp"

namespace streamq {

// Fixed-capacity uniform sample of a stream of unknown length (Algorithm R).
// After any number of offers, each offered item is held with probability
// min(capacity / seen, 1). Held records keep their payload buffered; the
// oracle is invoked only on the records still held when the segment closes,
// so evicted records never cost budget.
template <typename T>
class BasicReservoir {
public:
    explicit BasicReservoir(uint64_t capacity) : capacity_(capacity) {}

    void offer(const T& item, Rng& rng) {
        ++seen_;
        if (capacity_ == 0) return;
        if (held_.size() < capacity_) {
            held_.push_back(item);
            return;
        }
        const uint64_t slot = rng.uniform_index(seen_);
        if (slot < capacity_) held_[slot] = item;
    }

    uint64_t capacity() const { return capacity_; }
    uint64_t seen() const { return seen_; }
    std::span<const T> held() const { return held_; }
    std::vector<T> take() { return std::move(held_); }

private:
    uint64_t capacity_;
    uint64_t seen_ = 0;
    std::vector<T> held_;
};

using Reservoir = BasicReservoir<Record>;

// Maps a proxy score to its stratum: the k with proxy in [b_{k-1}, b_k),
// the last stratum closed at 1. Throws for scores outside [0,1]; callers
// clamp at ingestion.
inline int route(double proxy, const Stratification& strat) {
    if (proxy < 0.0 || proxy > 1.0)
        throw std::invalid_argument("route: proxy outside [0,1]");
    int k = 0;
    const int n = static_cast<int>(strat.boundaries.size());
    while (k < n && proxy >= strat.boundaries[k]) ++k;
    return k;
}

inline int route(const Record& rec, const Stratification& strat) {
    return route(rec.proxy, strat);
}

// Uniform sample of `budget` records from a whole segment: one reservoir
// over the stream, no length known a priori.
template <typename RecordRange>
std::vector<Record> uniform_sample(RecordRange&& segment, uint64_t budget,
                                   Rng& rng) {
    Reservoir res(budget);
    for (const Record& rec : segment) res.offer(rec, rng);
    return res.take();
}

// Largest-remainder rounding of fractional shares to integer capacities
// summing exactly to `total`. Ties go to the lower index.
std::vector<uint64_t> round_capacities(std::span<const double> fractions,
                                       uint64_t total);

// Same, but additionally guarantees every stratum at least `floor_each`
// (lowered uniformly if K * floor_each exceeds the total). Excess is taken
// from the largest capacities first.
std::vector<uint64_t> round_capacities(std::span<const double> fractions,
                                       uint64_t total, uint64_t floor_each);

}  // namespace streamq
