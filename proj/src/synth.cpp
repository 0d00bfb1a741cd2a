#include "streamq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "streamq/rng.hpp"

namespace streamq {

namespace {

StreamParams draw_params(int k, Rng& rng) {
    StreamParams params;
    params.p.resize(k);
    params.sigma.resize(k);
    params.mu.resize(k);
    for (;;) {
        bool any_positive = false;
        for (int i = 0; i < k; ++i) {
            params.p[i] = rng.uniform();
            params.sigma[i] = 3.0 * rng.uniform();
            params.mu[i] = 3.0 * i + 3.0 * rng.uniform();
            any_positive |= params.p[i] > 0.0;
        }
        if (any_positive) return params;
    }
}

}  // namespace

StreamParams sample_params(int k, uint64_t seed) {
    Rng rng(seed);
    return draw_params(k, rng);
}

SynthStream generate_with_params(std::span<const StreamParams> regimes,
                                 std::span<const uint64_t> shift_indices,
                                 uint64_t length, uint64_t seed) {
    if (regimes.empty())
        throw std::invalid_argument("generate: no regimes");
    if (shift_indices.size() + 1 != regimes.size())
        throw std::invalid_argument(
            "generate: need one regime per shift plus the initial one");
    const int k = static_cast<int>(regimes[0].p.size());
    if (k < 1) throw std::invalid_argument("generate: no substreams");
    if (length < static_cast<uint64_t>(k))
        throw std::invalid_argument("generate: length below substream count");

    Rng rng(derive_seed(seed, 0x5f));
    SynthStream stream;
    stream.records.resize(length);
    stream.shift_indices.assign(shift_indices.begin(), shift_indices.end());
    stream.params_timeline.assign(regimes.begin(), regimes.end());

    size_t regime = 0;
    for (uint64_t i = 0; i < length; ++i) {
        while (regime + 1 < regimes.size() &&
               i >= shift_indices[regime])
            ++regime;
        const StreamParams& params = regimes[regime];
        const int lane = static_cast<int>(i % k);
        SynthRecord& rec = stream.records[i];
        rec.index = i;
        rec.substream = lane;
        rec.stat = rng.gaussian(params.mu[lane], params.sigma[lane]);
        rec.matches = rng.bernoulli(params.p[lane]);
    }
    return stream;
}

SynthStream generate_stream(int n_shifts, uint64_t length, int k,
                            uint64_t seed) {
    if (n_shifts < 0) throw std::invalid_argument("generate: n_shifts < 0");
    if (length <= static_cast<uint64_t>(n_shifts))
        throw std::invalid_argument("generate: more shifts than records");
    Rng rng(derive_seed(seed, 0xa1));

    // Shift positions sampled uniformly without replacement from the
    // interior of the stream.
    std::vector<uint64_t> shifts;
    while (shifts.size() < static_cast<size_t>(n_shifts)) {
        const uint64_t pos = 1 + rng.uniform_index(length - 1);
        if (std::find(shifts.begin(), shifts.end(), pos) == shifts.end())
            shifts.push_back(pos);
    }
    std::sort(shifts.begin(), shifts.end());

    std::vector<StreamParams> regimes;
    regimes.reserve(n_shifts + 1);
    for (int r = 0; r <= n_shifts; ++r) regimes.push_back(draw_params(k, rng));

    return generate_with_params(regimes, shifts, length, seed);
}

std::vector<double> make_proxy(std::span<const double> stats, double beta,
                               uint64_t seed) {
    if (beta < 0.0 || beta > 1.0)
        throw std::invalid_argument("make_proxy: beta outside [0,1]");
    Rng rng(derive_seed(seed, 0xb2));
    std::vector<double> proxy(stats.size());
    for (size_t i = 0; i < stats.size(); ++i)
        proxy[i] = beta * stats[i] + (1.0 - beta) * rng.uniform();
    if (proxy.empty()) return proxy;
    const auto [lo_it, hi_it] = std::minmax_element(proxy.begin(), proxy.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi <= lo) {
        std::fill(proxy.begin(), proxy.end(), 0.5);
        return proxy;
    }
    for (double& v : proxy) v = (v - lo) / (hi - lo);
    return proxy;
}

std::vector<double> make_proxy_affine(std::span<const double> stats,
                                      double beta, double stat_lo,
                                      double stat_hi, uint64_t seed) {
    if (beta < 0.0 || beta > 1.0)
        throw std::invalid_argument("make_proxy: beta outside [0,1]");
    if (stat_hi <= stat_lo)
        throw std::invalid_argument("make_proxy: empty stat range");
    Rng rng(derive_seed(seed, 0xb2));
    // The interpolant lives in [beta*lo, beta*hi + (1-beta)].
    const double lo = beta * stat_lo;
    const double hi = beta * stat_hi + (1.0 - beta);
    std::vector<double> proxy(stats.size());
    for (size_t i = 0; i < stats.size(); ++i) {
        const double v = beta * stats[i] + (1.0 - beta) * rng.uniform();
        proxy[i] = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    }
    return proxy;
}

std::vector<double> make_stratum_proxy(const SynthStream& stream, int k,
                                       uint64_t seed) {
    Rng rng(derive_seed(seed, 0xc3));
    std::vector<double> proxy(stream.records.size());
    for (size_t i = 0; i < proxy.size(); ++i) {
        const double lane = stream.records[i].substream;
        proxy[i] = std::min((lane + rng.uniform()) / k,
                            std::nextafter(1.0, 0.0));
    }
    return proxy;
}

std::vector<Record> to_records(const SynthStream& stream,
                               std::span<const double> proxy) {
    if (proxy.size() != stream.records.size())
        throw std::invalid_argument("to_records: proxy length mismatch");
    std::vector<Record> records(stream.records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        records[i].index = stream.records[i].index;
        records[i].proxy = proxy[i];
        records[i].truth =
            OracleOutcome{stream.records[i].matches, stream.records[i].stat};
    }
    return records;
}

}  // namespace streamq
