#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "streamq/types.hpp"

namespace streamq {

// Generating parameters for one regime: per substream k a predicate rate,
// a statistic standard deviation and a statistic mean.
struct StreamParams {
    std::vector<double> p;      // in [0,1]
    std::vector<double> sigma;  // in [0,3]
    std::vector<double> mu;     // substream k drawn from [3(k-1), 3k]
};

struct SynthRecord {
    uint64_t index = 0;
    double stat = 0.0;
    bool matches = false;
    int substream = 0;  // round-robin lane the record came from
};

// A generated stream plus its regime metadata. shift_indices mark the first
// record of each new regime; params_timeline[r] generated records in
// [shift_indices[r-1], shift_indices[r]).
struct SynthStream {
    std::vector<SynthRecord> records;
    std::vector<uint64_t> shift_indices;
    std::vector<StreamParams> params_timeline;
};

// Draws fresh regime parameters: p_k ~ U[0,1], sigma_k ~ U[0,3],
// mu_k ~ U[3(k-1), 3k]. At least one p_k is kept nonzero.
StreamParams sample_params(int k, uint64_t seed);

// Builds a stream of `length` records from K Gaussian/Bernoulli substreams
// interleaved round-robin, with `n_shifts` parameter re-draws at positions
// sampled uniformly without replacement. Deterministic per seed.
SynthStream generate_stream(int n_shifts, uint64_t length, int k,
                            uint64_t seed);

// Same, with caller-chosen regimes and shift positions (shift_indices must
// be ascending, one per regime after the first).
SynthStream generate_with_params(std::span<const StreamParams> regimes,
                                 std::span<const uint64_t> shift_indices,
                                 uint64_t length, uint64_t seed);

// Proxy scores interpolating between the ground-truth statistic and uniform
// noise: beta * g_i + (1-beta) * U(0,1), min-max normalized over the whole
// list (offline generation mode). Constant inputs normalize to all 0.5.
std::vector<double> make_proxy(std::span<const double> stats, double beta,
                               uint64_t seed);

// Streaming-friendly variant of make_proxy: instead of a global min-max
// pass it applies a fixed affine map from the known parameter range
// [stat_lo, stat_hi] and clamps to [0,1].
std::vector<double> make_proxy_affine(std::span<const double> stats,
                                      double beta, double stat_lo,
                                      double stat_hi, uint64_t seed);

// Proxy that exposes the generating substream exactly: record from
// substream k gets a score uniform in [k/K, (k+1)/K). Aligns proxy strata
// with the generator so per-stratum ground truth is known in closed form.
std::vector<double> make_stratum_proxy(const SynthStream& stream, int k,
                                       uint64_t seed);

// Engine records (index, proxy, inline truth labels) for a generated
// stream. `proxy` must be index-aligned with the stream.
std::vector<Record> to_records(const SynthStream& stream,
                               std::span<const double> proxy);

}  // namespace streamq
