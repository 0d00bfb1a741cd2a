#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>

namespace streamq {

// All randomness in the library flows through this wrapper around
// std::mt19937_64. The raw engine output is turned into doubles, bounded
// integers and Gaussian deviates with the explicit constructions below
// instead of the std:: distributions, whose output is implementation
// defined; this keeps runs bit-reproducible for a given seed.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    // Uniform double in [0, 1), 53 mantissa bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). Rejection keeps the result exactly uniform.
    uint64_t uniform_index(uint64_t n) {
        assert(n > 0);
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal deviate, Marsaglia polar method.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    double gaussian(double mean, double stddev) {
        return mean + stddev * gaussian();
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// splitmix64 finalizer; good avalanche, used only for seed derivation.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministically derives an independent child seed from a base seed and
// up to three stream coordinates (e.g. segment, stratum, trial). Every
// component that needs its own random stream obtains it through this
// function so that a single run seed pins the whole run.
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0,
                            uint64_t c = 0) {
    uint64_t h = mix64(base ^ 0x6a09e667f3bcc909ULL);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    return h;
}

}  // namespace streamq
