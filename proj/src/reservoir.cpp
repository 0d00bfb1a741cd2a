#include "streamq/reservoir.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace streamq {

std::vector<uint64_t> round_capacities(std::span<const double> fractions,
                                       uint64_t total) {
    const size_t k = fractions.size();
    std::vector<uint64_t> caps(k, 0);
    std::vector<std::pair<double, size_t>> remainders(k);
    uint64_t assigned = 0;
    for (size_t i = 0; i < k; ++i) {
        const double exact = fractions[i] * static_cast<double>(total);
        const double fl = std::floor(exact);
        caps[i] = static_cast<uint64_t>(std::max(0.0, fl));
        assigned += caps[i];
        remainders[i] = {exact - fl, i};
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (size_t j = 0; assigned < total; ++j)
        ++caps[remainders[j % k].second], ++assigned;
    while (assigned > total) {  // possible only via negative inputs
        for (size_t i = 0; i < k && assigned > total; ++i)
            if (caps[i] > 0) --caps[i], --assigned;
    }
    return caps;
}

std::vector<uint64_t> round_capacities(std::span<const double> fractions,
                                       uint64_t total, uint64_t floor_each) {
    const size_t k = fractions.size();
    auto caps = round_capacities(fractions, total);
    if (k == 0) return caps;
    while (floor_each * k > total) --floor_each;
    for (;;) {
        // Lift any stratum below the floor, taking from the largest.
        size_t poorest = k;
        for (size_t i = 0; i < k; ++i)
            if (caps[i] < floor_each && (poorest == k || caps[i] < caps[poorest]))
                poorest = i;
        if (poorest == k) break;
        size_t richest = 0;
        for (size_t i = 1; i < k; ++i)
            if (caps[i] > caps[richest]) richest = i;
        ++caps[poorest];
        --caps[richest];
    }
    return caps;
}

}  // namespace streamq
