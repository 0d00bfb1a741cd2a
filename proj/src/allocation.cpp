#include "streamq/allocation.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace streamq {

namespace {

void check_inputs(std::span<const double> counts, std::span<const double> p,
                  std::span<const double> sigma, const BudgetPlan& plan) {
    plan.validate();
    const size_t k = static_cast<size_t>(plan.strata);
    if (counts.size() != k || p.size() != k || sigma.size() != k)
        throw std::invalid_argument("allocation: input length != strata count");
    for (size_t i = 0; i < k; ++i) {
        if (counts[i] < 0.0 || p[i] < 0.0 || sigma[i] < 0.0)
            throw std::invalid_argument("allocation: negative input");
    }
}

// Neyman-style stratum weight |D_k| sqrt(p_k) sigma_k.
double stratum_weight(double count, double p, double sigma) {
    return count * std::sqrt(p) * sigma;
}

}  // namespace

Allocation optimal_alloc(std::span<const double> counts,
                         std::span<const double> p,
                         std::span<const double> sigma,
                         const BudgetPlan& plan) {
    check_inputs(counts, p, sigma, plan);
    if (plan.dynamic <= 0)
        throw std::invalid_argument("optimal_alloc: dynamic budget N2 is 0");

    const int k = plan.strata;
    std::vector<double> weight(k);
    for (int i = 0; i < k; ++i)
        weight[i] = stratum_weight(counts[i], p[i], sigma[i]);

    std::vector<bool> active(k);
    int active_count = 0;
    for (int i = 0; i < k; ++i) {
        active[i] = weight[i] > 0.0;
        active_count += active[i] ? 1 : 0;
    }
    if (active_count == 0)
        throw std::invalid_argument(
            "degenerate stream: no informative stratum");

    const double n1 = plan.defensive;
    const double n2 = plan.dynamic;
    const double floor_share = n1 / k;

    // Solve on the active set; pin negative entries at 0 and re-solve until
    // every active entry is nonnegative. At most K rounds.
    Allocation alloc;
    alloc.fractions.assign(k, 0.0);
    for (;;) {
        double weight_sum = 0.0;
        for (int i = 0; i < k; ++i)
            if (active[i]) weight_sum += weight[i];
        const double budget = active_count * floor_share + n2;

        bool clamped = false;
        for (int i = 0; i < k; ++i) {
            if (!active[i]) {
                alloc.fractions[i] = 0.0;
                continue;
            }
            const double a =
                (budget * weight[i] / weight_sum - floor_share) / n2;
            if (a < 0.0) {
                active[i] = false;
                --active_count;
                clamped = true;
            } else {
                alloc.fractions[i] = a;
            }
        }
        if (!clamped) break;
    }

    // Float cleanup; the active-set solve sums to 1 by construction.
    double sum = std::accumulate(alloc.fractions.begin(),
                                 alloc.fractions.end(), 0.0);
    for (double& f : alloc.fractions) f /= sum;
    return alloc;
}

double expected_mse(std::span<const double> counts, std::span<const double> p,
                    std::span<const double> sigma, const Allocation& alloc,
                    const BudgetPlan& plan) {
    check_inputs(counts, p, sigma, plan);
    if (alloc.strata_count() != plan.strata)
        throw std::invalid_argument("expected_mse: allocation length mismatch");

    const int k = plan.strata;
    double matching_mass = 0.0;  // sum_j |D_j| p_j
    for (int i = 0; i < k; ++i) matching_mass += counts[i] * p[i];
    if (matching_mass == 0.0) return 0.0;

    const double floor_share = static_cast<double>(plan.defensive) / k;
    double mse = 0.0;
    for (int i = 0; i < k; ++i) {
        const double w = counts[i] * p[i] / matching_mass;
        const double numer = w * w * sigma[i] * sigma[i];
        if (numer == 0.0) continue;
        const double effective =
            p[i] * (floor_share + plan.dynamic * alloc.fractions[i]);
        if (effective <= 0.0)
            throw std::invalid_argument(
                "expected_mse: stratum " + std::to_string(i + 1) +
                " has positive weight but zero effective samples");
        mse += numer / effective;
    }
    return mse;
}

double expected_mse_at_optimum(std::span<const double> counts,
                               std::span<const double> p,
                               std::span<const double> sigma,
                               const BudgetPlan& plan) {
    check_inputs(counts, p, sigma, plan);
    if (plan.total <= 0)
        throw std::invalid_argument("expected_mse_at_optimum: N is 0");
    double weight_sum = 0.0;
    double matching_mass = 0.0;
    for (int i = 0; i < plan.strata; ++i) {
        weight_sum += stratum_weight(counts[i], p[i], sigma[i]);
        matching_mass += counts[i] * p[i];
    }
    if (matching_mass == 0.0) return 0.0;
    return weight_sum * weight_sum /
           (plan.total * matching_mass * matching_mass);
}

}  // namespace streamq
