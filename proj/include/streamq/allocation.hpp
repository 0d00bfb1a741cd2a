#pragma once

#include <span>

#include "streamq/types.hpp"

namespace streamq {

// Closed-form optimal split of the dynamic budget N2 across strata, given
// the true per-stratum record counts, predicate rates and standard
// deviations. Minimizes expected_mse() below over the simplex. The
// unconstrained solution
//
//   a_k = |D_k| sqrt(p_k) sigma_k / ((N2/N) sum_j |D_j| sqrt(p_j) sigma_j)
//         - N1 / (N2 K)
//
// can go negative when the defensive budget already over-covers a stratum;
// such strata are pinned at 0 and the solve is repeated on the remaining
// active set, which keeps the result the exact constrained minimizer.
//
// Throws std::invalid_argument when every stratum has zero weight
// (|D_k| sqrt(p_k) sigma_k == 0 for all k) or when N2 == 0.
Allocation optimal_alloc(std::span<const double> counts,
                         std::span<const double> p,
                         std::span<const double> sigma,
                         const BudgetPlan& plan);

// Expected MSE of the stratified estimator under an arbitrary allocation of
// the dynamic budget:
//
//   sum_k w_k^2 sigma_k^2 / (p_k (N1/K + N2 a_k)),
//   w_k = |D_k| p_k / sum_j |D_j| p_j.
//
// Strata whose numerator is zero contribute nothing; a stratum with positive
// numerator but zero effective sample size raises std::invalid_argument
// naming the stratum.
double expected_mse(std::span<const double> counts, std::span<const double> p,
                    std::span<const double> sigma, const Allocation& alloc,
                    const BudgetPlan& plan);

// Closed form of expected_mse at the unconstrained optimum:
//   (sum_k |D_k| sqrt(p_k) sigma_k)^2 / (N (sum_k |D_k| p_k)^2).
// Valid only when optimal_alloc needed no clamping.
double expected_mse_at_optimum(std::span<const double> counts,
                               std::span<const double> p,
                               std::span<const double> sigma,
                               const BudgetPlan& plan);

}  // namespace streamq
