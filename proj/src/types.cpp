#include "streamq/types.hpp"

#include <cmath>
#include <numeric>

namespace streamq {

std::string to_string(Aggregate agg) {
    switch (agg) {
        case Aggregate::Avg: return "AVG";
        case Aggregate::Sum: return "SUM";
        case Aggregate::Count: return "COUNT";
    }
    return "?";
}

void Allocation::validate() const {
    double sum = 0.0;
    for (double f : fractions) {
        if (f < 0.0) throw std::invalid_argument("allocation entry < 0");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("allocation does not sum to 1");
}

void BudgetPlan::validate() const {
    if (strata < 1) throw std::invalid_argument("plan: strata < 1");
    if (defensive < 0 || dynamic < 0)
        throw std::invalid_argument("plan: negative budget");
    if (total != defensive + dynamic)
        throw std::invalid_argument("plan: N != N1 + N2");
}

BudgetPlan make_plan(int budget, double defensive_frac, int strata,
                     double alpha) {
    if (budget < 0) throw std::invalid_argument("plan: negative budget");
    if (defensive_frac < 0.0 || defensive_frac > 1.0)
        throw std::invalid_argument("plan: defensive fraction outside [0,1]");
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("plan: alpha outside [0,1]");
    BudgetPlan plan;
    plan.total = budget;
    plan.defensive = static_cast<int>(std::lround(budget * defensive_frac));
    plan.dynamic = budget - plan.defensive;
    plan.strata = strata;
    plan.alpha = alpha;
    plan.validate();
    return plan;
}

uint64_t SegmentStats::total_count() const {
    uint64_t n = 0;
    for (const auto& s : strata) n += s.count;
    return n;
}

}  // namespace streamq
