#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace streamq {

// Exponentially weighted moving average over a fixed-length vector of
// observations (strata boundaries or allocation fractions). The first
// observation initializes the state; afterwards
//     current' = alpha * observation + (1 - alpha) * current
// componentwise. In history-average mode the state is instead the running
// mean of all observations, which the convergence analysis assumes in place
// of a smoothed one.
class EwmaState {
public:
    enum class Mode { Ewma, HistoryAverage };

    EwmaState() = default;
    EwmaState(double alpha, Mode mode) : alpha_(alpha), mode_(mode) {}

    void observe(std::span<const double> x) {
        ++observations_;
        if (observations_ == 1) {
            current_.assign(x.begin(), x.end());
            return;
        }
        if (x.size() != current_.size())
            throw std::invalid_argument("ewma: observation length changed");
        if (mode_ == Mode::HistoryAverage) {
            const double n = static_cast<double>(observations_);
            for (size_t i = 0; i < x.size(); ++i)
                current_[i] += (x[i] - current_[i]) / n;
        } else {
            for (size_t i = 0; i < x.size(); ++i)
                current_[i] = alpha_ * x[i] + (1.0 - alpha_) * current_[i];
        }
    }

    bool initialized() const { return observations_ > 0; }
    size_t observations() const { return observations_; }
    double alpha() const { return alpha_; }
    const std::vector<double>& current() const { return current_; }

private:
    double alpha_ = 0.8;
    Mode mode_ = Mode::Ewma;
    size_t observations_ = 0;
    std::vector<double> current_;
};

}  // namespace streamq
