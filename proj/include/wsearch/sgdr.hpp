#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "wsearch/errors.hpp"

namespace wsearch {

// Cosine-annealed rate within one restart period; the minimum rate is 0.
inline double sgdr_learning_rate(double epoch_in_period, double period_length, double l_max) {
    if (!(period_length > 0.0))
        throw InputError("sgdr: period_length must be > 0");
    if (epoch_in_period < 0.0 || epoch_in_period > period_length)
        throw InputError("sgdr: epoch_in_period outside [0, period_length]");
    return l_max * (1.0 + std::cos(std::numbers::pi * epoch_in_period / period_length)) / 2.0;
}

struct SgdrPosition {
    int period_index = 0;         // 0-based restart period
    double epoch_in_period = 0;   // offset into the current period
    double period_length = 0;     // t0 * t_mult^period_index
};

// Locate a cumulative epoch inside the warm-restart sequence t0, t0*tm, t0*tm^2, ...
// Restarts fall at cumulative epochs t0, t0(1+tm), t0(1+tm+tm^2), ...
// (1, 3, 7, 15, 31 for t0=1, tm=2).
inline SgdrPosition sgdr_locate(double cumulative_epoch, double t0, double t_mult) {
    if (!(t0 >= 1.0) || !(t_mult >= 1.0))
        throw InputError("sgdr: need t0 >= 1 and t_mult >= 1");
    if (cumulative_epoch < 0.0)
        throw InputError("sgdr: cumulative_epoch must be >= 0");
    SgdrPosition p;
    p.period_length = t0;
    double remaining = cumulative_epoch;
    while (remaining >= p.period_length) {
        remaining -= p.period_length;
        p.period_length *= t_mult;
        ++p.period_index;
    }
    p.epoch_in_period = remaining;
    return p;
}

inline double sgdr_rate_at(double cumulative_epoch, double t0, double t_mult, double l_max) {
    SgdrPosition p = sgdr_locate(cumulative_epoch, t0, t_mult);
    return sgdr_learning_rate(p.epoch_in_period, p.period_length, l_max);
}

// Cumulative epochs at which the first `count` restarts happen.
inline std::vector<double> sgdr_restart_boundaries(double t0, double t_mult, int count) {
    std::vector<double> out;
    double period = t0, cum = 0.0;
    for (int i = 0; i < count; ++i) {
        cum += period;
        out.push_back(cum);
        period *= t_mult;
    }
    return out;
}

}  // namespace wsearch
