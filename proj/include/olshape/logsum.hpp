// Log-domain accumulation: exact max-star, log-sum-exp over ranges.
#pragma once

#include <cmath>
#include <span>

#include "olshape/common.hpp"

namespace olshape {

// max*(a,b) = log(e^a + e^b) = max + log1p(exp(-|a-b|))
inline double max_star(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    return (a > b) ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

inline double log_sum_exp(std::span<const double> v) {
    double acc = kNegInf;
    for (double x : v) acc = max_star(acc, x);
    return acc;
}

// log(p0) and log(p1) of a bit from its LLR = log(p0/p1).
inline double log_p0_from_llr(double llr) { return -std::log1p(std::exp(-llr)); }
inline double log_p1_from_llr(double llr) { return -llr - std::log1p(std::exp(-llr)); }

}  // namespace olshape
