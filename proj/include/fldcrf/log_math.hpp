#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace fldcrf {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(sum(exp(v))); returns -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> v) {
    double top = kNegInf;
    for (double a : v) top = std::max(top, a);
    if (top == kNegInf) return kNegInf;
    double sum = 0.0;
    for (double a : v) sum += std::exp(a - top);
    return top + std::log(sum);
}

/// log(exp(a) + exp(b)).
inline double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    if (a < b) std::swap(a, b);
    return a + std::log1p(std::exp(b - a));
}

}  // namespace fldcrf
