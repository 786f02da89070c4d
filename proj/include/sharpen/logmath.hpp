#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace sharpen {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum(exp(xs))), shifted by the maximum. Returns -inf for an empty span
// or when every entry is -inf.
double log_sum_exp(std::span<const double> xs);

// Same quantity, reduced as a balanced pairwise tree so the result does not
// depend on how a caller might split the work.
double log_sum_exp_pairwise(std::span<const double> xs);

// log(exp(a) + exp(b)).
inline double log_add_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = a > b ? a : b;
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

// xs - log_sum_exp(xs), in place.
void log_normalize(std::vector<double>& xs);

// exp(log_w - log_sum_exp(log_w)). Throws NumericalError when every entry is
// -inf or the normalizer is not finite.
std::vector<double> normalized_weights(std::span<const double> log_w);

}  // namespace sharpen
