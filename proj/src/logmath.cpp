#include "sharpen/logmath.hpp"

#include <algorithm>

#include "sharpen/errors.hpp"

namespace sharpen {

double log_sum_exp(std::span<const double> xs) {
    if (xs.empty()) return kNegInf;
    const double m = *std::max_element(xs.begin(), xs.end());
    if (m == kNegInf) return kNegInf;
    if (std::isinf(m)) return m;
    double sum = 0.0;
    for (double x : xs) sum += std::exp(x - m);
    return m + std::log(sum);
}

namespace {

// Returns (max, sum of exp(x - max)) over a range.
struct Partial {
    double max;
    double scaled_sum;
};

Partial reduce(std::span<const double> xs) {
    if (xs.size() == 1) {
        if (xs[0] == kNegInf) return {kNegInf, 0.0};
        return {xs[0], 1.0};
    }
    const std::size_t half = xs.size() / 2;
    const Partial a = reduce(xs.first(half));
    const Partial b = reduce(xs.subspan(half));
    if (a.max == kNegInf) return b;
    if (b.max == kNegInf) return a;
    if (a.max >= b.max) return {a.max, a.scaled_sum + b.scaled_sum * std::exp(b.max - a.max)};
    return {b.max, b.scaled_sum + a.scaled_sum * std::exp(a.max - b.max)};
}

}  // namespace

double log_sum_exp_pairwise(std::span<const double> xs) {
    if (xs.empty()) return kNegInf;
    const Partial p = reduce(xs);
    if (p.max == kNegInf) return kNegInf;
    return p.max + std::log(p.scaled_sum);
}

void log_normalize(std::vector<double>& xs) {
    const double z = log_sum_exp(xs);
    for (double& x : xs) x -= z;
}

std::vector<double> normalized_weights(std::span<const double> log_w) {
    const double z = log_sum_exp(log_w);
    if (!std::isfinite(z)) throw NumericalError("weights have no finite normalizer");
    std::vector<double> w(log_w.size());
    for (std::size_t i = 0; i < log_w.size(); ++i) w[i] = std::exp(log_w[i] - z);
    return w;
}

}  // namespace sharpen
