#pragma once

// Independent reference computations. None of these call into the
// enumeration, proposal or weighting code they are used to check.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "sharpen/lm.hpp"

namespace sharpen::testing {

// Base probability of every EOS-terminated sequence, found by listing every
// string over the alphabet up to length t_cap + 1 and multiplying the
// per-step probabilities directly (linear domain).
inline std::map<Sequence, double> brute_force_base(const ToyModel& model) {
    std::map<Sequence, double> out;
    const int A = model.alphabet();
    for (int len = 1; len <= model.t_cap() + 1; ++len) {
        std::vector<int> digits(len, 0);
        for (;;) {
            Sequence y(digits.begin(), digits.end());
            bool ok = y.back() == model.eos();
            for (int i = 0; i + 1 < len && ok; ++i) ok = y[i] != model.eos();
            if (ok) {
                double p = 1.0;
                for (int i = 0; i < len && p > 0.0; ++i) {
                    const LogProbRow row = model.next_logprobs(model.state_for_prefix({y.data(), std::size_t(i)}));
                    p *= std::exp(row[y[i]]);
                }
                if (p > 0.0) out[y] = p;
            }
            int k = len - 1;
            while (k >= 0 && ++digits[k] == A) digits[k--] = 0;
            if (k < 0) break;
        }
    }
    return out;
}

inline std::map<Sequence, double> brute_force_power(const ToyModel& model, double alpha, double* z_out = nullptr) {
    std::map<Sequence, double> base = brute_force_base(model);
    double z = 0.0;
    for (auto& [y, p] : base) z += std::pow(p, alpha);
    for (auto& [y, p] : base) p = std::pow(p, alpha) / z;
    if (z_out) *z_out = z;
    return base;
}

// Per-token temperature joint in the linear domain.
inline std::map<Sequence, double> brute_force_temperature(const ToyModel& model, double tau) {
    std::map<Sequence, double> base = brute_force_base(model);
    for (auto& [y, q] : base) {
        q = 1.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const LogProbRow row = model.next_logprobs(model.state_for_prefix({y.data(), i}));
            double z = 0.0;
            for (double lp : row) z += std::pow(std::exp(lp), 1.0 / tau);
            q *= std::pow(std::exp(row[y[i]]), 1.0 / tau) / z;
        }
    }
    return base;
}

inline double tv_maps(const std::map<Sequence, double>& a, const std::map<Sequence, double>& b) {
    std::map<Sequence, double> diff = a;
    for (const auto& [k, v] : b) diff[k] -= v;
    double s = 0.0;
    for (const auto& [k, v] : diff) s += std::abs(v);
    return 0.5 * s;
}

// Linear-domain sum of p^alpha over a probability vector.
inline double power_sum(const std::vector<double>& p, double alpha) {
    double s = 0.0;
    for (double x : p) s += std::pow(x, alpha);
    return s;
}

}  // namespace sharpen::testing
