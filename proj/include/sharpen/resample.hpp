#pragma once

#include <span>
#include <string>
#include <vector>

#include "sharpen/rng.hpp"

namespace sharpen {

enum class Resampler { kSystematic, kMultinomial, kStratified, kResidual };

std::string to_string(Resampler r);
Resampler parse_resampler(const std::string& name);

// Throws InputError unless every weight is finite, non-negative and the total
// is 1 within 1e-9.
void check_normalized(std::span<const double> weights);

// 1 / sum w_i^2 for normalized weights.
double ess(std::span<const double> weights);

// Ancestor indices are 0-based and there are as many as there are weights.
std::vector<int> resample_systematic(std::span<const double> weights, double u0);
std::vector<int> resample_multinomial(std::span<const double> weights, CounterRng& rng);
std::vector<int> resample_stratified(std::span<const double> weights, CounterRng& rng);
std::vector<int> resample_residual(std::span<const double> weights, CounterRng& rng);

// Dispatches on the scheme; systematic draws its single offset from rng.
std::vector<int> resample(Resampler scheme, std::span<const double> weights, CounterRng& rng);

std::vector<int> offspring_counts(std::span<const int> ancestors, std::size_t n);

}  // namespace sharpen
