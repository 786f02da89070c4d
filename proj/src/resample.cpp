#include "sharpen/resample.hpp"

#include <algorithm>
#include <cmath>

#include "sharpen/errors.hpp"

namespace sharpen {

namespace {

std::vector<double> cumulative(std::span<const double> w) {
    std::vector<double> c(w.size());
    double run = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) c[i] = run += w[i];
    return c;
}

// Walks sorted positions against the cumulative weights: ancestor i is the
// first index j with c_j >= pos_i (and w_j > 0).
std::vector<int> invert_sorted(std::span<const double> w, std::span<const double> positions) {
    const std::vector<double> c = cumulative(w);
    const std::size_t n = w.size();
    std::vector<int> out(positions.size());
    std::size_t j = 0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        while (j + 1 < n && (c[j] < positions[i] || w[j] == 0.0)) ++j;
        out[i] = static_cast<int>(j);
    }
    return out;
}

int invert_one(const std::vector<double>& c, double u) {
    // First j with c_j > u; clamps round-off at the top end.
    auto it = std::upper_bound(c.begin(), c.end(), u);
    if (it == c.end()) --it;
    return static_cast<int>(it - c.begin());
}

}  // namespace

std::string to_string(Resampler r) {
    switch (r) {
        case Resampler::kSystematic: return "systematic";
        case Resampler::kMultinomial: return "multinomial";
        case Resampler::kStratified: return "stratified";
        case Resampler::kResidual: return "residual";
    }
    return "unknown";
}

Resampler parse_resampler(const std::string& name) {
    if (name == "systematic") return Resampler::kSystematic;
    if (name == "multinomial") return Resampler::kMultinomial;
    if (name == "stratified") return Resampler::kStratified;
    if (name == "residual") return Resampler::kResidual;
    throw InputError("unknown resampler '" + name + "'");
}

void check_normalized(std::span<const double> weights) {
    if (weights.empty()) throw InputError("no weights");
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw InputError("weight is negative or non-finite");
        total += w;
    }
    if (total == 0.0) throw InputError("all weights are zero");
    if (std::abs(total - 1.0) > 1e-9) throw InputError("weights are not normalized");
}

double ess(std::span<const double> weights) {
    check_normalized(weights);
    double sq = 0.0;
    for (double w : weights) sq += w * w;
    return std::clamp(1.0 / sq, 1.0, static_cast<double>(weights.size()));
}

std::vector<int> resample_systematic(std::span<const double> weights, double u0) {
    check_normalized(weights);
    if (!(u0 >= 0.0 && u0 < 1.0)) throw InputError("systematic offset must lie in [0, 1)");
    const std::size_t n = weights.size();
    std::vector<double> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = (u0 + static_cast<double>(i)) / static_cast<double>(n);
    return invert_sorted(weights, pos);
}

std::vector<int> resample_stratified(std::span<const double> weights, CounterRng& rng) {
    check_normalized(weights);
    const std::size_t n = weights.size();
    std::vector<double> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = (static_cast<double>(i) + rng.uniform()) / static_cast<double>(n);
    return invert_sorted(weights, pos);
}

std::vector<int> resample_multinomial(std::span<const double> weights, CounterRng& rng) {
    check_normalized(weights);
    const std::vector<double> c = cumulative(weights);
    std::vector<int> out(weights.size());
    for (int& a : out) a = invert_one(c, rng.uniform() * c.back());
    return out;
}

std::vector<int> resample_residual(std::span<const double> weights, CounterRng& rng) {
    check_normalized(weights);
    const std::size_t n = weights.size();
    const double nd = static_cast<double>(n);
    std::vector<int> counts(n);
    std::vector<double> residual(n);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double expected = nd * weights[i];
        counts[i] = static_cast<int>(std::floor(expected));
        residual[i] = expected - counts[i];
        assigned += counts[i];
    }
    // Round-off can push the floors past n by a hair.
    while (assigned > n) {
        auto it = std::max_element(counts.begin(), counts.end());
        --*it;
        --assigned;
    }
    const std::size_t remaining = n - assigned;
    if (remaining > 0) {
        double rtotal = 0.0;
        for (double r : residual) rtotal += r;
        std::vector<double> c(n);
        double run = 0.0;
        for (std::size_t i = 0; i < n; ++i) c[i] = run += residual[i] / rtotal;
        for (std::size_t k = 0; k < remaining; ++k) ++counts[invert_one(c, rng.uniform() * c.back())];
    }
    std::vector<int> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.insert(out.end(), counts[i], static_cast<int>(i));
    return out;
}

std::vector<int> resample(Resampler scheme, std::span<const double> weights, CounterRng& rng) {
    switch (scheme) {
        case Resampler::kSystematic: return resample_systematic(weights, rng.uniform());
        case Resampler::kMultinomial: return resample_multinomial(weights, rng);
        case Resampler::kStratified: return resample_stratified(weights, rng);
        case Resampler::kResidual: return resample_residual(weights, rng);
    }
    throw InputError("unknown resampler");
}

std::vector<int> offspring_counts(std::span<const int> ancestors, std::size_t n) {
    std::vector<int> counts(n, 0);
    for (int a : ancestors) {
        if (a < 0 || static_cast<std::size_t>(a) >= n) throw InputError("ancestor index out of bounds");
        ++counts[a];
    }
    return counts;
}

}  // namespace sharpen
