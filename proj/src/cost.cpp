#include "sharpen/cost.hpp"

#include <cmath>

#include "sharpen/errors.hpp"

namespace sharpen {

void CostParams::validate() const {
    if (tokens < 1 || block < 1 || tokens % block != 0) throw InputError("block length must divide T");
    if (moves < 0) throw InputError("moves must be non-negative");
    if (particles < 1) throw InputError("particles must be positive");
    auto one = throughput.find(1);
    if (one == throughput.end() || one->second != 1.0) throw InputError("throughput table needs s(1) = 1");
    double prev = 1.0;
    for (const auto& [b, s] : throughput) {
        if (b < 1) throw InputError("throughput batch sizes must be positive");
        if (!(s >= 1.0) || s > static_cast<double>(b)) throw InputError("throughput must satisfy 1 <= s(b) <= b");
        if (s < prev) throw InputError("throughput must be nondecreasing");
        prev = s;
    }
}

double CostParams::s(std::int64_t batch) const {
    auto it = throughput.find(batch);
    if (it == throughput.end()) throw InputError("throughput not tabulated at batch " + std::to_string(batch));
    return it->second;
}

double smc_cost(std::int64_t particles, std::int64_t tokens) {
    if (particles < 1 || tokens < 1) throw InputError("N and T must be positive");
    return static_cast<double>(particles) * static_cast<double>(tokens);
}

double mh_cost_global(std::int64_t tokens, std::int64_t block, std::int64_t moves) {
    if (tokens < 1 || block < 1 || tokens % block != 0) throw InputError("block length must divide T");
    const double K = static_cast<double>(tokens / block);
    return static_cast<double>(tokens) * (1.0 + static_cast<double>(moves) * (K + 1.0) / 4.0);
}

double mh_cost_lastblock(std::int64_t tokens, std::int64_t moves) {
    if (tokens < 0 || moves < 0) throw InputError("T and M must be non-negative");
    return static_cast<double>(tokens) * overhead_floor(moves);
}

double compute_ratio(const CostParams& p) {
    p.validate();
    return mh_cost_global(p.tokens, p.block, p.moves) / smc_cost(p.particles, p.tokens);
}

double wallclock_ratio(const CostParams& p, EditRegime regime) {
    p.validate();
    const double factor = regime == EditRegime::kGlobal ? mh_cost_global(p.tokens, p.block, p.moves) / p.tokens
                                                        : overhead_floor(p.moves);
    return factor * p.s(p.particles) / static_cast<double>(p.particles);
}

double overhead_floor(std::int64_t moves) {
    if (moves < 0) throw InputError("moves must be non-negative");
    return 1.0 + static_cast<double>(moves) / 2.0;
}

ReconcileReport reconcile(double empirical_mean, double analytic, double tolerance, std::string regime) {
    if (!(analytic > 0.0)) throw InputError("analytic cost must be positive");
    ReconcileReport r;
    r.regime = std::move(regime);
    r.analytic = analytic;
    r.empirical_mean = empirical_mean;
    r.relative_error = std::abs(empirical_mean - analytic) / analytic;
    r.tolerance = tolerance;
    r.pass = tolerance == 0.0 ? empirical_mean == analytic : r.relative_error < tolerance;
    return r;
}

ReconcileReport reconcile(const CostLedger& ledger, double analytic, double tolerance, std::string regime) {
    return reconcile(static_cast<double>(ledger.token_evals()), analytic, tolerance, std::move(regime));
}

ReconcileReport reconcile(std::span<const CostLedger> ledgers, double analytic, double tolerance,
                          std::string regime) {
    if (ledgers.empty()) throw InputError("no ledgers to reconcile");
    double total = 0.0;
    for (const CostLedger& l : ledgers) total += static_cast<double>(l.token_evals());
    return reconcile(total / static_cast<double>(ledgers.size()), analytic, tolerance, std::move(regime));
}

}  // namespace sharpen
