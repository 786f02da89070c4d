#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "sharpen/ledger.hpp"
#include "sharpen/mh.hpp"

namespace sharpen {

// Inputs of the analytic decode-cost model. `throughput` tabulates s(b), the
// batch-b speed-up over batch 1.
struct CostParams {
    std::int64_t tokens = 2048;  // T
    std::int64_t block = 128;    // B
    std::int64_t moves = 10;     // M
    std::int64_t particles = 64; // N
    std::map<std::int64_t, double> throughput{{1, 1.0}};

    std::int64_t blocks() const { return tokens / block; }
    // Throws InputError unless B | T, s(1) = 1, s is nondecreasing and 1 <= s(b) <= b.
    void validate() const;
    double s(std::int64_t batch) const;
};

double smc_cost(std::int64_t particles, std::int64_t tokens);

// T (1 + M (K + 1) / 4) with K = T / B.
double mh_cost_global(std::int64_t tokens, std::int64_t block, std::int64_t moves);

// T (1 + M / 2).
double mh_cost_lastblock(std::int64_t tokens, std::int64_t moves);

// (1 + M (K + 1) / 4) / N.
double compute_ratio(const CostParams& p);

// Compute factor of the regime times s(N) / N.
double wallclock_ratio(const CostParams& p, EditRegime regime = EditRegime::kGlobal);

// 1 + M / 2.
double overhead_floor(std::int64_t moves);

struct ReconcileReport {
    std::string regime;
    double analytic = 0.0;
    double empirical_mean = 0.0;
    double relative_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// |empirical - analytic| / analytic against `tolerance` (0 demands equality).
ReconcileReport reconcile(double empirical_mean, double analytic, double tolerance, std::string regime);
ReconcileReport reconcile(const CostLedger& ledger, double analytic, double tolerance, std::string regime);
ReconcileReport reconcile(std::span<const CostLedger> ledgers, double analytic, double tolerance,
                          std::string regime);

}  // namespace sharpen
