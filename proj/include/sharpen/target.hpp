#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sharpen/lm.hpp"

namespace sharpen {

inline constexpr std::uint64_t kEnumerationBudget = 10'000'000;

struct SequenceMass {
    Sequence tokens;  // EOS-terminated
    double log_p = 0.0;
    double log_pi = 0.0;
};

// Every EOS-terminated sequence of positive base probability, in depth-first
// ascending-token order, with its base and power log-masses.
//
// When produced by temperature_joint, `alpha` holds 1/tau, `log_pi` is the
// per-token temperature joint and `log_z` is 0.
struct ExactTarget {
    double alpha = 1.0;
    std::vector<SequenceMass> entries;
    double log_z = 0.0;
};

struct WeightedSequence {
    Sequence tokens;
    double weight = 0.0;
};

// Per-step quantities along one prefix path.
struct RenyiReport {
    double alpha = 2.0;
    std::vector<double> renyi;  // H_alpha of each step's next-token row
    std::vector<double> log_z;  // log sum_v p_t(v)^alpha

    double total_log_z() const;
    double total_renyi() const;
};

// Brute-force power target. Throws CapacityError past `budget` sequences and
// ModelSpecError if the enumerated base mass differs from 1 by over 1e-9.
ExactTarget enumerate_target(const ToyModel& model, double alpha, std::uint64_t budget = kEnumerationBudget);

// Exact joint of per-token temperature sampling, q(y) = prod softmax(l_t / tau).
ExactTarget temperature_joint(const ToyModel& model, double tau, std::uint64_t budget = kEnumerationBudget);

// log sum_v p(v)^alpha.
double power_normalizer(std::span<const double> row, double alpha);

// Renyi entropy of order alpha. alpha must be positive and not 1.
double renyi_entropy(std::span<const double> row, double alpha);

// Steps past the first EOS are absorbing and contribute nothing.
RenyiReport path_weight_decomposition(const ToyModel& model, double alpha, std::span<const Token> prefix);

// Total variation between a weighted sample set and a table. Samples absent
// from the table count entirely as discrepancy. Weights must sum to 1.
double tv_distance(std::span<const WeightedSequence> samples, const ExactTarget& target);

// Total variation between the log_pi columns of two tables.
double tv_distance(const ExactTarget& a, const ExactTarget& b);

}  // namespace sharpen
