#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "sharpen/lm.hpp"

namespace sharpen::testing {

// Alphabet {a=0, EOS=1}, t_cap 1: sequences "a EOS" (0.75) and "EOS" (0.25).
inline ToyModel two_sequence_model() {
    TabularParams p;
    p.rows[{}] = log_row_from_probs(std::vector<double>{0.75, 0.25});
    return ToyModel::tabular({1, 1}, 1, std::move(p));
}

// Alphabet {a=0, b=1, EOS=2}, t_cap 2. After "a" the next token is a coin
// flip between a and b; after "b" EOS is certain. Per-token temperature
// sampling at tau = 1/alpha keeps "b EOS" at 0.5 while the power target
// moves it to 16/18 at alpha = 4.
inline ToyModel mismatch_model() {
    TabularParams p;
    p.rows[{}] = log_row_from_probs(std::vector<double>{0.5, 0.5, 0.0});
    p.rows[{0}] = log_row_from_probs(std::vector<double>{0.5, 0.5, 0.0});
    p.rows[{1}] = log_row_from_probs(std::vector<double>{0.0, 0.0, 1.0});
    return ToyModel::tabular({2, 2}, 2, std::move(p));
}

// The enumerable model used by the oracle-exactness checks: alphabet 3
// (two ordinary tokens plus EOS), t_cap 4.
inline ToyModel oracle_model() { return ToyModel::random_tabular({2, 2}, 4, 4, 1.0); }

// Every row one-hot: a, a, then forced EOS.
inline ToyModel deterministic_model() {
    TabularParams p;
    p.default_row = log_row_from_probs(std::vector<double>{1.0, 0.0, 0.0});
    return ToyModel::tabular({2, 2}, 2, std::move(p));
}

inline ToyModel no_eos_synthetic(int t_cap, std::uint64_t seed, int vocab = 7) {
    SyntheticParams sp;
    sp.logit_scale = 1.5;
    sp.suppress_eos = true;
    return ToyModel::synthetic({vocab, vocab}, t_cap, sp, seed);
}

}  // namespace sharpen::testing
