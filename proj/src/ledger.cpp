#include "sharpen/ledger.hpp"

#include <numeric>

namespace sharpen {

void CostLedger::record_step(std::size_t active, std::size_t total) {
    token_evals_ += active;
    worst_case_evals_ += total;
    step_batches_.push_back(static_cast<std::uint32_t>(active));
}

void CostLedger::record_extension(std::size_t tokens) {
    token_evals_ += tokens;
    worst_case_evals_ += tokens;
    extension_evals_ += tokens;
    step_batches_.insert(step_batches_.end(), tokens, 1u);
}

void CostLedger::record_move(std::size_t suffix_len) {
    token_evals_ += suffix_len;
    worst_case_evals_ += suffix_len;
    move_evals_ += suffix_len;
    move_suffix_lengths_.push_back(static_cast<std::uint32_t>(suffix_len));
    step_batches_.insert(step_batches_.end(), suffix_len, 1u);
}

bool CostLedger::consistent() const {
    const std::uint64_t sum =
        std::accumulate(step_batches_.begin(), step_batches_.end(), std::uint64_t{0});
    return sum == token_evals_;
}

}  // namespace sharpen
