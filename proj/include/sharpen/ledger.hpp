#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace sharpen {

// Token-eval counter. One token-eval is one cached forward step for one
// sequence; a decode step at batch size b costs b token-evals.
//
// Two SMC conventions are tracked side by side: token_evals() counts only
// particles that actually queried the model (absorbed particles are free),
// worst_case_evals() charges every particle on every step.
class CostLedger {
public:
    // A batched decode step over `total` sequences of which `active` ran.
    void record_step(std::size_t active, std::size_t total);
    // MH block extension: `tokens` sequential batch-1 steps.
    void record_extension(std::size_t tokens);
    // MH move that regenerated `suffix_len` tokens at batch 1.
    void record_move(std::size_t suffix_len);

    std::uint64_t token_evals() const { return token_evals_; }
    std::uint64_t worst_case_evals() const { return worst_case_evals_; }
    std::uint64_t extension_evals() const { return extension_evals_; }
    std::uint64_t move_evals() const { return move_evals_; }

    const std::vector<std::uint32_t>& step_batches() const { return step_batches_; }
    const std::vector<std::uint32_t>& move_suffix_lengths() const { return move_suffix_lengths_; }

    // token_evals() equals the sum of recorded per-step batch sizes.
    bool consistent() const;

private:
    std::uint64_t token_evals_ = 0;
    std::uint64_t worst_case_evals_ = 0;
    std::uint64_t extension_evals_ = 0;
    std::uint64_t move_evals_ = 0;
    std::vector<std::uint32_t> step_batches_;
    std::vector<std::uint32_t> move_suffix_lengths_;
};

}  // namespace sharpen
