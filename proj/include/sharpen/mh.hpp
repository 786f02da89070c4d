#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sharpen/ledger.hpp"
#include "sharpen/lm.hpp"
#include "sharpen/rng.hpp"

namespace sharpen {

enum class EditRegime { kGlobal, kLastBlock };

std::string to_string(EditRegime r);
EditRegime parse_regime(const std::string& name);

struct MHConfig {
    int block = 16;         // B
    int moves = 10;         // M, per block
    EditRegime regime = EditRegime::kGlobal;
    double proposal_temperature = 1.0;
    std::uint64_t seed = 0;
    int horizon = 256;      // T; K = T / B blocks
    // Extra moves on the finished sequence, recorded as chain samples.
    std::int64_t tail_moves = 0;

    int blocks() const { return horizon / block; }
    void validate() const;
};

struct MoveRecord {
    int block = 0;  // 1-based; K + 1 for tail moves
    int move = 0;   // 1-based within the block
    int edit_index = 0;
    int suffix_len = 0;
    bool accepted = false;
    double log_p_old = 0.0;
    double log_p_new = 0.0;
};

// The current sequence with its per-position base and proposal
// log-probabilities, i.e. what a KV-cached implementation would already hold.
struct ChainState {
    Sequence tokens;
    std::vector<double> token_logp;
    std::vector<double> token_logq;
    double log_p = 0.0;
    int block = 0;  // blocks extended so far
    std::vector<MoveRecord> moves;

    int length() const { return static_cast<int>(tokens.size()); }
    bool terminated(Token eos) const { return !tokens.empty() && tokens.back() == eos; }
};

// Appends tokens from the proposal until the next block boundary or EOS.
void extend_block(ChainState& chain, const ToyModel& model, const MHConfig& config, CostLedger& ledger);

// Global: uniform on [0, len). Last-block: uniform on the last B positions.
int draw_edit_index(int length, const MHConfig& config, CounterRng& rng);

// log of the probability that draw_edit_index picks `index` at `length`.
double edit_index_logprob(int length, int index, const MHConfig& config);

// One independence-MH move: keep tokens before the edit index, regenerate the
// rest up to `horizon` (or EOS), accept against p^alpha.
void mh_move(ChainState& chain, const ToyModel& model, double alpha, const MHConfig& config, int horizon,
             CounterRng& rng, CostLedger& ledger, int block_label, int move_label);

struct MHResult {
    Sequence final_sequence;
    ChainState chain;
    CostLedger ledger;
    // Visit counts of the chain state after each tail move.
    std::map<Sequence, std::int64_t> tail_visits;

    double acceptance_rate() const;
};

MHResult run_mh_power(const ToyModel& model, double alpha, const MHConfig& config);

}  // namespace sharpen
