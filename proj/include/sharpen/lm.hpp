#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sharpen/ledger.hpp"

namespace sharpen {

using Token = std::int32_t;
using Sequence = std::vector<Token>;

// Log-probabilities over the full alphabet (ordinary tokens plus EOS), indexed
// by token id. Hard zeros are -inf.
using LogProbRow = std::vector<double>;

// V ordinary tokens plus one distinguished EOS; ids run over [0, V].
struct Vocabulary {
    int size = 1;
    Token eos_id = 1;

    int alphabet() const { return size + 1; }
    bool contains(Token t) const { return t >= 0 && t < alphabet(); }
    void validate() const;
};

enum class ModelVariant { kTabular, kNgram, kSyntheticLogit };

std::string to_string(ModelVariant v);
ModelVariant parse_variant(const std::string& name);

// Explicit conditionals keyed by the full prefix. Prefixes absent from `rows`
// fall back to `default_row`; a miss with no default is a ModelSpecError.
struct TabularParams {
    std::map<Sequence, LogProbRow> rows;
    std::optional<LogProbRow> default_row;
};

struct NgramParams {
    int order = 2;
    std::vector<Sequence> corpus;
    // Additive smoothing applied to a context that has been observed.
    double add_k = 0.0;
};

struct SyntheticParams {
    double logit_scale = 2.0;
    double eos_bias = 0.0;
    // EOS only at the hard horizon.
    bool suppress_eos = false;
};

// Per-sequence incremental decode state, the analog of one particle's KV
// cache. It is a pure function of the prefix that produced it.
struct DecodeState {
    int step = 0;
    bool absorbed = false;
    // Tabular: the whole prefix. N-gram: the last order-1 tokens, padded with
    // kBos at the start of the sequence. Unused for synthetic-logit.
    Sequence window;
    // Rolling context hash for synthetic-logit.
    std::uint64_t digest = 0;

    bool operator==(const DecodeState&) const = default;
};

inline constexpr Token kBos = -1;

class ToyModel {
public:
    static ToyModel tabular(Vocabulary vocab, int t_cap, TabularParams params, std::uint64_t seed = 0);
    // Tabular model with a softmax row of seeded uniform logits for every
    // prefix shorter than t_cap. eos_bias is added to the EOS logit.
    static ToyModel random_tabular(Vocabulary vocab, int t_cap, std::uint64_t seed, double logit_scale,
                                   double eos_bias = 0.0);
    static ToyModel ngram(Vocabulary vocab, int t_cap, NgramParams params, std::uint64_t seed = 0);
    static ToyModel synthetic(Vocabulary vocab, int t_cap, SyntheticParams params, std::uint64_t seed);

    const Vocabulary& vocab() const { return vocab_; }
    int alphabet() const { return vocab_.alphabet(); }
    Token eos() const { return vocab_.eos_id; }
    int t_cap() const { return t_cap_; }
    ModelVariant variant() const;
    std::uint64_t seed() const { return seed_; }

    DecodeState initial_state() const;

    // Normalized next-token row. At step t_cap, or once absorbed, the row is
    // one-hot on EOS. Throws StateError for a state this model cannot reach.
    LogProbRow next_logprobs(const DecodeState& state) const;

    // State after appending `token`. Advancing an absorbed state with EOS
    // returns it unchanged.
    DecodeState advance(const DecodeState& state, Token token) const;

    DecodeState state_for_prefix(std::span<const Token> prefix) const;

    void validate_state(const DecodeState& state) const;

    // Accessors used by the model-spec writer.
    const TabularParams* tabular_params() const { return std::get_if<TabularParams>(&params_); }
    const NgramParams* ngram_params() const;
    const SyntheticParams* synthetic_params() const { return std::get_if<SyntheticParams>(&params_); }

private:
    struct NgramTables {
        NgramParams params;
        // Context (length 0..order-1, oldest first) -> next-token counts.
        std::map<Sequence, std::vector<double>> counts;
    };

    ToyModel(Vocabulary vocab, int t_cap, std::uint64_t seed);

    LogProbRow eos_row() const;
    LogProbRow tabular_row(const TabularParams& p, const DecodeState& s) const;
    LogProbRow ngram_row(const NgramTables& p, const DecodeState& s) const;
    LogProbRow synthetic_row(const SyntheticParams& p, const DecodeState& s) const;

    Vocabulary vocab_;
    int t_cap_ = 0;
    std::uint64_t seed_ = 0;
    std::variant<TabularParams, NgramTables, SyntheticParams> params_;
};

// Converts a probability row into a normalized LogProbRow. Throws
// ModelSpecError unless entries are finite, non-negative and sum to 1 within
// 1e-9.
LogProbRow log_row_from_probs(std::span<const double> probs);

// One decode step over a batch of states. Absorbed states get the EOS row and
// cost nothing; the ledger is charged once with the active count.
std::vector<LogProbRow> batched_step(const ToyModel& model, std::span<const DecodeState> states,
                                     CostLedger& ledger, int workers = 1);

// result[k] is an independent copy of states[ancestors[k]].
std::vector<DecodeState> reindex_states(std::span<const DecodeState> states, std::span<const int> ancestors);

// Sum of per-step log-conditionals along y. Returns -inf as soon as y takes a
// zero-probability token (including anything but EOS after EOS).
double sequence_logprob(const ToyModel& model, std::span<const Token> y);

// y truncated after its first EOS.
Sequence terminal_part(std::span<const Token> y, Token eos);

}  // namespace sharpen
