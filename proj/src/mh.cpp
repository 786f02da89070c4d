#include "sharpen/mh.hpp"

#include <cmath>
#include <numeric>

#include "sharpen/engine.hpp"
#include "sharpen/errors.hpp"
#include "sharpen/logmath.hpp"

namespace sharpen {

std::string to_string(EditRegime r) { return r == EditRegime::kGlobal ? "global" : "last-block"; }

EditRegime parse_regime(const std::string& name) {
    if (name == "global" || name == "global-edit") return EditRegime::kGlobal;
    if (name == "last-block" || name == "lastblock") return EditRegime::kLastBlock;
    throw InputError("unknown edit regime '" + name + "'");
}

void MHConfig::validate() const {
    if (block < 1) throw InputError("block length must be at least 1");
    if (horizon < block || horizon % block != 0) throw InputError("block length must divide the horizon");
    if (moves < 0) throw InputError("moves per block must be non-negative");
    if (!(proposal_temperature > 0.0) || !std::isfinite(proposal_temperature))
        throw InputError("proposal temperature must be positive");
    if (tail_moves < 0) throw InputError("tail moves must be non-negative");
}

namespace {

struct Suffix {
    Sequence tokens;
    std::vector<double> logp;
    std::vector<double> logq;
};

// Samples from the proposal until EOS or until the sequence reaches `horizon`.
Suffix generate(const ToyModel& model, DecodeState state, int start_len, int horizon, const ProposalPolicy& policy,
                CounterRng& rng) {
    Suffix s;
    int len = start_len;
    while (len < horizon && !state.absorbed) {
        const LogProbRow row = model.next_logprobs(state);
        const Proposal draw = propose_token(row, policy, rng);
        s.tokens.push_back(draw.token);
        s.logp.push_back(row[draw.token]);
        s.logq.push_back(draw.log_q);
        state = model.advance(state, draw.token);
        ++len;
    }
    return s;
}

double sum_from(const std::vector<double>& xs, std::size_t from) {
    return std::accumulate(xs.begin() + static_cast<std::ptrdiff_t>(from), xs.end(), 0.0);
}

}  // namespace

void extend_block(ChainState& chain, const ToyModel& model, const MHConfig& config, CostLedger& ledger) {
    const int target = std::min((chain.block + 1) * config.block, config.horizon);
    if (chain.length() >= config.horizon) throw InputError("chain already reached the horizon");
    chain.block += 1;
    if (chain.terminated(model.eos())) return;

    CounterRng rng(config.seed, StreamTag::kMhExtend, {static_cast<std::uint64_t>(chain.block)});
    const ProposalPolicy policy{1.0 / config.proposal_temperature, 0.0};
    Suffix s = generate(model, model.state_for_prefix(chain.tokens), chain.length(), target, policy, rng);
    chain.tokens.insert(chain.tokens.end(), s.tokens.begin(), s.tokens.end());
    chain.token_logp.insert(chain.token_logp.end(), s.logp.begin(), s.logp.end());
    chain.token_logq.insert(chain.token_logq.end(), s.logq.begin(), s.logq.end());
    chain.log_p = sum_from(chain.token_logp, 0);
    ledger.record_extension(s.tokens.size());
}

int draw_edit_index(int length, const MHConfig& config, CounterRng& rng) {
    if (length < 1) throw InputError("cannot edit an empty chain");
    if (config.regime == EditRegime::kGlobal) return static_cast<int>(rng.below(static_cast<std::uint64_t>(length)));
    const int window = std::min(config.block, length);
    return length - window + static_cast<int>(rng.below(static_cast<std::uint64_t>(window)));
}

double edit_index_logprob(int length, int index, const MHConfig& config) {
    if (index < 0 || index >= length) return kNegInf;
    if (config.regime == EditRegime::kGlobal) return -std::log(static_cast<double>(length));
    const int window = std::min(config.block, length);
    if (index < length - window) return kNegInf;
    return -std::log(static_cast<double>(window));
}

void mh_move(ChainState& chain, const ToyModel& model, double alpha, const MHConfig& config, int horizon,
             CounterRng& rng, CostLedger& ledger, int block_label, int move_label) {
    const int len = chain.length();
    const int i = draw_edit_index(len, config, rng);
    const ProposalPolicy policy{1.0 / config.proposal_temperature, 0.0};
    const Sequence prefix(chain.tokens.begin(), chain.tokens.begin() + i);
    Suffix fresh = generate(model, model.state_for_prefix(prefix), i, horizon, policy, rng);
    const int generated = static_cast<int>(fresh.tokens.size());
    ledger.record_move(fresh.tokens.size());

    const double old_suffix_logp = sum_from(chain.token_logp, i);
    const double old_suffix_logq = sum_from(chain.token_logq, i);
    const double new_suffix_logp = sum_from(fresh.logp, 0);
    const double new_suffix_logq = sum_from(fresh.logq, 0);
    const double prefix_logp = chain.log_p - old_suffix_logp;

    MoveRecord rec;
    rec.block = block_label;
    rec.move = move_label;
    rec.edit_index = i;
    rec.suffix_len = generated;
    rec.log_p_old = chain.log_p;
    rec.log_p_new = prefix_logp + new_suffix_logp;

    if (old_suffix_logq == kNegInf) throw SupportError("current suffix has zero proposal density");
    const double log_ratio = alpha * (new_suffix_logp - old_suffix_logp) + (old_suffix_logq - new_suffix_logq) +
                             edit_index_logprob(i + generated, i, config) - edit_index_logprob(len, i, config);
    const double u = rng.uniform();
    rec.accepted = log_ratio >= 0.0 || u < std::exp(log_ratio);

    if (rec.accepted) {
        chain.tokens.resize(i);
        chain.token_logp.resize(i);
        chain.token_logq.resize(i);
        chain.tokens.insert(chain.tokens.end(), fresh.tokens.begin(), fresh.tokens.end());
        chain.token_logp.insert(chain.token_logp.end(), fresh.logp.begin(), fresh.logp.end());
        chain.token_logq.insert(chain.token_logq.end(), fresh.logq.begin(), fresh.logq.end());
        chain.log_p = sum_from(chain.token_logp, 0);
    }
    chain.moves.push_back(rec);
}

double MHResult::acceptance_rate() const {
    if (chain.moves.empty()) return 0.0;
    std::size_t accepted = 0;
    for (const MoveRecord& m : chain.moves) accepted += m.accepted ? 1 : 0;
    return static_cast<double>(accepted) / static_cast<double>(chain.moves.size());
}

MHResult run_mh_power(const ToyModel& model, double alpha, const MHConfig& config) {
    config.validate();
    if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw InputError("alpha must be finite and >= 1");
    MHResult result;
    ChainState& chain = result.chain;
    CounterRng rng(config.seed, StreamTag::kMhMove, {});

    const int K = config.blocks();
    for (int k = 1; k <= K; ++k) {
        extend_block(chain, model, config, result.ledger);
        const int horizon = std::min(k * config.block, config.horizon);
        for (int m = 1; m <= config.moves; ++m) {
            mh_move(chain, model, alpha, config, horizon, rng, result.ledger, k, m);
        }
    }
    for (std::int64_t j = 1; j <= config.tail_moves; ++j) {
        mh_move(chain, model, alpha, config, config.horizon, rng, result.ledger, K + 1, static_cast<int>(j));
        ++result.tail_visits[chain.tokens];
    }
    result.final_sequence = chain.tokens;
    return result;
}

}  // namespace sharpen
