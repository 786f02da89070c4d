#include "sharpen/lm.hpp"

#include <algorithm>
#include <cmath>

#include "sharpen/errors.hpp"
#include "sharpen/logmath.hpp"
#include "sharpen/parallel.hpp"
#include "sharpen/rng.hpp"

namespace sharpen {

namespace {

constexpr std::uint64_t kMaxMaterializedRows = 1'000'000;

std::uint64_t fold_token(std::uint64_t digest, Token t) {
    return mix64(digest ^ mix64(static_cast<std::uint64_t>(t) + 1));
}

}  // namespace

void Vocabulary::validate() const {
    if (size < 1) throw ModelSpecError("vocabulary needs at least one ordinary token");
    if (!contains(eos_id)) throw ModelSpecError("eos_id outside the alphabet");
}

std::string to_string(ModelVariant v) {
    switch (v) {
        case ModelVariant::kTabular: return "tabular-explicit";
        case ModelVariant::kNgram: return "ngram";
        case ModelVariant::kSyntheticLogit: return "synthetic-logit";
    }
    return "unknown";
}

ModelVariant parse_variant(const std::string& name) {
    if (name == "tabular-explicit" || name == "tabular") return ModelVariant::kTabular;
    if (name == "ngram") return ModelVariant::kNgram;
    if (name == "synthetic-logit" || name == "synthetic") return ModelVariant::kSyntheticLogit;
    throw ModelSpecError("unknown model variant '" + name + "'");
}

LogProbRow log_row_from_probs(std::span<const double> probs) {
    double total = 0.0;
    for (double p : probs) {
        if (!std::isfinite(p) || p < 0.0) throw ModelSpecError("probability row has a negative or non-finite entry");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ModelSpecError("probability row does not sum to 1");
    LogProbRow row(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) row[i] = probs[i] > 0.0 ? std::log(probs[i]) : kNegInf;
    log_normalize(row);
    return row;
}

ToyModel::ToyModel(Vocabulary vocab, int t_cap, std::uint64_t seed) : vocab_(vocab), t_cap_(t_cap), seed_(seed) {
    vocab_.validate();
    if (t_cap < 1) throw ModelSpecError("t_cap must be at least 1");
}

ToyModel ToyModel::tabular(Vocabulary vocab, int t_cap, TabularParams params, std::uint64_t seed) {
    ToyModel m(vocab, t_cap, seed);
    auto check = [&](const LogProbRow& row) {
        if (static_cast<int>(row.size()) != vocab.alphabet()) throw ModelSpecError("tabular row has the wrong width");
        if (std::abs(log_sum_exp(row)) > 1e-12) throw ModelSpecError("tabular row is not normalized");
    };
    for (const auto& [prefix, row] : params.rows) {
        for (Token t : prefix) {
            if (!vocab.contains(t) || t == vocab.eos_id) throw ModelSpecError("tabular prefix holds an invalid token");
        }
        check(row);
    }
    if (params.default_row) check(*params.default_row);
    m.params_ = std::move(params);
    return m;
}

ToyModel ToyModel::random_tabular(Vocabulary vocab, int t_cap, std::uint64_t seed, double logit_scale,
                                  double eos_bias) {
    vocab.validate();
    std::uint64_t count = 0;
    std::uint64_t layer = 1;
    for (int k = 0; k < t_cap; ++k) {
        count += layer;
        if (count > kMaxMaterializedRows) throw CapacityError("random tabular model has too many prefixes");
        layer *= static_cast<std::uint64_t>(vocab.size);
    }

    std::vector<Token> ordinary;
    for (Token t = 0; t < vocab.alphabet(); ++t) {
        if (t != vocab.eos_id) ordinary.push_back(t);
    }

    TabularParams params;
    std::vector<Sequence> frontier{Sequence{}};
    std::uint64_t row_id = 0;
    for (int depth = 0; depth < t_cap; ++depth) {
        std::vector<Sequence> next;
        for (const Sequence& prefix : frontier) {
            CounterRng rng(seed, StreamTag::kModelParams, {row_id++});
            LogProbRow row(vocab.alphabet());
            for (double& x : row) x = logit_scale * (2.0 * rng.uniform() - 1.0);
            row[vocab.eos_id] += eos_bias;
            log_normalize(row);
            params.rows.emplace(prefix, std::move(row));
            if (depth + 1 < t_cap) {
                for (Token t : ordinary) {
                    Sequence child = prefix;
                    child.push_back(t);
                    next.push_back(std::move(child));
                }
            }
        }
        frontier = std::move(next);
    }
    return tabular(vocab, t_cap, std::move(params), seed);
}

ToyModel ToyModel::ngram(Vocabulary vocab, int t_cap, NgramParams params, std::uint64_t seed) {
    ToyModel m(vocab, t_cap, seed);
    if (params.order < 1) throw ModelSpecError("n-gram order must be at least 1");
    if (params.add_k < 0.0 || !std::isfinite(params.add_k)) throw ModelSpecError("add_k must be non-negative");
    if (params.corpus.empty()) throw ModelSpecError("n-gram corpus is empty");

    NgramTables tables;
    const int ctx_len = params.order - 1;
    for (const Sequence& raw : params.corpus) {
        Sequence seq = raw;
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (!vocab.contains(seq[i])) throw ModelSpecError("corpus token outside the alphabet");
            if (seq[i] == vocab.eos_id && i + 1 != seq.size()) throw ModelSpecError("corpus has tokens after EOS");
        }
        if (seq.empty() || seq.back() != vocab.eos_id) seq.push_back(vocab.eos_id);

        Sequence padded(ctx_len, kBos);
        padded.insert(padded.end(), seq.begin(), seq.end());
        for (std::size_t pos = ctx_len; pos < padded.size(); ++pos) {
            const Token next = padded[pos];
            // Every suffix of the full context, from length ctx_len down to 0.
            for (int len = ctx_len; len >= 0; --len) {
                Sequence ctx(padded.begin() + (pos - len), padded.begin() + pos);
                auto& c = tables.counts[ctx];
                if (c.empty()) c.assign(vocab.alphabet(), 0.0);
                c[next] += 1.0;
            }
        }
    }
    tables.params = std::move(params);
    m.params_ = std::move(tables);
    return m;
}

ToyModel ToyModel::synthetic(Vocabulary vocab, int t_cap, SyntheticParams params, std::uint64_t seed) {
    ToyModel m(vocab, t_cap, seed);
    if (!std::isfinite(params.logit_scale) || params.logit_scale < 0.0) throw ModelSpecError("bad logit_scale");
    if (!std::isfinite(params.eos_bias)) throw ModelSpecError("bad eos_bias");
    m.params_ = params;
    return m;
}

ModelVariant ToyModel::variant() const {
    switch (params_.index()) {
        case 0: return ModelVariant::kTabular;
        case 1: return ModelVariant::kNgram;
        default: return ModelVariant::kSyntheticLogit;
    }
}

const NgramParams* ToyModel::ngram_params() const {
    const auto* t = std::get_if<NgramTables>(&params_);
    return t ? &t->params : nullptr;
}

DecodeState ToyModel::initial_state() const {
    DecodeState s;
    if (const auto* t = std::get_if<NgramTables>(&params_)) s.window.assign(t->params.order - 1, kBos);
    if (variant() == ModelVariant::kSyntheticLogit) s.digest = mix64(seed_);
    return s;
}

void ToyModel::validate_state(const DecodeState& s) const {
    if (s.step < 0 || s.step > t_cap_ + 1) throw StateError("decode state step outside [0, t_cap + 1]");
    if (s.step == t_cap_ + 1 && !s.absorbed) throw StateError("decode state ran past the forced EOS");
    if (s.absorbed && s.step == 0) throw StateError("absorbed decode state at step 0");
    switch (variant()) {
        case ModelVariant::kTabular:
            if (static_cast<int>(s.window.size()) != s.step) throw StateError("tabular state window mismatch");
            break;
        case ModelVariant::kNgram:
            if (static_cast<int>(s.window.size()) != ngram_params()->order - 1)
                throw StateError("n-gram state window mismatch");
            break;
        case ModelVariant::kSyntheticLogit:
            if (!s.window.empty()) throw StateError("synthetic-logit state carries a window");
            break;
    }
}

LogProbRow ToyModel::eos_row() const {
    LogProbRow row(alphabet(), kNegInf);
    row[eos()] = 0.0;
    return row;
}

LogProbRow ToyModel::next_logprobs(const DecodeState& state) const {
    validate_state(state);
    if (state.absorbed || state.step == t_cap_) return eos_row();
    return std::visit(
        [&](const auto& p) -> LogProbRow {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, TabularParams>) return tabular_row(p, state);
            else if constexpr (std::is_same_v<P, NgramTables>) return ngram_row(p, state);
            else return synthetic_row(p, state);
        },
        params_);
}

LogProbRow ToyModel::tabular_row(const TabularParams& p, const DecodeState& s) const {
    if (auto it = p.rows.find(s.window); it != p.rows.end()) return it->second;
    if (p.default_row) return *p.default_row;
    throw ModelSpecError("tabular model has no row for a reachable prefix");
}

LogProbRow ToyModel::ngram_row(const NgramTables& p, const DecodeState& s) const {
    // Back off to shorter contexts until one has been observed. The empty
    // context always has counts because the corpus is non-empty.
    for (std::size_t drop = 0; drop <= s.window.size(); ++drop) {
        const Sequence ctx(s.window.begin() + drop, s.window.end());
        auto it = p.counts.find(ctx);
        if (it == p.counts.end()) continue;
        const std::vector<double>& c = it->second;
        LogProbRow row(alphabet());
        for (int v = 0; v < alphabet(); ++v) {
            const double mass = c[v] + p.params.add_k;
            row[v] = mass > 0.0 ? std::log(mass) : kNegInf;
        }
        log_normalize(row);
        return row;
    }
    throw ModelSpecError("n-gram model has no counts");
}

LogProbRow ToyModel::synthetic_row(const SyntheticParams& p, const DecodeState& s) const {
    LogProbRow row(alphabet());
    for (int v = 0; v < alphabet(); ++v) {
        CounterRng rng(mix64(s.digest ^ mix64(static_cast<std::uint64_t>(v) + 0x51ed27ULL)));
        row[v] = p.logit_scale * (2.0 * rng.uniform() - 1.0);
    }
    row[eos()] = p.suppress_eos ? kNegInf : row[eos()] + p.eos_bias;
    log_normalize(row);
    return row;
}

DecodeState ToyModel::advance(const DecodeState& state, Token token) const {
    if (!vocab_.contains(token)) throw InputError("token " + std::to_string(token) + " outside the alphabet");
    validate_state(state);
    if (state.absorbed) {
        if (token != eos()) throw StateError("only EOS may follow EOS");
        return state;
    }
    if (state.step == t_cap_ && token != eos()) throw StateError("only EOS may be emitted at the hard horizon");

    DecodeState next = state;
    next.step += 1;
    next.absorbed = token == eos();
    switch (variant()) {
        case ModelVariant::kTabular:
            next.window.push_back(token);
            break;
        case ModelVariant::kNgram:
            if (!next.window.empty()) {
                std::shift_left(next.window.begin(), next.window.end(), 1);
                next.window.back() = token;
            }
            break;
        case ModelVariant::kSyntheticLogit:
            next.digest = fold_token(state.digest, token);
            break;
    }
    return next;
}

DecodeState ToyModel::state_for_prefix(std::span<const Token> prefix) const {
    DecodeState s = initial_state();
    for (Token t : prefix) s = advance(s, t);
    return s;
}

std::vector<LogProbRow> batched_step(const ToyModel& model, std::span<const DecodeState> states, CostLedger& ledger,
                                     int workers) {
    if (states.empty()) throw InputError("batched_step needs at least one state");
    for (const DecodeState& s : states) model.validate_state(s);
    std::vector<LogProbRow> rows(states.size());
    parallel_for(states.size(), workers, [&](std::size_t i) { rows[i] = model.next_logprobs(states[i]); });
    const auto active = static_cast<std::size_t>(
        std::count_if(states.begin(), states.end(), [](const DecodeState& s) { return !s.absorbed; }));
    ledger.record_step(active, states.size());
    return rows;
}

std::vector<DecodeState> reindex_states(std::span<const DecodeState> states, std::span<const int> ancestors) {
    std::vector<DecodeState> out;
    out.reserve(ancestors.size());
    for (int a : ancestors) {
        if (a < 0 || static_cast<std::size_t>(a) >= states.size()) throw InputError("ancestor index out of bounds");
        out.push_back(states[a]);
    }
    return out;
}

double sequence_logprob(const ToyModel& model, std::span<const Token> y) {
    DecodeState s = model.initial_state();
    double total = 0.0;
    for (Token t : y) {
        if (!model.vocab().contains(t)) throw InputError("token " + std::to_string(t) + " outside the alphabet");
        const LogProbRow row = model.next_logprobs(s);
        if (row[t] == kNegInf) return kNegInf;
        total += row[t];
        s = model.advance(s, t);
    }
    return total;
}

Sequence terminal_part(std::span<const Token> y, Token eos) {
    auto it = std::find(y.begin(), y.end(), eos);
    if (it != y.end()) ++it;
    return Sequence(y.begin(), it);
}

}  // namespace sharpen
