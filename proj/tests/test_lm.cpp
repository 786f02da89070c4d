#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "sharpen/errors.hpp"
#include "sharpen/lm.hpp"
#include "sharpen/logmath.hpp"
#include "sharpen/rng.hpp"

using namespace sharpen;
using sharpen::testing::no_eos_synthetic;

namespace {

std::vector<ToyModel> model_zoo() {
    std::vector<ToyModel> zoo;
    zoo.push_back(ToyModel::random_tabular({3, 0}, 5, 11, 2.0));
    NgramParams np;
    np.order = 3;
    np.corpus = {{0, 1, 2, 0, 1}, {2, 2, 1}, {1, 0}};
    np.add_k = 0.5;
    zoo.push_back(ToyModel::ngram({3, 3}, 8, np));
    zoo.push_back(ToyModel::synthetic({5, 2}, 10, SyntheticParams{2.5, -0.5, false}, 99));
    return zoo;
}

// Random walk through reachable states, sampling uniformly among supported
// tokens.
Sequence random_prefix(const ToyModel& m, CounterRng& rng) {
    Sequence y;
    DecodeState s = m.initial_state();
    const int len = static_cast<int>(rng.below(static_cast<std::uint64_t>(m.t_cap() + 2)));
    for (int i = 0; i < len && !s.absorbed; ++i) {
        const LogProbRow row = m.next_logprobs(s);
        std::vector<Token> support;
        for (Token v = 0; v < m.alphabet(); ++v) {
            if (row[v] != kNegInf) support.push_back(v);
        }
        const Token t = support[rng.below(support.size())];
        y.push_back(t);
        s = m.advance(s, t);
    }
    return y;
}

}  // namespace

TEST_CASE("uniform tabular rows") {
    TabularParams p;
    p.default_row = log_row_from_probs(std::vector<double>{0.25, 0.25, 0.25, 0.25});
    const ToyModel m = ToyModel::tabular({3, 3}, 4, p);
    for (double x : m.next_logprobs(m.initial_state())) CHECK(x == doctest::Approx(std::log(0.25)).epsilon(1e-15));
}

TEST_CASE("synthetic-logit rows are deterministic") {
    const ToyModel a = ToyModel::synthetic({6, 6}, 12, {}, 42);
    const ToyModel b = ToyModel::synthetic({6, 6}, 12, {}, 42);
    const Sequence prefix{3, 1, 4, 1, 5};
    CHECK(a.next_logprobs(a.state_for_prefix(prefix)) == b.next_logprobs(b.state_for_prefix(prefix)));
    CHECK(a.next_logprobs(a.state_for_prefix(prefix)) == a.next_logprobs(a.state_for_prefix(prefix)));
    const ToyModel c = ToyModel::synthetic({6, 6}, 12, {}, 43);
    CHECK(a.next_logprobs(a.state_for_prefix(prefix)) != c.next_logprobs(c.state_for_prefix(prefix)));
}

TEST_CASE("bigram rows follow hand-counted corpus frequencies") {
    // a=0, b=1, EOS=2. Corpus "abab" and "aab" (EOS appended):
    //   after BOS: a,a            -> (1, 0, 0)
    //   after a:   b,b,a,b        -> (1/4, 3/4, 0)
    //   after b:   a,EOS,EOS      -> (1/3, 0, 2/3)
    NgramParams np;
    np.order = 2;
    np.corpus = {{0, 1, 0, 1}, {0, 0, 1}};
    const ToyModel m = ToyModel::ngram({2, 2}, 6, np);

    const LogProbRow start = m.next_logprobs(m.initial_state());
    CHECK(start[0] == doctest::Approx(0.0));
    CHECK(start[1] == kNegInf);

    const LogProbRow after_a = m.next_logprobs(m.state_for_prefix(Sequence{0}));
    CHECK(std::exp(after_a[0]) == doctest::Approx(0.25));
    CHECK(std::exp(after_a[1]) == doctest::Approx(0.75));
    CHECK(after_a[2] == kNegInf);

    const LogProbRow after_b = m.next_logprobs(m.state_for_prefix(Sequence{0, 1}));
    CHECK(std::exp(after_b[0]) == doctest::Approx(1.0 / 3.0));
    CHECK(after_b[1] == kNegInf);
    CHECK(std::exp(after_b[2]) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("n-gram backs off to shorter contexts") {
    NgramParams np;
    np.order = 3;
    np.corpus = {{0, 1, 0, 1}};
    const ToyModel m = ToyModel::ngram({2, 2}, 6, np);
    // Context (b, b) never occurs; the bigram context (b) does: a once, EOS once.
    const LogProbRow row = m.next_logprobs(m.state_for_prefix(Sequence{1, 1}));
    CHECK(std::exp(row[0]) == doctest::Approx(0.5));
    CHECK(std::exp(row[2]) == doctest::Approx(0.5));
}

TEST_CASE("n-gram state keeps the last order-1 tokens") {
    NgramParams np;
    np.order = 3;
    np.corpus = {{0, 1, 2}};
    const ToyModel m = ToyModel::ngram({3, 3}, 6, np);
    const DecodeState s = m.state_for_prefix(Sequence{0, 1, 2});
    CHECK(s.window == Sequence{1, 2});
    CHECK(m.initial_state().window == Sequence{kBos, kBos});
}

TEST_CASE("advance matches recompute-from-prefix") {
    const ToyModel m = ToyModel::synthetic({4, 4}, 9, {}, 5);
    DecodeState s = m.initial_state();
    const Sequence y{1, 3, 0, 2};
    for (std::size_t i = 0; i < y.size(); ++i) {
        s = m.advance(s, y[i]);
        CHECK(s == m.state_for_prefix({y.data(), i + 1}));
    }
}

TEST_CASE("EOS is absorbing and forced at the hard horizon") {
    const ToyModel m = ToyModel::random_tabular({2, 2}, 3, 1, 1.0);
    DecodeState s = m.advance(m.initial_state(), 2);
    CHECK(s.absorbed);
    const LogProbRow row = m.next_logprobs(s);
    CHECK(row[2] == 0.0);
    CHECK(row[0] == kNegInf);
    CHECK(m.advance(s, 2) == s);
    CHECK_THROWS_AS(m.advance(s, 0), StateError);

    const DecodeState at_cap = m.state_for_prefix(Sequence{0, 1, 0});
    const LogProbRow forced = m.next_logprobs(at_cap);
    CHECK(forced[2] == 0.0);
    CHECK(forced[1] == kNegInf);
    CHECK_THROWS_AS(m.advance(at_cap, 1), StateError);
}

TEST_CASE("state and token errors") {
    const ToyModel m = ToyModel::random_tabular({2, 2}, 3, 1, 1.0);
    DecodeState bad = m.initial_state();
    bad.step = m.t_cap() + 2;
    CHECK_THROWS_AS(m.next_logprobs(bad), StateError);
    CHECK_THROWS_AS(m.advance(m.initial_state(), 3), InputError);
    CHECK_THROWS_AS(m.advance(m.initial_state(), -1), InputError);
    CHECK_THROWS_AS(sequence_logprob(m, Sequence{0, 7}), InputError);
}

TEST_CASE("malformed model specs") {
    CHECK_THROWS_AS(log_row_from_probs(std::vector<double>{0.5, 0.4}), ModelSpecError);
    CHECK_THROWS_AS(log_row_from_probs(std::vector<double>{1.5, -0.5}), ModelSpecError);
    TabularParams p;
    p.rows[{}] = log_row_from_probs(std::vector<double>{0.5, 0.5, 0.0});
    const ToyModel m = ToyModel::tabular({2, 2}, 3, p);
    CHECK_THROWS_AS(m.next_logprobs(m.state_for_prefix(Sequence{0})), ModelSpecError);
    CHECK_THROWS_AS((Vocabulary{0, 0}.validate()), ModelSpecError);
    CHECK_THROWS_AS((Vocabulary{2, 3}.validate()), ModelSpecError);
}

TEST_CASE("batched_step charges only active states") {
    const ToyModel m = ToyModel::random_tabular({2, 2}, 4, 3, 1.0);
    std::vector<DecodeState> states(5, m.initial_state());
    CostLedger ledger;
    batched_step(m, states, ledger);
    CHECK(ledger.token_evals() == 5);

    states[1] = m.state_for_prefix(Sequence{2});
    states[3] = m.state_for_prefix(Sequence{0, 2});
    CostLedger ledger2;
    const auto rows = batched_step(m, states, ledger2);
    CHECK(ledger2.token_evals() == 3);
    CHECK(ledger2.worst_case_evals() == 5);
    CHECK(rows[1][2] == 0.0);
    CHECK(ledger2.consistent());

    CHECK_THROWS_AS(batched_step(m, std::vector<DecodeState>{}, ledger2), InputError);
}

TEST_CASE("ledger totals N*T with no early EOS") {
    const ToyModel m = no_eos_synthetic(64, 8);
    const int N = 6, T = 40;
    std::vector<DecodeState> states(N, m.initial_state());
    CostLedger ledger;
    for (int t = 0; t < T; ++t) {
        batched_step(m, states, ledger, 3);
        for (auto& s : states) s = m.advance(s, static_cast<Token>(t % 3));
    }
    CHECK(ledger.token_evals() == static_cast<std::uint64_t>(N * T));
    CHECK(ledger.consistent());
}

TEST_CASE("reindex_states copies by ancestor") {
    const ToyModel m = ToyModel::random_tabular({2, 2}, 4, 3, 1.0);
    const std::vector<Sequence> prefixes{{0}, {1, 0}, {1, 1, 1}};
    std::vector<DecodeState> states;
    for (const auto& p : prefixes) states.push_back(m.state_for_prefix(p));

    CHECK(reindex_states(states, std::vector<int>{0, 1, 2}) == states);

    // (1, 1, 3) in 1-based notation.
    std::vector<DecodeState> out = reindex_states(states, std::vector<int>{0, 0, 2});
    CHECK(out[0] == states[0]);
    CHECK(out[1] == states[0]);
    CHECK(out[2] == states[2]);
    out[0] = m.advance(out[0], 1);
    CHECK(out[1] == states[0]);
    CHECK(out[1] == m.state_for_prefix(prefixes[0]));
    CHECK(out[2] == m.state_for_prefix(prefixes[2]));

    CHECK_THROWS_AS(reindex_states(states, std::vector<int>{0, 3}), InputError);
}

TEST_CASE("sequence_logprob") {
    // Hand table: p(a)=0.6, p(b)=0.3, p(EOS)=0.1 at the root; after a: p(EOS)=0.8.
    TabularParams p;
    p.rows[{}] = log_row_from_probs(std::vector<double>{0.6, 0.3, 0.1});
    p.rows[{0}] = log_row_from_probs(std::vector<double>{0.1, 0.1, 0.8});
    p.default_row = log_row_from_probs(std::vector<double>{0.0, 0.0, 1.0});
    const ToyModel m = ToyModel::tabular({2, 2}, 3, p);

    CHECK(sequence_logprob(m, Sequence{}) == 0.0);
    CHECK(sequence_logprob(m, Sequence{0, 2}) == doctest::Approx(std::log(0.6) + std::log(0.8)));
    CHECK(sequence_logprob(m, Sequence{0, 2, 2, 2}) == doctest::Approx(std::log(0.48)));
    CHECK(sequence_logprob(m, Sequence{1, 0}) == kNegInf);
    CHECK(sequence_logprob(m, Sequence{2, 0}) == kNegInf);
}

TEST_CASE("property: factorization identity") {
    for (const ToyModel& m : model_zoo()) {
        CounterRng rng(7, StreamTag::kModelParams, {static_cast<std::uint64_t>(m.variant())});
        for (int trial = 0; trial < 200; ++trial) {
            const Sequence y = random_prefix(m, rng);
            double prod = 1.0;
            DecodeState s = m.initial_state();
            for (Token t : y) {
                prod *= std::exp(m.next_logprobs(s)[t]);
                s = m.advance(s, t);
            }
            CHECK(std::exp(sequence_logprob(m, y)) == doctest::Approx(prod).epsilon(1e-12));
        }
    }
}

TEST_CASE("property: normalization, state purity and determinism over 1000 prefixes") {
    const std::vector<ToyModel> zoo = model_zoo();
    const std::vector<ToyModel> twin = model_zoo();
    for (std::size_t k = 0; k < zoo.size(); ++k) {
        const ToyModel& m = zoo[k];
        CounterRng rng(2024, StreamTag::kModelParams, {k});
        int checked = 0;
        for (int trial = 0; trial < 1000; ++trial) {
            const Sequence y = random_prefix(m, rng);
            DecodeState composed = m.initial_state();
            for (Token t : y) composed = m.advance(composed, t);
            REQUIRE(composed == m.state_for_prefix(y));
            const LogProbRow row = m.next_logprobs(composed);
            REQUIRE(std::abs(log_sum_exp(row)) <= 1e-12);
            for (double x : row) REQUIRE((std::isfinite(x) || x == kNegInf));
            REQUIRE(row == twin[k].next_logprobs(twin[k].state_for_prefix(y)));
            ++checked;
        }
        CHECK(checked == 1000);
    }
}
