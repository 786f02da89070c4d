#include "sharpen/target.hpp"

#include <cmath>
#include <map>
#include <numeric>

#include "sharpen/errors.hpp"
#include "sharpen/logmath.hpp"

namespace sharpen {

namespace {

// Depth-first walk over every terminated path. `mass_row` maps a model row to
// the log-mass row used for the second column.
template <typename MassRow>
void walk(const ToyModel& model, const DecodeState& state, Sequence& prefix, double log_p, double log_m,
          std::uint64_t budget, MassRow&& mass_row, std::vector<SequenceMass>& out) {
    const LogProbRow row = model.next_logprobs(state);
    const LogProbRow m = mass_row(row);
    for (Token v = 0; v < model.alphabet(); ++v) {
        if (row[v] == kNegInf) continue;
        prefix.push_back(v);
        if (v == model.eos()) {
            if (out.size() >= budget) throw CapacityError("enumeration budget exceeded");
            out.push_back({prefix, log_p + row[v], log_m + m[v]});
        } else {
            walk(model, model.advance(state, v), prefix, log_p + row[v], log_m + m[v], budget, mass_row, out);
        }
        prefix.pop_back();
    }
}

template <typename MassRow>
std::vector<SequenceMass> enumerate(const ToyModel& model, std::uint64_t budget, MassRow&& mass_row) {
    std::vector<SequenceMass> out;
    Sequence prefix;
    walk(model, model.initial_state(), prefix, 0.0, 0.0, budget, mass_row, out);

    std::vector<double> lp(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) lp[i] = out[i].log_p;
    const double total = std::exp(log_sum_exp_pairwise(lp));
    if (std::abs(total - 1.0) > 1e-9) throw ModelSpecError("model leaves probability mass unterminated");
    return out;
}

void check_mass(const std::vector<SequenceMass>& entries) {
    std::vector<double> lm(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) lm[i] = entries[i].log_pi;
    if (std::abs(std::exp(log_sum_exp_pairwise(lm)) - 1.0) > 1e-9)
        throw NumericalError("enumerated distribution does not sum to 1");
}

}  // namespace

ExactTarget enumerate_target(const ToyModel& model, double alpha, std::uint64_t budget) {
    if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw DomainError("alpha must be a finite value >= 1");
    ExactTarget target;
    target.alpha = alpha;
    target.entries = enumerate(model, budget, [](const LogProbRow& row) { return row; });
    if (alpha == 1.0) {
        for (auto& e : target.entries) e.log_pi = e.log_p;
        target.log_z = 0.0;
        return target;
    }
    std::vector<double> scaled(target.entries.size());
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = alpha * target.entries[i].log_p;
    target.log_z = log_sum_exp_pairwise(scaled);
    for (std::size_t i = 0; i < scaled.size(); ++i) target.entries[i].log_pi = scaled[i] - target.log_z;
    check_mass(target.entries);
    return target;
}

ExactTarget temperature_joint(const ToyModel& model, double tau, std::uint64_t budget) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("temperature must be positive and finite");
    const double beta = 1.0 / tau;
    ExactTarget joint;
    joint.alpha = beta;
    joint.entries = enumerate(model, budget, [beta](const LogProbRow& row) {
        LogProbRow q(row.size());
        for (std::size_t v = 0; v < row.size(); ++v) q[v] = row[v] == kNegInf ? kNegInf : beta * row[v];
        log_normalize(q);
        return q;
    });
    check_mass(joint.entries);
    return joint;
}

double power_normalizer(std::span<const double> row, double alpha) {
    if (row.empty()) throw InputError("empty row");
    std::vector<double> scaled(row.size());
    for (std::size_t v = 0; v < row.size(); ++v) scaled[v] = row[v] == kNegInf ? kNegInf : alpha * row[v];
    const double z = log_sum_exp(scaled);
    if (!std::isfinite(z)) throw InputError("row has no support");
    return z;
}

double renyi_entropy(std::span<const double> row, double alpha) {
    if (alpha == 1.0) throw DomainError("Renyi entropy at order 1 is not provided");
    if (!(alpha > 0.0)) throw DomainError("Renyi order must be positive");
    return power_normalizer(row, alpha) / (1.0 - alpha);
}

double RenyiReport::total_log_z() const { return std::accumulate(log_z.begin(), log_z.end(), 0.0); }

double RenyiReport::total_renyi() const { return std::accumulate(renyi.begin(), renyi.end(), 0.0); }

RenyiReport path_weight_decomposition(const ToyModel& model, double alpha, std::span<const Token> prefix) {
    if (alpha == 1.0 || !(alpha > 0.0)) throw DomainError("Renyi order must be positive and not 1");
    RenyiReport report;
    report.alpha = alpha;
    DecodeState s = model.initial_state();
    for (Token t : prefix) {
        if (!model.vocab().contains(t)) throw InputError("prefix token outside the alphabet");
        if (s.absorbed) {
            if (t != model.eos()) throw InputError("prefix continues past EOS");
            continue;
        }
        const LogProbRow row = model.next_logprobs(s);
        if (row[t] == kNegInf) throw InputError("prefix has zero probability under the model");
        const double lz = power_normalizer(row, alpha);
        report.log_z.push_back(lz);
        report.renyi.push_back(lz / (1.0 - alpha));
        s = model.advance(s, t);
    }
    return report;
}

double tv_distance(std::span<const WeightedSequence> samples, const ExactTarget& target) {
    std::map<Sequence, double> empirical;
    double total = 0.0;
    for (const auto& s : samples) {
        if (!(s.weight >= 0.0) || !std::isfinite(s.weight)) throw InputError("sample weight is negative or non-finite");
        empirical[s.tokens] += s.weight;
        total += s.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InputError("sample weights are not normalized");

    double sum = 0.0;
    for (const auto& e : target.entries) {
        double emp = 0.0;
        if (auto it = empirical.find(e.tokens); it != empirical.end()) {
            emp = it->second;
            empirical.erase(it);
        }
        sum += std::abs(emp - std::exp(e.log_pi));
    }
    for (const auto& [seq, w] : empirical) sum += w;
    return 0.5 * sum;
}

double tv_distance(const ExactTarget& a, const ExactTarget& b) {
    std::vector<WeightedSequence> samples;
    samples.reserve(a.entries.size());
    double total = 0.0;
    for (const auto& e : a.entries) {
        samples.push_back({e.tokens, std::exp(e.log_pi)});
        total += samples.back().weight;
    }
    for (auto& s : samples) s.weight /= total;
    return tv_distance(samples, b);
}

}  // namespace sharpen
