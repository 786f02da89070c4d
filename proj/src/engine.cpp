#include "sharpen/engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sharpen/errors.hpp"
#include "sharpen/logmath.hpp"
#include "sharpen/parallel.hpp"

namespace sharpen {

void ProposalPolicy::validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InputError("proposal exponent must be positive and finite");
    if (!(floor >= 0.0 && floor < 1.0)) throw InputError("proposal floor must lie in [0, 1)");
}

LogProbRow proposal_row(std::span<const double> row, const ProposalPolicy& policy) {
    policy.validate();
    LogProbRow q(row.size());
    for (std::size_t v = 0; v < row.size(); ++v) q[v] = row[v] == kNegInf ? kNegInf : policy.beta * row[v];
    const double z = log_sum_exp(q);
    if (!std::isfinite(z)) throw ModelSpecError("next-token row has no support");
    for (double& x : q) x -= z;
    if (policy.floor > 0.0) {
        const auto support = std::count_if(row.begin(), row.end(), [](double x) { return x != kNegInf; });
        const double log_keep = std::log1p(-policy.floor);
        const double log_spread = std::log(policy.floor / static_cast<double>(support));
        for (std::size_t v = 0; v < q.size(); ++v) {
            if (row[v] != kNegInf) q[v] = log_add_exp(log_keep + q[v], log_spread);
        }
    }
    return q;
}

Proposal propose_token(std::span<const double> row, const ProposalPolicy& policy, CounterRng& rng) {
    const LogProbRow q = proposal_row(row, policy);
    const double u = rng.uniform();
    double cum = 0.0;
    int last_support = -1;
    for (std::size_t v = 0; v < q.size(); ++v) {
        if (q[v] == kNegInf) continue;
        last_support = static_cast<int>(v);
        cum += std::exp(q[v]);
        if (u < cum) return {static_cast<Token>(v), q[v]};
    }
    // Round-off left u above the final cumulative sum.
    return {static_cast<Token>(last_support), q[last_support]};
}

double incremental_logweight(double log_p, double log_q, double alpha_stage) {
    if (log_q == kNegInf || std::isnan(log_q)) throw SupportError("proposal has no mass on the sampled token");
    if (log_p == kNegInf) return kNegInf;
    return alpha_stage * log_p - log_q;
}

RampSchedule::RampSchedule(std::vector<RampStage> stages) : stages_(std::move(stages)) {
    if (stages_.size() < 2) throw InputError("ramp schedule needs at least two stages");
    if (stages_.front().alpha != 1.0 || stages_.front().boundary != 0)
        throw InputError("ramp schedule must start at exponent 1 and token 0");
    for (std::size_t l = 1; l < stages_.size(); ++l) {
        if (!(stages_[l].alpha > stages_[l - 1].alpha)) throw InputError("ramp exponents must strictly increase");
        if (stages_[l].boundary <= stages_[l - 1].boundary) throw InputError("ramp boundaries must strictly increase");
    }
}

RampSchedule RampSchedule::linear(double alpha, int ramp_tokens) {
    if (!(alpha > 1.0)) throw InputError("a ramp needs a target exponent above 1");
    if (ramp_tokens < 1) throw InputError("ramp needs at least one token");
    std::vector<RampStage> stages;
    const double L = ramp_tokens;
    for (int l = 0; l <= ramp_tokens; ++l) stages.push_back({1.0 + (alpha - 1.0) * l / L, l});
    stages.back().alpha = alpha;
    return RampSchedule(std::move(stages));
}

double RampSchedule::alpha_for_step(int step) const {
    double a = stages_.front().alpha;
    for (const RampStage& s : stages_) {
        if (s.boundary < step) a = s.alpha;
    }
    return a;
}

double RampSchedule::boundary_increment(int step) const {
    for (std::size_t l = 1; l < stages_.size(); ++l) {
        if (stages_[l].boundary == step) return stages_[l].alpha - stages_[l - 1].alpha;
    }
    return 0.0;
}

void EngineConfig::validate() const {
    if (particles < 1) throw InputError("need at least one particle");
    if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw InputError("alpha must be finite and >= 1");
    if (!(kappa > 0.0 && kappa < 1.0)) throw InputError("ESS threshold must lie in (0, 1)");
    if (horizon < 1) throw InputError("horizon must be at least 1");
    if (workers < 1) throw InputError("workers must be at least 1");
    if (proposal) proposal->validate();
    if (ramp) {
        if (std::abs(ramp->final_alpha() - alpha) > 1e-12) throw InputError("ramp does not end at alpha");
        if (ramp->last_boundary() > horizon) throw InputError("ramp extends past the horizon");
    }
}

Ensemble Ensemble::create(const ToyModel& model, int n, std::uint64_t seed) {
    if (n < 1) throw InputError("need at least one particle");
    Ensemble e;
    e.seed = seed;
    e.particles.resize(n);
    const DecodeState init = model.initial_state();
    for (Particle& p : e.particles) p.state = init;
    return e;
}

std::vector<double> Ensemble::log_weights() const {
    std::vector<double> lw(particles.size());
    for (std::size_t i = 0; i < particles.size(); ++i) lw[i] = particles[i].log_weight;
    return lw;
}

std::vector<double> Ensemble::weights() const { return normalized_weights(log_weights()); }

std::size_t Ensemble::num_done() const {
    return static_cast<std::size_t>(
        std::count_if(particles.begin(), particles.end(), [](const Particle& p) { return p.done; }));
}

double smc_step(Ensemble& ensemble, const ToyModel& model, const EngineConfig& config, CostLedger& ledger) {
    if (ensemble.step >= config.horizon) throw InputError("ensemble already reached the horizon");
    const int t = ensemble.step + 1;
    const double alpha_stage = config.ramp ? config.ramp->alpha_for_step(t) : config.alpha;
    const ProposalPolicy policy = config.proposal.value_or(ProposalPolicy{alpha_stage, 0.0});

    std::vector<DecodeState> states(ensemble.particles.size());
    for (std::size_t i = 0; i < states.size(); ++i) states[i] = ensemble.particles[i].state;
    const std::vector<LogProbRow> rows = batched_step(model, states, ledger, config.workers);

    parallel_for(ensemble.particles.size(), config.workers, [&](std::size_t i) {
        Particle& p = ensemble.particles[i];
        if (p.done) {
            p.prefix.push_back(model.eos());
            return;
        }
        CounterRng rng(ensemble.seed, StreamTag::kParticle, {i, static_cast<std::uint64_t>(t)});
        const Proposal draw = propose_token(rows[i], policy, rng);
        const double log_p = rows[i][draw.token];
        p.log_weight += incremental_logweight(log_p, draw.log_q, alpha_stage);
        p.cum_logp += log_p;
        p.prefix.push_back(draw.token);
        p.state = model.advance(p.state, draw.token);
        p.done = draw.token == model.eos();
    });
    ensemble.step = t;
    return alpha_stage;
}

bool maybe_resample(Ensemble& ensemble, const EngineConfig& config, double* ess_out) {
    const std::size_t n = ensemble.particles.size();
    std::vector<double> lw = ensemble.log_weights();
    if (config.ess_exclude_done && ensemble.num_done() < n) {
        for (std::size_t i = 0; i < n; ++i) {
            if (ensemble.particles[i].done) lw[i] = kNegInf;
        }
    }
    const std::vector<double> w = normalized_weights(lw);
    const double current_ess = ess(w);
    if (ess_out) *ess_out = current_ess;
    if (!config.resampling || !(current_ess < config.kappa * static_cast<double>(n))) return false;

    // Ancestors are drawn from the full weight vector even in the ablation.
    const std::vector<double> full = ensemble.weights();
    CounterRng rng(ensemble.seed, StreamTag::kResample, {static_cast<std::uint64_t>(ensemble.step)});
    const std::vector<int> ancestors = resample(config.resampler, full, rng);

    std::vector<DecodeState> states(n);
    for (std::size_t i = 0; i < n; ++i) states[i] = std::move(ensemble.particles[i].state);
    std::vector<DecodeState> reindexed = reindex_states(states, ancestors);

    std::vector<Particle> next(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Particle& src = ensemble.particles[ancestors[k]];
        next[k].prefix = src.prefix;
        next[k].done = src.done;
        next[k].cum_logp = src.cum_logp;
        next[k].state = std::move(reindexed[k]);
        next[k].log_weight = 0.0;
    }
    ensemble.particles = std::move(next);
    ensemble.resample_log.push_back(
        {ensemble.step, current_ess, std::set<int>(ancestors.begin(), ancestors.end()).size()});
    return true;
}

void apply_ramp_boundary(Ensemble& ensemble, double dalpha) {
    if (dalpha < 0.0 || !std::isfinite(dalpha)) throw InputError("ramp increment must be non-negative");
    if (dalpha == 0.0) return;
    for (Particle& p : ensemble.particles) p.log_weight += dalpha * p.cum_logp;
}

namespace {

SampledSequence pick_final(const Ensemble& ensemble, Token eos) {
    const std::vector<double> w = ensemble.weights();
    CounterRng rng(ensemble.seed, StreamTag::kFinalPick, {});
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t pick = w.size() - 1;
    for (std::size_t i = 0; i < w.size(); ++i) {
        cum += w[i];
        if (u < cum && w[i] > 0.0) {
            pick = i;
            break;
        }
    }
    const Particle& p = ensemble.particles[pick];
    return {terminal_part(p.prefix, eos), p.done, static_cast<int>(pick)};
}

}  // namespace

SmcResult run_power_smc(const ToyModel& model, const EngineConfig& config, const StepObserver& observer) {
    config.validate();
    SmcResult result;
    result.ensemble = Ensemble::create(model, config.particles, config.seed);
    Ensemble& ens = result.ensemble;

    for (int t = 1; t <= config.horizon; ++t) {
        const double before = log_sum_exp(ens.log_weights());
        TraceRow row;
        row.step = t;
        row.alpha_stage = smc_step(ens, model, config, result.ledger);
        if (config.ramp) apply_ramp_boundary(ens, config.ramp->boundary_increment(t));
        const double after = log_sum_exp(ens.log_weights());
        if (!std::isfinite(after)) throw NumericalError("every particle has zero weight");
        row.log_normalizer_increment = after - before;
        row.resampled = maybe_resample(ens, config, &row.ess);
        row.num_done = ens.num_done();
        result.trace.rows.push_back(row);
        if (observer) observer(ens, row);
    }
    result.sample = pick_final(ens, model.eos());
    return result;
}

SisResult run_sis(const ToyModel& model, EngineConfig config) {
    config.resampling = false;
    SmcResult run = run_power_smc(model, config);
    SisResult out;
    out.log_weights = run.ensemble.log_weights();
    out.samples = weighted_samples(run.ensemble, model.eos());
    out.log_normalizer = log_sum_exp(out.log_weights) - std::log(static_cast<double>(config.particles));
    out.ensemble = std::move(run.ensemble);
    out.trace = std::move(run.trace);
    out.ledger = std::move(run.ledger);
    return out;
}

std::vector<WeightedSequence> weighted_samples(const Ensemble& ensemble, Token eos) {
    const std::vector<double> w = ensemble.weights();
    std::vector<WeightedSequence> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = {terminal_part(ensemble.particles[i].prefix, eos), w[i]};
    return out;
}

double log_normalizer_estimate(const DiagnosticsTrace& trace) {
    if (trace.rows.empty()) throw InputError("empty trace");
    double total = 0.0;
    for (const TraceRow& r : trace.rows) total += r.log_normalizer_increment;
    return total;
}

double estimate_normalizer(const DiagnosticsTrace& trace) { return std::exp(log_normalizer_estimate(trace)); }

}  // namespace sharpen
