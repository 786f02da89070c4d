#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sharpen/ledger.hpp"
#include "sharpen/lm.hpp"
#include "sharpen/resample.hpp"
#include "sharpen/rng.hpp"
#include "sharpen/target.hpp"

namespace sharpen {

// q(v) proportional to p(v)^beta (temperature 1/beta), optionally mixed with
// `floor` mass spread uniformly over the tokens p supports.
struct ProposalPolicy {
    double beta = 1.0;
    double floor = 0.0;

    void validate() const;
};

struct Proposal {
    Token token = 0;
    double log_q = 0.0;
};

// Normalized log-proposal row for a model row.
LogProbRow proposal_row(std::span<const double> row, const ProposalPolicy& policy);

// Inverse-CDF draw in ascending token order.
Proposal propose_token(std::span<const double> row, const ProposalPolicy& policy, CounterRng& rng);

// alpha_stage * log_p - log_q. Throws SupportError when log_q is -inf.
double incremental_logweight(double log_p, double log_q, double alpha_stage);

struct RampStage {
    double alpha = 1.0;
    // Token index after which this stage begins. Stage 0 starts at 0.
    int boundary = 0;
};

// Exponent-bridging schedule 1 = a_0 < a_1 < ... < a_L = alpha. Tokens
// 1..b_1 use a_0, tokens b_1+1..b_2 use a_1, and so on; after token b_l the
// weights are bridged by (a_l - a_{l-1}) * log p(prefix).
class RampSchedule {
public:
    explicit RampSchedule(std::vector<RampStage> stages);

    // a_l = 1 + (alpha - 1) * l / L with boundaries at tokens 1..ramp_tokens.
    static RampSchedule linear(double alpha, int ramp_tokens);

    const std::vector<RampStage>& stages() const { return stages_; }
    double final_alpha() const { return stages_.back().alpha; }
    int last_boundary() const { return stages_.back().boundary; }

    // Exponent in effect while sampling token `step` (1-based).
    double alpha_for_step(int step) const;

    // a_l - a_{l-1} when a boundary sits right after token `step`, else 0.
    double boundary_increment(int step) const;

private:
    std::vector<RampStage> stages_;
};

struct EngineConfig {
    int particles = 64;
    double alpha = 4.0;
    double kappa = 0.5;
    int horizon = 128;
    Resampler resampler = Resampler::kSystematic;
    std::uint64_t seed = 0;
    std::optional<RampSchedule> ramp;
    // Replaces the stage-optimal proposal p^alpha_stage.
    std::optional<ProposalPolicy> proposal;
    bool resampling = true;
    // Experimental: compute ESS over unfinished particles only.
    bool ess_exclude_done = false;
    int workers = 1;

    void validate() const;
};

struct Particle {
    Sequence prefix;  // EOS-padded once done
    double log_weight = 0.0;
    bool done = false;
    DecodeState state;
    double cum_logp = 0.0;
};

struct ResampleEvent {
    int step = 0;
    double ess = 0.0;
    std::size_t unique_ancestors = 0;
};

// Particle i draws step t's token from the stream keyed (seed, i, t);
// resample event at step t uses (seed, t).
struct Ensemble {
    std::vector<Particle> particles;
    int step = 0;
    std::uint64_t seed = 0;
    std::vector<ResampleEvent> resample_log;

    static Ensemble create(const ToyModel& model, int n, std::uint64_t seed);

    std::vector<double> log_weights() const;
    std::vector<double> weights() const;
    std::size_t num_done() const;
};

struct TraceRow {
    int step = 0;
    double ess = 0.0;
    bool resampled = false;
    double alpha_stage = 1.0;
    double log_normalizer_increment = 0.0;
    std::size_t num_done = 0;
};

struct DiagnosticsTrace {
    std::vector<TraceRow> rows;
};

struct SampledSequence {
    Sequence tokens;  // truncated after the first EOS
    bool terminated = false;
    int particle = -1;
};

struct SmcResult {
    SampledSequence sample;
    Ensemble ensemble;
    DiagnosticsTrace trace;
    CostLedger ledger;
};

// Called after every step's barrier (weights updated, possibly resampled).
using StepObserver = std::function<void(const Ensemble&, const TraceRow&)>;

// Advances every particle by one token. Returns the exponent used.
double smc_step(Ensemble& ensemble, const ToyModel& model, const EngineConfig& config, CostLedger& ledger);

// ESS-triggered resampling. Returns whether it fired; `ess_out` receives the
// pre-resample ESS.
bool maybe_resample(Ensemble& ensemble, const EngineConfig& config, double* ess_out = nullptr);

// Adds dalpha * cum_logp to every particle's log-weight.
void apply_ramp_boundary(Ensemble& ensemble, double dalpha);

SmcResult run_power_smc(const ToyModel& model, const EngineConfig& config, const StepObserver& observer = {});

struct SisResult {
    std::vector<WeightedSequence> samples;  // normalized weights
    std::vector<double> log_weights;        // unnormalized, per particle
    double log_normalizer = 0.0;            // log of (1/N) sum exp(log_weights)
    Ensemble ensemble;
    DiagnosticsTrace trace;
    CostLedger ledger;
};

// Same recursion with resampling disabled.
SisResult run_sis(const ToyModel& model, EngineConfig config);

// Terminal sequences with normalized weights.
std::vector<WeightedSequence> weighted_samples(const Ensemble& ensemble, Token eos);

// Sum of per-step log increments, i.e. log of the normalizer estimate.
double log_normalizer_estimate(const DiagnosticsTrace& trace);
double estimate_normalizer(const DiagnosticsTrace& trace);

}  // namespace sharpen
