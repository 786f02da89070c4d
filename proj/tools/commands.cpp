#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sharpen/cost.hpp"
#include "sharpen/engine.hpp"
#include "sharpen/errors.hpp"
#include "sharpen/io.hpp"
#include "sharpen/logmath.hpp"
#include "sharpen/mh.hpp"
#include "sharpen/target.hpp"

namespace sharpen::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> model;
    std::optional<double> alpha;
    std::optional<int> particles;
    std::optional<double> ess_threshold;
    std::optional<int> ramp_tokens;
    std::optional<std::string> resampler;
    std::optional<int> block;
    std::optional<int> moves;
    std::optional<std::string> regime;
    std::optional<int> horizon;
    std::optional<std::int64_t> tail_moves;
    std::optional<int> runs;
    std::optional<int> workers;
    std::optional<std::string> oracle;
    std::vector<std::string> inputs;
};

// Flags override the JSON config, which overrides built-in defaults.
class Settings {
public:
    Settings(const Flags& flags) : flags_(flags) {
        if (!flags.config.empty()) {
            config_ = io::read_json(flags.config);
            base_ = fs::path(flags.config).parent_path();
        }
    }

    template <typename T>
    std::optional<T> lookup(const std::optional<T>& flag, const char* key) const {
        if (flag) return flag;
        if (config_.contains(key)) {
            try {
                return config_.at(key).get<T>();
            } catch (const json::exception& e) {
                throw InputError(std::string("config key '") + key + "': " + e.what());
            }
        }
        return std::nullopt;
    }

    template <typename T>
    T get(const std::optional<T>& flag, const char* key, T fallback) const {
        return lookup(flag, key).value_or(fallback);
    }

    std::uint64_t seed() const {
        auto s = lookup(flags_.seed, "seed");
        if (!s) throw InputError("a seed is required (--seed or \"seed\" in the config)");
        return *s;
    }

    fs::path out_dir() const {
        std::string out = flags_.out;
        if (out.empty() && config_.contains("out")) out = config_.at("out").get<std::string>();
        if (out.empty()) throw InputError("an output directory is required (--out)");
        return out;
    }

    fs::path resolve(const std::string& p) const {
        fs::path path(p);
        return path.is_absolute() || base_.empty() ? path : base_ / path;
    }

    ToyModel model() const {
        if (flags_.model) return io::load_model(*flags_.model);
        if (!config_.contains("model")) throw InputError("a model spec is required (--model or \"model\")");
        const json& m = config_.at("model");
        if (m.is_string()) return io::load_model(resolve(m.get<std::string>()));
        return io::model_from_json(m);
    }

    std::optional<fs::path> path_setting(const std::optional<std::string>& flag, const char* key) const {
        if (flag) return fs::path(*flag);
        if (config_.contains(key)) return resolve(config_.at(key).get<std::string>());
        return std::nullopt;
    }

    std::vector<fs::path> inputs() const {
        std::vector<fs::path> out;
        for (const auto& s : flags_.inputs) out.emplace_back(s);
        if (out.empty() && config_.contains("inputs")) {
            for (const auto& s : config_.at("inputs")) out.push_back(resolve(s.get<std::string>()));
        }
        return out;
    }

    EngineConfig engine(const ToyModel& model) const {
        EngineConfig c;
        c.seed = seed();
        c.alpha = get(flags_.alpha, "alpha", 4.0);
        c.particles = get(flags_.particles, "particles", 64);
        c.kappa = get(flags_.ess_threshold, "ess_threshold", 0.5);
        c.horizon = get(flags_.horizon, "horizon", model.t_cap() + 1);
        c.resampler = parse_resampler(get<std::string>(flags_.resampler, "resampler", "systematic"));
        c.workers = get(flags_.workers, "workers", 1);
        const int ramp = get(flags_.ramp_tokens, "ramp_tokens", 0);
        if (ramp > 0 && c.alpha > 1.0) c.ramp = RampSchedule::linear(c.alpha, ramp);
        if (auto beta = lookup<double>(std::nullopt, "proposal_exponent")) c.proposal = ProposalPolicy{*beta, 0.0};
        c.validate();
        return c;
    }

    MHConfig mh(const ToyModel& model) const {
        MHConfig c;
        c.seed = seed();
        c.moves = get(flags_.moves, "moves", 10);
        c.regime = parse_regime(get<std::string>(flags_.regime, "regime", "global"));
        c.proposal_temperature = get<double>(std::nullopt, "proposal_temperature", 1.0);
        c.tail_moves = get(flags_.tail_moves, "tail_moves", std::int64_t{0});
        const auto block = lookup(flags_.block, "block");
        const auto horizon = lookup(flags_.horizon, "horizon");
        const int natural = model.t_cap() + 1;
        if (block && horizon) {
            c.block = *block;
            c.horizon = *horizon;
        } else if (horizon) {
            c.block = c.horizon = *horizon;
        } else if (block) {
            c.block = *block;
            c.horizon = *block * ((natural + *block - 1) / *block);
        } else {
            c.block = c.horizon = natural;
        }
        c.validate();
        return c;
    }

    const Flags& flags() const { return flags_; }

private:
    const Flags& flags_;
    json config_ = json::object();
    fs::path base_;
};

// Files are rendered in memory and only written once the command succeeded.
class Outputs {
public:
    void add(std::string name, std::string content) { files_.emplace_back(std::move(name), std::move(content)); }
    void add(std::string name, const json& j) { add(std::move(name), j.dump(2) + "\n"); }

    void commit(const fs::path& dir) const {
        fs::create_directories(dir);
        for (const auto& [name, content] : files_) io::atomic_write(dir / name, content);
    }

private:
    std::vector<std::pair<std::string, std::string>> files_;
};

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

Outputs cmd_run_exact(const Settings& s) {
    const ToyModel model = s.model();
    const double alpha = s.get(s.flags().alpha, "alpha", 4.0);
    const ExactTarget target = enumerate_target(model, alpha);
    Outputs out;
    out.add("exact.csv", io::exact_csv(target));
    out.add("exact.json", io::exact_sidecar(target));
    return out;
}

Outputs cmd_run_smc(const Settings& s, bool resampling) {
    const ToyModel model = s.model();
    EngineConfig config = s.engine(model);
    config.resampling = resampling;
    const SmcResult run = run_power_smc(model, config);
    const double log_z_hat = log_normalizer_estimate(run.trace);

    json summary;
    summary["method"] = resampling ? "smc" : "sis";
    summary["alpha"] = config.alpha;
    summary["particles"] = config.particles;
    summary["horizon"] = config.horizon;
    summary["ess_threshold"] = config.kappa;
    summary["resampler"] = to_string(config.resampler);
    summary["ramp_tokens"] = config.ramp ? config.ramp->last_boundary() : 0;
    summary["seed"] = config.seed;
    summary["selected"] = io::sequence_key(run.sample.tokens);
    summary["selected_terminated"] = run.sample.terminated;
    summary["log_normalizer_estimate"] = finite_or_null(log_z_hat);
    summary["num_resamples"] = run.ensemble.resample_log.size();
    summary["token_evals"] = run.ledger.token_evals();
    summary["worst_case_evals"] = run.ledger.worst_case_evals();

    Outputs out;
    out.add("trace.csv", io::trace_csv(run.trace));
    out.add("samples.csv", io::samples_csv(io::sample_rows(model, run.ensemble, config.alpha, log_z_hat)));
    out.add("summary.json", summary);
    return out;
}

Outputs cmd_run_mh(const Settings& s) {
    const ToyModel model = s.model();
    const MHConfig config = s.mh(model);
    const double alpha = s.get(s.flags().alpha, "alpha", 4.0);
    const MHResult run = run_mh_power(model, alpha, config);

    std::vector<io::SampleRow> rows;
    if (run.tail_visits.empty()) {
        const double lp = run.chain.log_p;
        rows.push_back({run.final_sequence, lp, alpha * lp, 1.0, run.chain.terminated(model.eos())});
    } else {
        const double total = static_cast<double>(config.tail_moves);
        for (const auto& [seq, count] : run.tail_visits) {
            const double lp = sequence_logprob(model, seq);
            const bool done = !seq.empty() && seq.back() == model.eos();
            rows.push_back({seq, lp, alpha * lp, static_cast<double>(count) / total, done});
        }
    }

    json summary;
    summary["method"] = "mh";
    summary["alpha"] = alpha;
    summary["regime"] = to_string(config.regime);
    summary["block"] = config.block;
    summary["moves"] = config.moves;
    summary["horizon"] = config.horizon;
    summary["tail_moves"] = config.tail_moves;
    summary["seed"] = config.seed;
    summary["final_sequence"] = io::sequence_key(run.final_sequence);
    summary["token_evals"] = run.ledger.token_evals();
    summary["extension_evals"] = run.ledger.extension_evals();
    summary["move_evals"] = run.ledger.move_evals();
    summary["acceptance_rate"] = run.acceptance_rate();

    Outputs out;
    out.add("moves.csv", io::mh_moves_csv(run.chain.moves));
    out.add("samples.csv", io::samples_csv(rows));
    out.add("summary.json", summary);
    return out;
}

Outputs cmd_cost_report(const Settings& s) {
    const ToyModel model = s.model();
    MHConfig config = s.mh(model);
    const double alpha = s.get(s.flags().alpha, "alpha", 4.0);
    const int runs = s.get(s.flags().runs, "runs", 50);
    const double tolerance = s.get<double>(std::nullopt, "tolerance", 0.05);
    if (runs < 1) throw InputError("runs must be positive");

    const std::uint64_t base_seed = config.seed;
    std::vector<CostLedger> ledgers;
    std::string csv = "run,seed,token_evals,extension_evals,move_evals\n";
    for (int r = 0; r < runs; ++r) {
        config.seed = hash_key(base_seed, {static_cast<std::uint64_t>(r)});
        MHResult run = run_mh_power(model, alpha, config);
        csv += std::to_string(r) + ',' + std::to_string(config.seed) + ',' + std::to_string(run.ledger.token_evals()) +
               ',' + std::to_string(run.ledger.extension_evals()) + ',' + std::to_string(run.ledger.move_evals()) +
               '\n';
        ledgers.push_back(std::move(run.ledger));
    }
    const double analytic = config.regime == EditRegime::kGlobal
                                ? mh_cost_global(config.horizon, config.block, config.moves)
                                : mh_cost_lastblock(config.horizon, config.moves);
    const ReconcileReport rep = reconcile(ledgers, analytic, tolerance, to_string(config.regime));

    json report;
    report["regime"] = rep.regime;
    report["analytic"] = rep.analytic;
    report["empirical_mean"] = rep.empirical_mean;
    report["relative_error"] = rep.relative_error;
    report["pass"] = rep.pass;

    Outputs out;
    out.add("cost.json", report);
    out.add("ledgers.csv", csv);
    return out;
}

struct RunOutput {
    std::string name;
    json summary;
    std::vector<WeightedSequence> samples;
};

RunOutput load_run(const fs::path& dir) {
    RunOutput r;
    r.name = dir.filename().string();
    if (r.name.empty()) r.name = dir.parent_path().filename().string();
    r.summary = io::read_json(dir / "summary.json");
    for (const io::SampleRow& row : io::read_samples_csv(dir / "samples.csv")) {
        r.samples.push_back({row.tokens, row.weight});
    }
    double total = 0.0;
    for (const auto& w : r.samples) total += w.weight;
    for (auto& w : r.samples) w.weight /= total;
    return r;
}

Outputs cmd_compare(const Settings& s) {
    const auto oracle = s.path_setting(s.flags().oracle, "oracle");
    if (!oracle) throw InputError("compare needs --oracle <dir> holding exact.csv and exact.json");
    const auto inputs = s.inputs();
    if (inputs.empty()) throw InputError("compare needs at least one --inputs <dir>");
    const ExactTarget target = io::read_exact(*oracle / "exact.csv", *oracle / "exact.json");

    std::vector<RunOutput> runs;
    for (const auto& dir : inputs) runs.push_back(load_run(dir));

    // Ledger ratios are relative to the first particle-method run.
    std::optional<double> smc_evals;
    for (const auto& r : runs) {
        const std::string method = r.summary.value("method", "");
        if (method == "smc" || method == "sis") {
            smc_evals = r.summary.at("token_evals").get<double>();
            break;
        }
    }

    json methods = json::array();
    std::string csv = "name,method,tv,normalizer_error,token_evals,ledger_ratio\n";
    for (const auto& r : runs) {
        const double tv = tv_distance(r.samples, target);
        json m;
        m["name"] = r.name;
        m["method"] = r.summary.value("method", "");
        m["tv"] = tv;
        m["token_evals"] = r.summary.value("token_evals", 0);
        double norm_err = std::nan("");
        if (r.summary.contains("log_normalizer_estimate") && !r.summary.at("log_normalizer_estimate").is_null()) {
            const double est = std::exp(r.summary.at("log_normalizer_estimate").get<double>());
            const double exact = std::exp(target.log_z);
            norm_err = std::abs(est - exact) / exact;
        }
        m["normalizer_error"] = finite_or_null(norm_err);
        double ratio = std::nan("");
        if (smc_evals && *smc_evals > 0) ratio = r.summary.value("token_evals", 0.0) / *smc_evals;
        m["ledger_ratio"] = finite_or_null(ratio);
        methods.push_back(m);
        csv += r.name + ',' + m["method"].get<std::string>() + ',' + io::format_double(tv) + ',' +
               io::format_double(norm_err) + ',' + std::to_string(m["token_evals"].get<std::uint64_t>()) + ',' +
               io::format_double(ratio) + '\n';
    }

    json report;
    report["alpha"] = target.alpha;
    report["log_Z_alpha"] = target.log_z;
    report["methods"] = methods;
    Outputs out;
    out.add("compare.json", report);
    out.add("compare.csv", csv);
    return out;
}

Outputs cmd_temp_mismatch(const Settings& s) {
    const ToyModel model = s.model();
    const EngineConfig config = s.engine(model);
    const ExactTarget target = enumerate_target(model, config.alpha);
    const ExactTarget joint = temperature_joint(model, 1.0 / config.alpha);
    const SmcResult run = run_power_smc(model, config);
    const std::vector<WeightedSequence> samples = weighted_samples(run.ensemble, model.eos());

    const double tv_temp = tv_distance(joint, target);
    const double tv_smc = tv_distance(samples, target);

    std::map<Sequence, double> empirical;
    for (const auto& w : samples) empirical[w.tokens] += w.weight;
    std::string csv = "sequence,pi_alpha,temperature_joint,smc\n";
    for (std::size_t i = 0; i < target.entries.size(); ++i) {
        const auto& e = target.entries[i];
        const double emp = empirical.count(e.tokens) ? empirical.at(e.tokens) : 0.0;
        csv += io::sequence_key(e.tokens) + ',' + io::format_double(std::exp(e.log_pi)) + ',' +
               io::format_double(std::exp(joint.entries[i].log_pi)) + ',' + io::format_double(emp) + '\n';
    }

    json report;
    report["alpha"] = config.alpha;
    report["particles"] = config.particles;
    report["seed"] = config.seed;
    report["tv_temperature"] = tv_temp;
    report["tv_smc"] = tv_smc;
    Outputs out;
    out.add("mismatch.json", report);
    out.add("mismatch.csv", csv);
    return out;
}

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "Output directory");
    sub->add_option("--seed", f.seed, "Random seed");
    sub->add_option("--model", f.model, "Model spec JSON (overrides the config)")->check(CLI::ExistingFile);
    sub->add_option("--alpha", f.alpha, "Power exponent");
    sub->add_option("--horizon", f.horizon, "Horizon T / T_max");
    sub->add_option("--workers", f.workers, "Worker threads");
}

void add_engine(CLI::App* sub, Flags& f) {
    sub->add_option("--particles", f.particles, "Number of particles N");
    sub->add_option("--ess-threshold", f.ess_threshold, "Resample when ESS < kappa * N");
    sub->add_option("--ramp-tokens", f.ramp_tokens, "Linear exponent ramp over the first tokens (0 disables)");
    sub->add_option("--resampler", f.resampler, "systematic | multinomial | stratified | residual");
}

void add_mh(CLI::App* sub, Flags& f) {
    sub->add_option("--block", f.block, "Block length B");
    sub->add_option("--moves", f.moves, "MH moves per block M");
    sub->add_option("--regime", f.regime, "global | last-block");
    sub->add_option("--tail-moves", f.tail_moves, "Extra moves on the finished sequence");
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const CapacityError*>(&e)) return 2;
    if (dynamic_cast<const NumericalError*>(&e)) return 3;
    return 1;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Sequence-level power-distribution sampling for toy autoregressive models"};
    app.require_subcommand(1);
    Flags flags;

    auto* exact = app.add_subcommand("run-exact", "Enumerate the exact power target");
    auto* smc = app.add_subcommand("run-smc", "Run the particle sampler with ESS-triggered resampling");
    auto* sis = app.add_subcommand("run-sis", "Run sequential importance sampling (no resampling)");
    auto* mh = app.add_subcommand("run-mh", "Run block Metropolis-Hastings power sampling");
    auto* compare = app.add_subcommand("compare", "Compare run outputs against an exact target");
    auto* cost = app.add_subcommand("cost-report", "Reconcile empirical MH ledgers with the analytic cost");
    auto* mismatch = app.add_subcommand("temp-mismatch", "Temperature joint vs power target vs sampler");

    for (auto* sub : {exact, smc, sis, mh, compare, cost, mismatch}) add_common(sub, flags);
    for (auto* sub : {smc, sis, mismatch}) add_engine(sub, flags);
    for (auto* sub : {mh, cost}) add_mh(sub, flags);
    cost->add_option("--runs", flags.runs, "Independent chains to average");
    compare->add_option("--oracle", flags.oracle, "Directory with exact.csv and exact.json");
    compare->add_option("--inputs", flags.inputs, "Run output directories");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const Settings settings(flags);
        const fs::path dir = settings.out_dir();
        settings.seed();
        Outputs out;
        if (*exact) out = cmd_run_exact(settings);
        else if (*smc) out = cmd_run_smc(settings, true);
        else if (*sis) out = cmd_run_smc(settings, false);
        else if (*mh) out = cmd_run_mh(settings);
        else if (*compare) out = cmd_compare(settings);
        else if (*cost) out = cmd_cost_report(settings);
        else out = cmd_temp_mismatch(settings);
        out.commit(dir);
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace sharpen::cli
