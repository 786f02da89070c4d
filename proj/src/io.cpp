#include "sharpen/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sharpen/errors.hpp"
#include "sharpen/logmath.hpp"

namespace sharpen::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> probs_of(const LogProbRow& row) {
    std::vector<double> p(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) p[i] = std::exp(row[i]);
    return p;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::size_t columns) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split(line, ',');
        if (cells.size() != columns) throw InputError("malformed row in " + path.string());
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

ToyModel model_from_json(const json& spec) {
    try {
        const ModelVariant variant = parse_variant(spec.at("variant").get<std::string>());
        Vocabulary vocab{spec.at("vocab_size").get<int>(), spec.at("eos_id").get<Token>()};
        vocab.validate();
        const int t_cap = spec.at("t_cap").get<int>();
        const auto seed = get_or<std::uint64_t>(spec, "seed", 0);
        const json params = spec.value("params", json::object());

        switch (variant) {
            case ModelVariant::kTabular: {
                if (params.contains("random")) {
                    const json& r = params.at("random");
                    return ToyModel::random_tabular(vocab, t_cap, seed, get_or<double>(r, "logit_scale", 2.0),
                                                    get_or<double>(r, "eos_bias", 0.0));
                }
                TabularParams tp;
                for (const json& entry : params.value("rows", json::array())) {
                    const auto probs = entry.at("probs").get<std::vector<double>>();
                    if (static_cast<int>(probs.size()) != vocab.alphabet())
                        throw ModelSpecError("tabular row has the wrong width");
                    tp.rows[entry.at("prefix").get<Sequence>()] = log_row_from_probs(probs);
                }
                if (params.contains("default")) {
                    const auto probs = params.at("default").get<std::vector<double>>();
                    if (static_cast<int>(probs.size()) != vocab.alphabet())
                        throw ModelSpecError("default row has the wrong width");
                    tp.default_row = log_row_from_probs(probs);
                }
                return ToyModel::tabular(vocab, t_cap, std::move(tp), seed);
            }
            case ModelVariant::kNgram: {
                NgramParams np;
                np.order = params.at("order").get<int>();
                np.corpus = params.at("corpus").get<std::vector<Sequence>>();
                np.add_k = get_or<double>(params, "add_k", 0.0);
                return ToyModel::ngram(vocab, t_cap, std::move(np), seed);
            }
            case ModelVariant::kSyntheticLogit: {
                SyntheticParams sp;
                sp.logit_scale = get_or<double>(params, "logit_scale", sp.logit_scale);
                sp.eos_bias = get_or<double>(params, "eos_bias", sp.eos_bias);
                sp.suppress_eos = get_or<bool>(params, "suppress_eos", sp.suppress_eos);
                return ToyModel::synthetic(vocab, t_cap, sp, seed);
            }
        }
    } catch (const json::exception& e) {
        throw ModelSpecError(std::string("model spec: ") + e.what());
    }
    throw ModelSpecError("model spec: unreachable variant");
}

json model_to_json(const ToyModel& model) {
    json j;
    j["variant"] = to_string(model.variant());
    j["seed"] = model.seed();
    j["vocab_size"] = model.vocab().size;
    j["eos_id"] = model.vocab().eos_id;
    j["t_cap"] = model.t_cap();
    json params = json::object();
    if (const auto* tp = model.tabular_params()) {
        json rows = json::array();
        for (const auto& [prefix, row] : tp->rows) rows.push_back({{"prefix", prefix}, {"probs", probs_of(row)}});
        params["rows"] = rows;
        if (tp->default_row) params["default"] = probs_of(*tp->default_row);
    } else if (const auto* np = model.ngram_params()) {
        params = {{"order", np->order}, {"corpus", np->corpus}, {"add_k", np->add_k}};
    } else if (const auto* sp = model.synthetic_params()) {
        params = {{"logit_scale", sp->logit_scale}, {"eos_bias", sp->eos_bias}, {"suppress_eos", sp->suppress_eos}};
    }
    j["params"] = params;
    return j;
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

ToyModel load_model(const fs::path& path) { return model_from_json(read_json(path)); }

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x < 0 ? "-inf" : "inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, end);
}

double parse_double(const std::string& s) {
    if (s == "-inf") return kNegInf;
    if (s == "inf") return -kNegInf;
    double x = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || end != s.data() + s.size()) throw InputError("not a number: '" + s + "'");
    return x;
}

std::string sequence_key(std::span<const Token> seq) {
    std::string out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i) out += '-';
        out += std::to_string(seq[i]);
    }
    return out;
}

Sequence parse_sequence_key(const std::string& key) {
    Sequence seq;
    if (key.empty()) return seq;
    for (const std::string& part : split(key, '-')) {
        Token t = 0;
        auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), t);
        if (ec != std::errc() || end != part.data() + part.size()) throw InputError("bad sequence key '" + key + "'");
        seq.push_back(t);
    }
    return seq;
}

void atomic_write(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw InputError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string exact_csv(const ExactTarget& target) {
    std::string out = "sequence,log_p,log_pi_alpha\n";
    for (const auto& e : target.entries) {
        out += sequence_key(e.tokens) + ',' + format_double(e.log_p) + ',' + format_double(e.log_pi) + '\n';
    }
    return out;
}

json exact_sidecar(const ExactTarget& target) {
    return {{"alpha", target.alpha}, {"log_Z_alpha", target.log_z}, {"num_sequences", target.entries.size()}};
}

ExactTarget read_exact(const fs::path& csv, const fs::path& sidecar) {
    const json meta = read_json(sidecar);
    ExactTarget t;
    t.alpha = meta.at("alpha").get<double>();
    t.log_z = meta.at("log_Z_alpha").get<double>();
    for (const auto& cells : read_csv(csv, 3)) {
        t.entries.push_back({parse_sequence_key(cells[0]), parse_double(cells[1]), parse_double(cells[2])});
    }
    if (t.entries.size() != meta.at("num_sequences").get<std::size_t>())
        throw InputError("exact table and sidecar disagree on the sequence count");
    return t;
}

std::string trace_csv(const DiagnosticsTrace& trace) {
    std::string out = "step,ess,resampled,alpha_stage,log_normalizer_increment,num_done\n";
    for (const TraceRow& r : trace.rows) {
        out += std::to_string(r.step) + ',' + format_double(r.ess) + ',' + (r.resampled ? "1" : "0") + ',' +
               format_double(r.alpha_stage) + ',' + format_double(r.log_normalizer_increment) + ',' +
               std::to_string(r.num_done) + '\n';
    }
    return out;
}

std::string samples_csv(std::span<const SampleRow> rows) {
    std::string out = "sequence,log_p,log_pi_alpha,weight,terminated\n";
    for (const SampleRow& r : rows) {
        out += sequence_key(r.tokens) + ',' + format_double(r.log_p) + ',' + format_double(r.log_pi_alpha) + ',' +
               format_double(r.weight) + ',' + (r.terminated ? "1" : "0") + '\n';
    }
    return out;
}

std::vector<SampleRow> read_samples_csv(const fs::path& path) {
    std::vector<SampleRow> rows;
    for (const auto& c : read_csv(path, 5)) {
        rows.push_back({parse_sequence_key(c[0]), parse_double(c[1]), parse_double(c[2]), parse_double(c[3]),
                        c[4] == "1"});
    }
    return rows;
}

std::vector<SampleRow> sample_rows(const ToyModel& model, const Ensemble& ensemble, double alpha, double log_z_hat) {
    const std::vector<double> w = ensemble.weights();
    std::vector<SampleRow> rows(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const Particle& p = ensemble.particles[i];
        rows[i].tokens = terminal_part(p.prefix, model.eos());
        rows[i].log_p = p.cum_logp;
        rows[i].log_pi_alpha = alpha * p.cum_logp - log_z_hat;
        rows[i].weight = w[i];
        rows[i].terminated = p.done;
    }
    return rows;
}

std::string mh_moves_csv(std::span<const MoveRecord> moves) {
    std::string out = "block,move,edit_index,suffix_len,accepted,log_p_old,log_p_new\n";
    for (const MoveRecord& m : moves) {
        out += std::to_string(m.block) + ',' + std::to_string(m.move) + ',' + std::to_string(m.edit_index) + ',' +
               std::to_string(m.suffix_len) + ',' + (m.accepted ? "1" : "0") + ',' + format_double(m.log_p_old) +
               ',' + format_double(m.log_p_new) + '\n';
    }
    return out;
}

}  // namespace sharpen::io
