#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sharpen/engine.hpp"
#include "sharpen/lm.hpp"
#include "sharpen/mh.hpp"
#include "sharpen/target.hpp"

namespace sharpen::io {

// Model specification:
//   {"variant", "seed", "vocab_size", "eos_id", "t_cap", "params"}
// Tabular params: {"rows": [{"prefix": [...], "probs": [...]}], "default": [...]}
//   or {"random": {"logit_scale": x, "eos_bias": y}}.
// N-gram params: {"order", "corpus": [[...], ...], "add_k"}.
// Synthetic params: {"logit_scale", "eos_bias", "suppress_eos"}.
ToyModel model_from_json(const nlohmann::json& spec);
nlohmann::json model_to_json(const ToyModel& model);
ToyModel load_model(const std::filesystem::path& path);

nlohmann::json read_json(const std::filesystem::path& path);

// Shortest round-trip formatting; infinities print as "inf" / "-inf".
std::string format_double(double x);
double parse_double(const std::string& s);

// Dash-joined token ids, e.g. "0-1-2". The empty sequence is "".
std::string sequence_key(std::span<const Token> seq);
Sequence parse_sequence_key(const std::string& key);

// Writes through a sibling temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path, const std::string& content);

// Columns: sequence,log_p,log_pi_alpha
std::string exact_csv(const ExactTarget& target);
// {"alpha", "log_Z_alpha", "num_sequences"}
nlohmann::json exact_sidecar(const ExactTarget& target);
ExactTarget read_exact(const std::filesystem::path& csv, const std::filesystem::path& sidecar);

// Columns: step,ess,resampled,alpha_stage,log_normalizer_increment,num_done
std::string trace_csv(const DiagnosticsTrace& trace);

struct SampleRow {
    Sequence tokens;
    double log_p = 0.0;
    double log_pi_alpha = 0.0;
    double weight = 0.0;
    bool terminated = true;
};

// Columns: sequence,log_p,log_pi_alpha,weight,terminated. log_pi_alpha is
// alpha * log_p minus the run's log normalizer estimate.
std::string samples_csv(std::span<const SampleRow> rows);
std::vector<SampleRow> read_samples_csv(const std::filesystem::path& path);

std::vector<SampleRow> sample_rows(const ToyModel& model, const Ensemble& ensemble, double alpha, double log_z_hat);

// Columns: block,move,edit_index,suffix_len,accepted,log_p_old,log_p_new
std::string mh_moves_csv(std::span<const MoveRecord> moves);

}  // namespace sharpen::io
