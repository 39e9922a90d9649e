#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "famvote/dataset_io.hpp"
#include "famvote/voting.hpp"

namespace famvote {

/// How rho_w and rho_b are read. `latent`: correlations of the Gaussian
/// factors. `observed`: targets for the Pearson correlation of the 0/1
/// correctness vectors, converted to latent values at the pool's mean accuracy.
enum class CorrelationScale { latent, observed };

struct SynthFamily {
    std::string id;
    std::vector<double> accuracies;    // one per member
    std::vector<std::string> models;   // optional member ids; default "<id>-<i>"
    std::optional<double> rho_w;       // overrides the pool-wide value
};

struct SynthConfig {
    std::vector<SynthFamily> families;
    double rho_w = 0.0;
    double rho_b = 0.0;
    int n_questions = 1000;
    int answer_space = 8;
    std::uint64_t seed = 0;
    CorrelationScale scale = CorrelationScale::latent;
    std::vector<std::string> question_types;  // question q gets type q % count; default {"other"}

    /// Throws UsageError unless 0 <= rho_b <= rho_w < 1 (per family too),
    /// 0 < p < 1, answer_space >= 2, n_questions >= 1 and ids are unique.
    void validate() const;
    int model_count() const;
};

SynthConfig parse_synth_config(const std::string& json_text, const std::string& where = "config");
std::string synth_config_to_json(const SynthConfig& config);

/// Plants a latent Gaussian per model and question,
///   x = sqrt(rho_b) g_q + sqrt(rho_wf - rho_b) h_fq + sqrt(1 - rho_wf) e_mq,
/// and marks model m correct iff x < quantile(p_m). Each question has one
/// correct token; every erring member of a family gives that family's wrong
/// token for the question. Labels are exact-match.
Dataset generate(const SynthConfig& config);

/// Latent (rho_w per family, rho_b) actually used for `config`.
struct LatentCorrelations {
    std::vector<double> rho_w;  // per family
    double rho_b = 0.0;
};
LatentCorrelations latent_correlations(const SynthConfig& config);

struct SweepCell {
    std::string name;
    SynthConfig config;
};

struct SweepRow {
    std::string name;
    double rho_gap = 0.0;          // configured rho_w - rho_b
    bool imbalanced = false;       // family sizes differ
    double min_family_accuracy = 0.0;  // min over families of mean measured P_f
    bool cond_gap = false;         // (i)
    bool cond_quality = false;     // (ii)
    bool cond_imbalance = false;   // (iii)
    int seeds = 0;
    double mean_gap = 0.0;         // mean HFV - calibrated accuracy
    double positive_share = 0.0;   // seeds with gap > 0
    double nonpositive_share = 0.0;
    std::vector<double> gaps;
};

/// Runs every cell once per seed (config.seed replaced by derive_seed(seed, {i}))
/// and compares HFV with calibrated voting.
std::vector<SweepRow> condition_sweep(const std::vector<SweepCell>& cells, int seeds, std::uint64_t seed,
                                         const MethodParams& params = {});

/// The default 2 x 2 x 2 grid: correlation gap {0, 0.3}, family sizes
/// {balanced, imbalanced}, and all families above 0.5 or the two last
/// families below it. One family is clearly stronger than the rest.
std::vector<SweepCell> default_sweep_grid(int n_questions = 5000);

}  // namespace famvote
