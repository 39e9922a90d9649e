#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "famvote/dataset_io.hpp"

namespace famvote {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
using IndexMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

/// Canonical answer form: ASCII lowercase, punctuation dropped except between
/// two digits, whitespace collapsed, leading articles removed while another
/// word follows, and number words zero..ten mapped to digits. Idempotent.
std::string normalize_answer(std::string_view raw);

enum class SoftVariant { leave_one_out, simple };

/// VQA soft accuracy. Both arguments are normalized before comparison.
/// Throws ContractViolation unless exactly ten annotator answers are given.
double soft_accuracy(std::string_view pred, std::span<const std::string> annotator_answers,
                     SoftVariant variant = SoftVariant::leave_one_out);

/// Soft accuracy from a match count among ten annotators.
double soft_accuracy_from_matches(int matches, SoftVariant variant = SoftVariant::leave_one_out);

double exact_accuracy(std::string_view pred, std::string_view gold);

/// M x N per-question scores; rows are models, columns questions.
struct AccuracyMatrix {
    std::vector<std::string> models;
    std::vector<std::string> questions;
    Eigen::MatrixXd scores;
    std::vector<std::string> type_names;  // sorted, distinct
    std::vector<int> question_type;       // per column, index into type_names
    ScoreMode mode = ScoreMode::exact;
    double threshold = 0.5;

    Eigen::Index model_count() const { return scores.rows(); }
    Eigen::Index question_count() const { return scores.cols(); }
    int type_count() const { return static_cast<int>(type_names.size()); }

    /// scores >= threshold, or == 1 in exact mode.
    BoolMatrix correctness() const;
    bool is_correct(double score) const { return mode == ScoreMode::exact ? score >= 1.0 : score >= threshold; }

    /// Mean score per model over `questions` (all when empty).
    Eigen::VectorXd model_accuracy(std::span<const int> questions = {}) const;
    /// M x T per-type means over `questions`; types absent from the subset fall
    /// back to the model's overall mean on the subset.
    Eigen::MatrixXd model_type_accuracy(std::span<const int> questions = {}) const;

    int model_index(const std::string& model_id) const;
};

/// Interned normalized answers. Vocabulary is sorted, so comparing ids
/// compares the normalized strings lexicographically.
struct AnswerMatrix {
    std::vector<std::string> vocab;
    IndexMatrix ids;  // M x N
};

/// Scores plus the answers that produced them: the input to every vote.
struct EvalData {
    AccuracyMatrix matrix;
    AnswerMatrix answers;

    /// Score earned on question q by answering `answer`. Every candidate a vote
    /// can select was given by some model, so the score is read off that model.
    double answer_score(int question, int answer) const;
    const std::string& answer_text(int answer) const { return answers.vocab[static_cast<std::size_t>(answer)]; }
    std::vector<int> all_questions() const;
};

struct ScoringOptions {
    SoftVariant soft_variant = SoftVariant::leave_one_out;
    double threshold = 0.5;
};

/// Throws ValidationError naming the model and question on any coverage gap.
AccuracyMatrix build_accuracy_matrix(std::span<const PredictionSet> predictions, const LabelSet& labels,
                                     const ScoringOptions& options = {});

EvalData build_eval_data(std::span<const PredictionSet> predictions, const LabelSet& labels,
                         const ScoringOptions& options = {});

/// Recomputes cached ModelMeta accuracies and returns one warning per mismatch
/// larger than 1e-12. Missing cached values are filled in.
std::vector<std::string> reconcile_model_meta(std::vector<ModelMeta>& models, const AccuracyMatrix& matrix);

/// CSV (header "model_id,<question ids...>") plus a JSON sidecar with mode,
/// threshold and per-column question types.
void save_accuracy_matrix(const std::filesystem::path& csv, const std::filesystem::path& sidecar,
                          const AccuracyMatrix& matrix);
AccuracyMatrix load_accuracy_matrix(const std::filesystem::path& csv, const std::filesystem::path& sidecar);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace famvote
