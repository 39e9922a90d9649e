#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "famvote/gbdt.hpp"
#include "famvote/voting.hpp"

namespace famvote {

/// Learned candidate scoring: re-rank the top-K answers of a QualRCCV vote
/// with a gradient-boosted classifier trained under k-fold cross-validation.
struct LcsConfig {
    int k = 5;
    GbdtConfig gbdt{};
    int folds = 5;
    std::uint64_t seed = 0;
    WeightKind weights = WeightKind::per_type;
    double epsilon = kDefaultEpsilon;
    double rho = 0.4;
    double gamma = 1.0;
    /// Adds support_fraction, family_fraction, rank and is_numeric.
    bool extended_features = false;
};

/// Statistics a candidate's features are computed from. In cross-validation
/// these come from the training fold only.
struct CandidateContext {
    VoteContext votes;
    int best_model = 0;
    int model_count = 0;
    int type_count = 0;
    bool extended = false;

    static CandidateContext build(const EvalData& data, const FamilyPartition& partition, const LcsConfig& config,
                                  std::span<const int> reference);
};

struct Candidate {
    int question = -1;
    int answer = -1;
    int rank = 0;
    int n_models = 0;
    int n_families = 0;
    double total_weight = 0.0;
    double margin = 0.0;  // tally - top tally
    double avg_supporter_acc = 0.0;
    double max_supporter_acc = 0.0;
    double min_supporter_acc = 0.0;
    bool best_model_supports = false;
    int answer_length = 0;
    int question_type = -1;  // -1: unknown, indicators all zero
    bool is_numeric = false;
};

/// Top-k distinct answers of `tally` (a QualRCCV outcome) in rank order.
std::vector<Candidate> generate_candidates(const EvalData& data, const VoteOutcome& tally,
                                           const CandidateContext& context, int k);

std::vector<std::string> lcs_feature_names(const EvalData& data, bool extended);
Eigen::RowVectorXd extract_features(const Candidate& candidate, const CandidateContext& context);

/// Index of the candidate with the highest predicted probability; ties go to
/// the larger tally, then the smaller answer id.
std::size_t lcs_predict(const std::vector<Candidate>& candidates, const GbdtModel& model,
                        const CandidateContext& context);

struct LcsFoldMetrics {
    int fold = 0;
    int train_questions = 0;
    int test_questions = 0;
    int train_rows = 0;
    double lcs_accuracy = 0.0;
    double qualrccv_accuracy = 0.0;
};

struct LcsResult {
    std::vector<int> answers;            // per question
    std::vector<int> qualrccv_answers;   // fold-local QualRCCV winner per question
    std::vector<int> fold_of;            // per question
    Eigen::VectorXd scores;              // per question, of the LCS answer
    Eigen::VectorXd probabilities;       // predicted P(correct) of the LCS answer
    double accuracy = 0.0;
    double qualrccv_accuracy = 0.0;
    std::vector<LcsFoldMetrics> folds;
    std::vector<std::string> feature_names;
    Eigen::VectorXd feature_importance;  // mean over folds
    std::vector<GbdtModel> models;       // one per fold
};

/// For each fold: rebuild weights, model accuracies and family quality on the
/// training questions, train on their candidates (label: the candidate is
/// correct under the dataset metric), and predict the held-out questions.
LcsResult run_lcs_cv(const EvalData& data, const FamilyPartition& partition, const LcsConfig& config);

}  // namespace famvote
