#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "famvote/dataset_io.hpp"
#include "famvote/scoring.hpp"

namespace famvote {

enum class WeightKind { overall, per_type };

WeightKind parse_weight_kind(const std::string& text);
std::string to_string(WeightKind kind);

inline constexpr double kDefaultEpsilon = 1e-3;

/// log(p / (1 - p)) with p clipped to [eps, 1 - eps].
double log_odds(double p, double eps = kDefaultEpsilon);

/// Per-model log-odds weights; one column for `overall`, one per question type
/// for `per_type`.
struct WeightScheme {
    WeightKind kind = WeightKind::overall;
    double epsilon = kDefaultEpsilon;
    Eigen::MatrixXd weights;  // M x (1 | T)

    double weight(int model, int question_type) const {
        return weights(model, kind == WeightKind::overall ? 0 : question_type);
    }
    WeightScheme scaled(double c) const {
        WeightScheme s = *this;
        s.weights *= c;
        return s;
    }
};

/// Accuracies are measured over `questions` (all when empty). Throws
/// ContractViolation unless 0 < eps < 0.5 and the matrix is nonempty.
WeightScheme make_weight_scheme(const AccuracyMatrix& matrix, WeightKind kind, double epsilon = kDefaultEpsilon,
                                std::span<const int> questions = {});

/// Dense integer view of a FamilyPartition over a fixed model order.
struct FamilyIndex {
    std::vector<std::string> ids;
    std::vector<std::vector<int>> members;
    std::vector<int> family_of;  // per model

    static FamilyIndex build(const FamilyPartition& partition, std::span<const std::string> models);
    int size() const { return static_cast<int>(ids.size()); }
    int family_size(int model) const {
        return static_cast<int>(members[static_cast<std::size_t>(family_of[static_cast<std::size_t>(model)])].size());
    }
};

/// Per-family quantities used by the family-aware votes.
struct FamilyStats {
    Eigen::VectorXd internal_accuracy;  // P_f: accuracy of the within-family vote
    Eigen::VectorXd weight;             // W_f = log_odds(P_f)
    Eigen::VectorXd quality;            // q_f = best member accuracy
    std::vector<int> size;              // n_f
    Eigen::MatrixXd type_weight;        // F x T, W_f from per-type P_f; empty unless weights are per type

    /// Cross-family weight on a question of `question_type`. Follows the
    /// member weight scheme, so a singleton family weighs exactly as its model.
    double weight_for(int family, int question_type) const {
        return type_weight.size() ? type_weight(family, question_type) : weight(family);
    }
};

struct CandidateTally {
    int answer = -1;
    double weight = 0.0;
    int voters = 0;               // ballots cast for the answer (models, or families in HFV)
    std::vector<int> supporters;  // model indices backing the answer
};

/// Result of one vote. Candidates are ranked by weight, then voter count,
/// then answer (ids sort like the normalized strings); candidates[0] wins.
struct VoteOutcome {
    int question = -1;
    int answer = -1;
    double margin = 0.0;
    std::vector<CandidateTally> candidates;

    const CandidateTally& winner() const { return candidates.front(); }
    const CandidateTally* find(int answer_id) const;
};

/// Accumulates weighted ballots for one question.
class Ballot {
public:
    void cast(int answer, double weight, std::span<const int> supporters);
    VoteOutcome decide(int question) &&;

private:
    std::vector<CandidateTally> tallies_;
};

FamilyStats compute_family_stats(const EvalData& data, const FamilyIndex& families, const WeightScheme& weights,
                                 std::span<const int> reference, double epsilon = kDefaultEpsilon);

/// Mean pairwise normalized-answer agreement of each model with every other
/// model over `reference` (all questions when empty).
Eigen::VectorXd answer_agreement(const AnswerMatrix& answers, std::span<const int> reference = {});

/// Highest-accuracy model of each family (first in model order on ties).
std::vector<int> best_member_per_family(const FamilyIndex& families, const Eigen::VectorXd& model_accuracy);

// Per-question votes. `voters` restricts the ballot to a subset of models.
VoteOutcome majority_vote(const EvalData& data, int question, std::span<const int> voters = {});
VoteOutcome calibrated_vote(const EvalData& data, const WeightScheme& weights, int question,
                            std::span<const int> voters = {});
VoteOutcome dedup_vote(const EvalData& data, const WeightScheme& weights, const FamilyIndex& families,
                       const Eigen::VectorXd& model_accuracy, int question);
VoteOutcome correlation_aware_vote(const EvalData& data, const WeightScheme& weights,
                                   const Eigen::VectorXd& agreement, int question,
                                   double epsilon = kDefaultEpsilon);

/// Two-stage vote: calibrated vote inside each family, then families with
/// P_f >= tau vote their answer with weight sign(W_f) |W_f|^alpha. Throws
/// Error if tau excludes every family.
VoteOutcome hfv_vote(const EvalData& data, const WeightScheme& weights, const FamilyIndex& families,
                     const FamilyStats& stats, double alpha, double tau, int question);

/// Stage 1 of hfv_vote alone.
VoteOutcome family_vote(const EvalData& data, const WeightScheme& weights, const FamilyIndex& families, int family,
                        int question);

VoteOutcome rccv_vote(const EvalData& data, const WeightScheme& weights, const FamilyIndex& families, double rho,
                      int question);
VoteOutcome qualrccv_vote(const EvalData& data, const WeightScheme& weights, const FamilyIndex& families,
                          const FamilyStats& stats, double rho, double gamma, int question);

/// Best score any model earns on the question.
double oracle_select(const AccuracyMatrix& matrix, int question);

/// Mean over questions of max(best model's score, ensemble score).
double routing_oracle(const AccuracyMatrix& matrix, const Eigen::VectorXd& ensemble_scores, int best_model);

// ---------------------------------------------------------------------------
// Method drivers

enum class Method { majority, calibrated, dedup, correlation_aware, hfv, hfv_sharp, hfv_auto, rccv, qualrccv };

Method parse_method(const std::string& text);
std::string to_string(Method method);
const std::vector<Method>& all_methods();

struct MethodParams {
    WeightKind weights = WeightKind::overall;
    double epsilon = kDefaultEpsilon;
    double alpha = 1.0;  // hfv-sharp
    double tau = 0.0;    // hfv / hfv-sharp
    double rho = 0.4;    // rccv / qualrccv
    double gamma = 1.0;  // qualrccv
    int folds = 5;       // hfv-auto
    std::uint64_t seed = 0;
};

/// Weights and family statistics measured on one set of reference questions.
struct VoteContext {
    WeightScheme weights;
    FamilyIndex families;
    FamilyStats stats;
    Eigen::VectorXd model_accuracy;
    Eigen::VectorXd agreement;

    static VoteContext build(const EvalData& data, const FamilyPartition& partition, const MethodParams& params,
                             std::span<const int> reference);
};

/// Applies a training-free method to `targets` using a prepared context.
/// hfv-auto is not accepted here; see aggregate().
std::vector<VoteOutcome> vote_questions(const EvalData& data, const VoteContext& context, Method method,
                                        const MethodParams& params, std::span<const int> targets);

/// Runs a method on every question. Statistics come from the full evaluation
/// set, except hfv-auto, which is scored by outer cross-validation with
/// (alpha, tau) chosen by an inner cross-validation on each training part.
std::vector<VoteOutcome> aggregate(const EvalData& data, const FamilyPartition& partition, Method method,
                                   const MethodParams& params);

/// Scores of the chosen answers, ordered like `outcomes`.
Eigen::VectorXd outcome_scores(const EvalData& data, std::span<const VoteOutcome> outcomes);

struct HfvAutoSelection {
    double alpha = 1.0;
    double tau = 0.0;
    std::vector<double> alpha_grid;
    std::vector<double> tau_grid;
    Eigen::MatrixXd mean_accuracy;  // alpha x tau; NaN where tau excluded every family
    int cells_evaluated = 0;
};

std::vector<double> hfv_alpha_grid();  // 1.0, 1.5, ..., 4.0
std::vector<double> hfv_tau_grid();    // 0, .45, .50, .55, .60

/// Grid search over (alpha, tau) by k-fold CV on `questions` (all when
/// empty); weights and family statistics are recomputed on each training
/// fold. Ties prefer smaller alpha, then smaller tau.
HfvAutoSelection hfv_auto_select(const EvalData& data, const FamilyPartition& partition,
                                 const MethodParams& params, std::span<const int> questions = {});

}  // namespace famvote
