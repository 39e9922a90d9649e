#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "famvote/scoring.hpp"
#include "famvote/voting.hpp"

namespace famvote {

// ---------------------------------------------------------------------------
// Correlation structure

/// Pearson correlation between the rows of X. Rows with zero variance have
/// correlation 0 with every other row (1 on the diagonal); their indices are
/// appended to `constant_rows` when given.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> row_correlation(
    const Eigen::MatrixBase<Derived>& X, std::vector<Eigen::Index>* constant_rows = nullptr) {
    using Scalar = typename Derived::Scalar;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Mat centered = X.colwise() - X.rowwise().mean();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> norms = centered.rowwise().norm();
    for (Eigen::Index i = 0; i < norms.size(); ++i) {
        if (norms(i) > Scalar(0)) {
            centered.row(i) /= norms(i);
        } else {
            centered.row(i).setZero();
            if (constant_rows) constant_rows->push_back(i);
        }
    }
    Mat corr = centered * centered.transpose();
    corr = (corr.array().max(Scalar(-1)).min(Scalar(1))).matrix();
    corr = ((corr + corr.transpose()) / Scalar(2)).eval();
    corr.diagonal().setOnes();
    return corr;
}

/// (sum lambda)^2 / sum lambda^2.
template <typename Derived>
typename Derived::Scalar participation_ratio(const Eigen::MatrixBase<Derived>& eigenvalues) {
    const auto s = eigenvalues.sum();
    return s * s / eigenvalues.squaredNorm();
}

/// Effective number of independent votes from n equicorrelated voters.
template <typename Scalar>
Scalar kish_effective_size(Scalar n, Scalar rho) {
    return n / (Scalar(1) + (n - Scalar(1)) * rho);
}

struct CorrelationReport {
    Eigen::MatrixXd corr;
    double within_mean = 0.0, within_sd = 0.0;
    double cross_mean = 0.0, cross_sd = 0.0;
    double gap = 0.0;
    double mannwhitney_p = 1.0;
    std::size_t within_pairs = 0, cross_pairs = 0;
    std::vector<std::string> constant_models;
};

/// Requires >= 2 models and >= 2 questions (UsageError otherwise). Means are
/// plain averages over unordered model pairs.
CorrelationReport correlation_report(const AccuracyMatrix& matrix, const FamilyPartition& partition);

struct FamilyKish {
    std::string family;
    int size = 0;
    double within_r = 0.0;  // mean within-family r; 1 for singletons
    double effective = 0.0;
};

struct SpectrumReport {
    Eigen::VectorXd eigenvalues;  // descending
    double top1_share = 0.0;
    double top5_share = 0.0;
    double participation_ratio = 0.0;
    std::vector<FamilyKish> kish;
};

/// Throws ContractViolation if `corr` is not symmetric. Kish entries are
/// filled when `families` is given.
SpectrumReport spectrum_report(const Eigen::MatrixXd& corr, const FamilyIndex* families = nullptr);

// ---------------------------------------------------------------------------
// Difficulty taxonomy

enum class Tier { trivial = 0, easy = 1, misleading = 2, hard = 3, impossible = 4 };
inline constexpr int kTierCount = 5;
std::string tier_name(Tier tier);

/// Best model: highest mean score, first in model order on ties.
int best_model(const AccuracyMatrix& matrix);

/// T0 all correct; T1 best and baseline correct; T2 best correct, baseline
/// wrong; T3 best wrong, some model correct; T4 none correct. Correctness
/// uses the matrix threshold.
std::vector<Tier> classify_taxonomy(const AccuracyMatrix& matrix, int best_model,
                                    const Eigen::VectorXd& baseline_scores);

struct TierRow {
    Tier tier;
    std::size_t count = 0;
    double share = 0.0;
    std::vector<double> mean_score;    // per method
    std::vector<double> correct_rate;  // per method
};

struct TaxonomyReport {
    std::vector<Tier> tiers;
    std::vector<std::string> methods;
    std::array<TierRow, kTierCount> rows;
};

/// Tier shares plus, for every named score vector, mean score and
/// correct rate inside each tier (NaN for empty tiers).
TaxonomyReport taxonomy_report(const AccuracyMatrix& matrix, const std::vector<Tier>& tiers,
                               const std::vector<std::string>& methods,
                               const std::vector<Eigen::VectorXd>& method_scores);

// ---------------------------------------------------------------------------
// Gap decomposition

struct GapReport {
    double best_single = 0.0;
    double ensemble = 0.0;
    double routing = 0.0;
    double oracle = 0.0;
    // Shares of (oracle - best_single); empty when that gap is zero.
    std::optional<double> voting_fraction;
    std::optional<double> routing_fraction;   // routing - ensemble
    std::optional<double> residual_fraction;  // oracle - routing
};

GapReport gap_decomposition(const AccuracyMatrix& matrix, const Eigen::VectorXd& ensemble_scores);

/// Column maxima of the score matrix.
Eigen::VectorXd oracle_scores(const AccuracyMatrix& matrix);

}  // namespace famvote
