#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "famvote/voting.hpp"

namespace famvote {

/// Copy of `data` keeping only the given model rows, in the given order.
EvalData select_models(const EvalData& data, const std::vector<int>& models);

struct BalancedEnsemble {
    std::vector<std::string> models;  // best member of each family
    double accuracy = 0.0;            // calibrated vote on the subset
    double full_accuracy = 0.0;       // calibrated vote on the full pool
    double delta = 0.0;
};

BalancedEnsemble balanced_ensemble(const EvalData& data, const FamilyPartition& partition,
                                   const MethodParams& params = {});

struct ScalingPoint {
    int k = 0;
    int samples = 0;
    double mean_gap = 0.0;         // method - calibrated
    double positive_share = 0.0;   // fraction of subsets with gap > 0
    double gap_imbalance_corr = 0.0;  // NaN when either side is constant
    std::vector<double> gaps;
    std::vector<double> imbalance;  // max family share within each subset
};

/// For each k, draws `samples` random model subsets of size k spanning at
/// least two families (k == M yields the single full subset) and compares
/// `method` with calibrated voting on each. Subset i of size k is drawn from
/// derive_seed(seed, {k, i}).
std::vector<ScalingPoint> scaling_curve(const EvalData& data, const FamilyPartition& partition,
                                        const std::vector<int>& k_values, Method method,
                                        const MethodParams& params, int samples = 200);

struct FlipCounts {
    int flips = 0;
    int wrong_to_correct = 0;
    int correct_to_wrong = 0;
    int net = 0;
    double delta = 0.0;  // mean score of b minus a
    int questions = 0;
};

struct FlipReport {
    FlipCounts total;
    std::vector<std::string> type_names;
    std::vector<FlipCounts> per_type;
};

/// Compares answer choices a (before) and b (after) question by question.
FlipReport answer_flip_report(const EvalData& data, const std::vector<int>& answers_a,
                              const std::vector<int>& answers_b);

struct GranularityRow {
    std::string name;
    int families = 0;
    double accuracy = 0.0;
};

struct GranularityReport {
    double calibrated = 0.0;
    std::vector<GranularityRow> rows;
};

/// HFV accuracy under each partition with overall weights, plus the flat
/// calibrated reference.
GranularityReport granularity_ablation(const EvalData& data,
                                       const std::vector<std::pair<std::string, FamilyPartition>>& partitions,
                                       const MethodParams& params = {});

/// Pearson correlation; NaN if either input has zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace famvote
