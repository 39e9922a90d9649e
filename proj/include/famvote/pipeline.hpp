#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "famvote/clustering.hpp"
#include "famvote/lcs.hpp"
#include "famvote/report.hpp"
#include "famvote/scoring.hpp"
#include "famvote/voting.hpp"

namespace famvote {

/// A scored dataset ready for voting.
struct LoadedInput {
    Dataset dataset;
    EvalData data;
    std::vector<std::string> warnings;
};

LoadedInput prepare_input(Dataset dataset, const ScoringOptions& options = {});

/// accuracy_matrix.csv + accuracy_matrix.json, models.csv, warnings.txt.
void write_score_report(const std::filesystem::path& dir, const LoadedInput& input, const std::string& manifest);

/// <method>.jsonl per method plus summary.csv. Returns the scored outcomes in
/// method order.
std::vector<ScoredOutcomes> write_aggregate_report(const std::filesystem::path& dir, const LoadedInput& input,
                                                   const std::vector<Method>& methods, const MethodParams& params,
                                                   int resamples, const std::string& manifest);

/// lcs.jsonl, folds.csv, feature_importance.csv and one model file per fold.
ScoredOutcomes write_lcs_report(const std::filesystem::path& dir, const LoadedInput& input, const LcsConfig& config,
                                const std::string& manifest);

enum class TaxonomyBaseline { calibrated, majority };

struct AnalysisOptions {
    MethodParams params;
    TaxonomyBaseline baseline = TaxonomyBaseline::calibrated;
    Method method = Method::hfv;          // scaling, gap ensemble is calibrated
    Method gap_method = Method::calibrated;
    ClusterMethod cluster_method = ClusterMethod::spectral;
    int cluster_k = 8;
    int scaling_samples = 200;
    std::vector<int> scaling_k;           // default 3..M
    Method flip_a = Method::calibrated;
    Method flip_b = Method::hfv;
    std::vector<std::pair<std::string, FamilyPartition>> partitions;  // extra granularity partitions
};

const std::vector<std::string>& analysis_kinds();

/// Writes one analysis report family into `dir`.
void write_analysis(const std::filesystem::path& dir, const std::string& kind, const LoadedInput& input,
                    const AnalysisOptions& options, const std::string& manifest);

/// leaderboard.csv.
void write_compare_report(const std::filesystem::path& dir, const std::vector<ScoredOutcomes>& outcomes,
                          const std::string& baseline, int resamples, std::uint64_t seed,
                          const std::string& manifest);

/// Runs the stages declared in a pipeline config file into `out`. On failure
/// writes `out/FAILED` with the error and rethrows; finished artifacts stay.
void run_pipeline(const std::filesystem::path& config, const std::filesystem::path& out, std::uint64_t default_seed,
                  const std::vector<std::string>& command);

}  // namespace famvote
