#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "famvote/voting.hpp"

namespace famvote {

/// FNV-1a 64-bit digest as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);
std::string file_digest(const std::filesystem::path& path);

/// Provenance of one run. `hash()` covers the config hash, input digests,
/// seeds and version, but not the command line, thread count or timestamp,
/// so reruns under any schedule tag their reports identically.
struct RunManifest {
    std::vector<std::string> command;
    std::string config_hash;
    std::map<std::string, std::string> inputs;  // path -> digest
    std::map<std::string, std::uint64_t> seeds;
    std::string version = FAMVOTE_VERSION;
    std::string timestamp;  // ISO-8601 UTC
    std::size_t threads = 0;

    std::string hash() const;
    std::string to_json() const;
    void add_input(const std::filesystem::path& path);
};

/// UTC time from SOURCE_DATE_EPOCH when set, else the current time.
std::string iso_timestamp();

/// Minimal RFC 4180 quoting.
std::string csv_field(const std::string& text);
std::string csv_number(double value);  // shortest round-trip; "NA" for NaN

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string str() const;
};

/// Per-question outcome lines: question_id, answer, score, correct, margin,
/// tally, supporters (model ids), manifest.
std::string outcomes_jsonl(const EvalData& data, std::span<const VoteOutcome> outcomes, const std::string& method,
                           const std::string& manifest_hash);

struct ScoredOutcomes {
    std::string method;
    std::vector<std::string> questions;
    std::vector<double> scores;
};

/// Reads question_id/score pairs back from an outcomes JSONL file.
ScoredOutcomes load_scored_outcomes(const std::filesystem::path& path, const std::string& method);

struct LeaderboardRow {
    std::string method;
    double accuracy = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double delta_vs_baseline = 0.0;
    double p_value = 0.5;
};

/// Accuracy with a bootstrap interval per method and a paired bootstrap
/// p-value against `baseline`. Every entry must cover the same questions in
/// the same order (UsageError otherwise).
std::vector<LeaderboardRow> compare_methods(const std::vector<ScoredOutcomes>& methods, const std::string& baseline,
                                            int resamples, std::uint64_t seed);
CsvTable leaderboard_table(const std::vector<LeaderboardRow>& rows, const std::string& manifest_hash);

}  // namespace famvote
