#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace famvote {

enum class ScoreMode { soft, exact };

ScoreMode parse_score_mode(const std::string& text);
std::string to_string(ScoreMode mode);

inline constexpr std::size_t kAnnotatorCount = 10;

struct ModelMeta {
    std::string model_id;
    std::string family_id;
    std::string display_size;
    std::optional<double> overall_accuracy;
    std::map<std::string, double> per_type_accuracy;

    bool operator==(const ModelMeta&) const = default;
};

/// Raw answers of one model, keyed by question id.
struct PredictionSet {
    std::string model_id;
    std::map<std::string, std::string> entries;

    bool operator==(const PredictionSet&) const = default;
};

struct LabelEntry {
    std::vector<std::string> annotator_answers;  // soft mode
    std::string gold_answer;                     // exact mode
    std::string question_type;

    bool operator==(const LabelEntry&) const = default;
};

struct LabelSet {
    ScoreMode mode = ScoreMode::exact;
    std::map<std::string, LabelEntry> entries;

    bool operator==(const LabelSet&) const = default;
};

/// Assignment of every model to exactly one non-empty family. Families are
/// ordered by first appearance in the model list they were built from.
class FamilyPartition {
public:
    struct Family {
        std::string id;
        std::vector<std::string> members;
        bool operator==(const Family&) const = default;
    };

    FamilyPartition() = default;

    /// Throws ValidationError naming the first model in `models` that has no entry.
    static FamilyPartition from_map(const std::map<std::string, std::string>& assignment,
                                    std::span<const std::string> models);
    static FamilyPartition singletons(std::span<const std::string> models);
    static FamilyPartition merged(std::span<const std::string> models, const std::string& family_id = "all");

    const std::string& family_of(const std::string& model_id) const;
    const std::vector<Family>& families() const { return families_; }
    const std::map<std::string, std::string>& assignment() const { return assignment_; }
    std::size_t family_count() const { return families_.size(); }

    /// Keeps only `models`; families left without members are dropped.
    FamilyPartition restricted_to(std::span<const std::string> models) const;

    bool operator==(const FamilyPartition&) const = default;

private:
    std::map<std::string, std::string> assignment_;
    std::vector<Family> families_;
};

// Line-delimited records. Parsers take the stream plus a name used in errors.
PredictionSet parse_predictions(std::istream& in, const std::string& where, const std::string& model_id);
void write_predictions(std::ostream& out, const PredictionSet& predictions);
PredictionSet load_predictions(const std::filesystem::path& path, const std::string& model_id = {});
void save_predictions(const std::filesystem::path& path, const PredictionSet& predictions);

LabelSet parse_labels(std::istream& in, const std::string& where, ScoreMode mode);
void write_labels(std::ostream& out, const LabelSet& labels);
LabelSet load_labels(const std::filesystem::path& path, ScoreMode mode);
void save_labels(const std::filesystem::path& path, const LabelSet& labels);

/// Family map document: a single JSON object model_id -> family_id.
/// Entries for models not in `models` are ignored, but a family whose every
/// member was ignored is reported as empty.
FamilyPartition parse_family_partition(std::istream& in, const std::string& where,
                                       std::span<const std::string> models);
void write_family_map(std::ostream& out, const FamilyPartition& partition);
FamilyPartition load_family_partition(const std::filesystem::path& path, std::span<const std::string> models);
void save_family_map(const std::filesystem::path& path, const FamilyPartition& partition);

/// Everything needed to score and aggregate one benchmark.
struct Dataset {
    LabelSet labels;
    std::vector<PredictionSet> predictions;
    std::vector<ModelMeta> models;  // aligned with predictions
    FamilyPartition partition;

    std::vector<std::string> model_ids() const;
};

/// Reads a dataset manifest (dataset.json):
///   { "mode": "soft"|"exact", "labels": "labels.jsonl", "families": "families.json",
///     "models": [ { "model_id", "predictions", "display_size"?, "overall_accuracy"?,
///                   "per_type_accuracy"? } ] }
/// Paths are relative to the manifest's directory.
Dataset load_dataset(const std::filesystem::path& manifest);

/// Writes the canonical layout: dataset.json, labels.jsonl, families.json and
/// predictions/<model_id>.jsonl under `dir`.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);

/// Opens `path` for reading or throws UsageError naming it.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace famvote
