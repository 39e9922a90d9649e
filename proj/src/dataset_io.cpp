#include "famvote/dataset_io.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "famvote/error.hpp"

namespace famvote {

using nlohmann::json;
namespace fs = std::filesystem;

ScoreMode parse_score_mode(const std::string& text) {
    if (text == "soft") return ScoreMode::soft;
    if (text == "exact") return ScoreMode::exact;
    throw UsageError("unknown scoring mode '" + text + "' (expected soft or exact)");
}

std::string to_string(ScoreMode mode) { return mode == ScoreMode::soft ? "soft" : "exact"; }

// ---------------------------------------------------------------------------
// FamilyPartition

FamilyPartition FamilyPartition::from_map(const std::map<std::string, std::string>& assignment,
                                          std::span<const std::string> models) {
    FamilyPartition out;
    std::map<std::string, std::size_t> index;
    for (const auto& m : models) {
        auto it = assignment.find(m);
        if (it == assignment.end()) throw ValidationError("model '" + m + "' has no family assignment");
        if (it->second.empty()) throw ValidationError("model '" + m + "' has an empty family id");
        if (out.assignment_.count(m)) throw ValidationError("model '" + m + "' listed twice");
        out.assignment_[m] = it->second;
        auto [pos, inserted] = index.emplace(it->second, out.families_.size());
        if (inserted) out.families_.push_back({it->second, {}});
        out.families_[pos->second].members.push_back(m);
    }
    return out;
}

FamilyPartition FamilyPartition::singletons(std::span<const std::string> models) {
    std::map<std::string, std::string> a;
    for (const auto& m : models) a[m] = m;
    return from_map(a, models);
}

FamilyPartition FamilyPartition::merged(std::span<const std::string> models, const std::string& family_id) {
    std::map<std::string, std::string> a;
    for (const auto& m : models) a[m] = family_id;
    return from_map(a, models);
}

const std::string& FamilyPartition::family_of(const std::string& model_id) const {
    auto it = assignment_.find(model_id);
    if (it == assignment_.end()) throw ContractViolation("model '" + model_id + "' is not in the partition");
    return it->second;
}

FamilyPartition FamilyPartition::restricted_to(std::span<const std::string> models) const {
    return from_map(assignment_, models);
}

// ---------------------------------------------------------------------------
// Line-delimited records

namespace {

json parse_line(const std::string& line, const std::string& where, std::size_t lineno) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(where, lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(where, lineno, "record is not an object");
    return j;
}

std::string string_field(const json& j, const char* key, const std::string& where, std::size_t lineno) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(where, lineno, std::string("missing field \"") + key + "\"");
    if (!it->is_string()) throw ParseError(where, lineno, std::string("field \"") + key + "\" is not a string");
    return it->get<std::string>();
}

template <typename F>
void for_each_record(std::istream& in, const std::string& where, F&& f) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        f(parse_line(line, where, lineno), lineno);
    }
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

std::string read_file(const fs::path& path) {
    auto in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write '" + path.string() + "'");
    out << contents;
}

PredictionSet parse_predictions(std::istream& in, const std::string& where, const std::string& model_id) {
    PredictionSet out{model_id, {}};
    for_each_record(in, where, [&](const json& j, std::size_t lineno) {
        auto qid = string_field(j, "question_id", where, lineno);
        auto answer = string_field(j, "answer", where, lineno);
        if (!out.entries.emplace(std::move(qid), std::move(answer)).second)
            throw ValidationError(where + ":" + std::to_string(lineno) + ": duplicate question_id '" +
                                  j["question_id"].get<std::string>() + "'");
    });
    return out;
}

void write_predictions(std::ostream& out, const PredictionSet& predictions) {
    for (const auto& [qid, answer] : predictions.entries)
        out << json{{"question_id", qid}, {"answer", answer}}.dump() << '\n';
}

PredictionSet load_predictions(const fs::path& path, const std::string& model_id) {
    auto in = open_in(path);
    return parse_predictions(in, path.string(), model_id.empty() ? path.stem().string() : model_id);
}

void save_predictions(const fs::path& path, const PredictionSet& predictions) {
    std::ostringstream ss;
    write_predictions(ss, predictions);
    write_file(path, ss.str());
}

LabelSet parse_labels(std::istream& in, const std::string& where, ScoreMode mode) {
    LabelSet out{mode, {}};
    for_each_record(in, where, [&](const json& j, std::size_t lineno) {
        auto qid = string_field(j, "question_id", where, lineno);
        LabelEntry e;
        e.question_type = string_field(j, "question_type", where, lineno);
        const bool has_soft = j.contains("annotator_answers");
        const bool has_gold = j.contains("gold_answer");
        if (mode == ScoreMode::soft) {
            if (!has_soft) throw ValidationError(where + ":" + std::to_string(lineno) +
                                                 ": soft-mode record lacks annotator_answers");
            const auto& arr = j["annotator_answers"];
            if (!arr.is_array()) throw ParseError(where, lineno, "annotator_answers is not an array");
            for (const auto& a : arr) {
                if (!a.is_string()) throw ParseError(where, lineno, "annotator answer is not a string");
                e.annotator_answers.push_back(a.get<std::string>());
            }
            if (e.annotator_answers.size() != kAnnotatorCount)
                throw ValidationError(where + ":" + std::to_string(lineno) + ": expected " +
                                      std::to_string(kAnnotatorCount) + " annotator answers, got " +
                                      std::to_string(e.annotator_answers.size()));
        } else {
            if (!has_gold) throw ValidationError(where + ":" + std::to_string(lineno) +
                                                 ": exact-mode record lacks gold_answer");
            e.gold_answer = string_field(j, "gold_answer", where, lineno);
        }
        if (!out.entries.emplace(qid, std::move(e)).second)
            throw ValidationError(where + ":" + std::to_string(lineno) + ": duplicate question_id '" + qid + "'");
    });
    return out;
}

void write_labels(std::ostream& out, const LabelSet& labels) {
    for (const auto& [qid, e] : labels.entries) {
        json j{{"question_id", qid}, {"question_type", e.question_type}};
        if (labels.mode == ScoreMode::soft)
            j["annotator_answers"] = e.annotator_answers;
        else
            j["gold_answer"] = e.gold_answer;
        out << j.dump() << '\n';
    }
}

LabelSet load_labels(const fs::path& path, ScoreMode mode) {
    auto in = open_in(path);
    return parse_labels(in, path.string(), mode);
}

void save_labels(const fs::path& path, const LabelSet& labels) {
    std::ostringstream ss;
    write_labels(ss, labels);
    write_file(path, ss.str());
}

// ---------------------------------------------------------------------------
// Family maps

FamilyPartition parse_family_partition(std::istream& in, const std::string& where,
                                       std::span<const std::string> models) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(where, 0, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(where, 0, "family map must be an object of model_id -> family_id");
    std::map<std::string, std::string> assignment;
    for (const auto& [model, fam] : j.items()) {
        if (!fam.is_string()) throw ParseError(where, 0, "family of '" + model + "' is not a string");
        assignment[model] = fam.get<std::string>();
    }
    auto partition = FamilyPartition::from_map(assignment, models);

    std::set<std::string> declared, kept;
    for (const auto& [m, f] : assignment) declared.insert(f);
    for (const auto& f : partition.families()) kept.insert(f.id);
    for (const auto& f : declared)
        if (!kept.count(f))
            throw ValidationError(where + ": family '" + f + "' has no members among the evaluated models");
    return partition;
}

void write_family_map(std::ostream& out, const FamilyPartition& partition) {
    out << json(partition.assignment()).dump(2) << '\n';
}

FamilyPartition load_family_partition(const fs::path& path, std::span<const std::string> models) {
    auto in = open_in(path);
    return parse_family_partition(in, path.string(), models);
}

void save_family_map(const fs::path& path, const FamilyPartition& partition) {
    std::ostringstream ss;
    write_family_map(ss, partition);
    write_file(path, ss.str());
}

// ---------------------------------------------------------------------------
// Dataset manifests

std::vector<std::string> Dataset::model_ids() const {
    std::vector<std::string> ids;
    for (const auto& p : predictions) ids.push_back(p.model_id);
    return ids;
}

Dataset load_dataset(const fs::path& manifest) {
    const std::string where = manifest.string();
    json j;
    try {
        j = json::parse(read_file(manifest));
    } catch (const json::parse_error& e) {
        throw ParseError(where, 0, std::string("invalid JSON: ") + e.what());
    }
    const fs::path base = manifest.parent_path();
    auto field = [&](const json& obj, const char* key) -> std::string {
        if (!obj.contains(key) || !obj[key].is_string())
            throw ParseError(where, 0, std::string("missing string field \"") + key + "\"");
        return obj[key].get<std::string>();
    };

    Dataset d;
    const ScoreMode mode = parse_score_mode(field(j, "mode"));
    d.labels = load_labels(base / field(j, "labels"), mode);
    if (!j.contains("models") || !j["models"].is_array() || j["models"].empty())
        throw ParseError(where, 0, "\"models\" must be a non-empty array");

    std::set<std::string> seen;
    for (const auto& m : j["models"]) {
        ModelMeta meta;
        meta.model_id = field(m, "model_id");
        if (!seen.insert(meta.model_id).second)
            throw ValidationError(where + ": duplicate model_id '" + meta.model_id + "'");
        meta.display_size = m.value("display_size", std::string{});
        if (m.contains("overall_accuracy")) meta.overall_accuracy = m["overall_accuracy"].get<double>();
        if (m.contains("per_type_accuracy"))
            meta.per_type_accuracy = m["per_type_accuracy"].get<std::map<std::string, double>>();
        d.predictions.push_back(load_predictions(base / field(m, "predictions"), meta.model_id));
        d.models.push_back(std::move(meta));
    }
    const auto ids = d.model_ids();
    d.partition = load_family_partition(base / field(j, "families"), ids);
    for (auto& meta : d.models) meta.family_id = d.partition.family_of(meta.model_id);
    return d;
}

void save_dataset(const fs::path& dir, const Dataset& dataset) {
    fs::create_directories(dir / "predictions");
    json models = json::array();
    for (std::size_t i = 0; i < dataset.predictions.size(); ++i) {
        const auto& p = dataset.predictions[i];
        const std::string rel = "predictions/" + p.model_id + ".jsonl";
        save_predictions(dir / rel, p);
        json m{{"model_id", p.model_id}, {"predictions", rel}};
        if (i < dataset.models.size()) {
            const auto& meta = dataset.models[i];
            if (!meta.display_size.empty()) m["display_size"] = meta.display_size;
            if (meta.overall_accuracy) m["overall_accuracy"] = *meta.overall_accuracy;
            if (!meta.per_type_accuracy.empty()) m["per_type_accuracy"] = meta.per_type_accuracy;
        }
        models.push_back(std::move(m));
    }
    save_labels(dir / "labels.jsonl", dataset.labels);
    save_family_map(dir / "families.json", dataset.partition);
    json manifest{{"mode", to_string(dataset.labels.mode)},
                  {"labels", "labels.jsonl"},
                  {"families", "families.json"},
                  {"models", models}};
    write_file(dir / "dataset.json", manifest.dump(2) + "\n");
}

}  // namespace famvote
