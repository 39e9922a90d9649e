#include "famvote/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "famvote/error.hpp"
#include "famvote/stats.hpp"

namespace famvote {

using nlohmann::json;

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_digest(const std::filesystem::path& path) { return fnv1a_hex(read_file(path)); }

std::string RunManifest::hash() const {
    json j;
    j["config_hash"] = config_hash;
    j["inputs"] = inputs;
    j["seeds"] = seeds;
    j["version"] = version;
    return fnv1a_hex(j.dump());
}

std::string RunManifest::to_json() const {
    json j;
    j["command"] = command;
    j["config_hash"] = config_hash;
    j["inputs"] = inputs;
    j["seeds"] = seeds;
    j["version"] = version;
    j["timestamp"] = timestamp;
    j["threads"] = threads;
    j["manifest_hash"] = hash();
    return j.dump(2) + "\n";
}

void RunManifest::add_input(const std::filesystem::path& path) {
    inputs[path.lexically_normal().generic_string()] = file_digest(path);
}

std::string iso_timestamp() {
    std::time_t t;
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch)
        t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    else
        t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv_number(double value) { return std::isnan(value) ? "NA" : format_double(value); }

std::string CsvTable::str() const {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_field(cells[i]);
        out << "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out.str();
}

std::string outcomes_jsonl(const EvalData& data, std::span<const VoteOutcome> outcomes, const std::string& method,
                           const std::string& manifest_hash) {
    std::ostringstream out;
    for (const auto& o : outcomes) {
        json j;
        j["question_id"] = data.matrix.questions[static_cast<std::size_t>(o.question)];
        j["method"] = method;
        j["answer"] = data.answer_text(o.answer);
        const double score = data.answer_score(o.question, o.answer);
        j["score"] = score;
        j["correct"] = data.matrix.is_correct(score);
        j["margin"] = o.margin;
        json tally = json::object();
        json supporters = json::object();
        for (const auto& c : o.candidates) {
            tally[data.answer_text(c.answer)] = c.weight;
            json ids = json::array();
            for (int m : c.supporters) ids.push_back(data.matrix.models[static_cast<std::size_t>(m)]);
            supporters[data.answer_text(c.answer)] = ids;
        }
        j["tally"] = tally;
        j["supporters"] = supporters;
        j["manifest"] = manifest_hash;
        out << j.dump() << "\n";
    }
    return out.str();
}

ScoredOutcomes load_scored_outcomes(const std::filesystem::path& path, const std::string& method) {
    ScoredOutcomes s;
    s.method = method;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            s.questions.push_back(j.at("question_id").get<std::string>());
            s.scores.push_back(j.at("score").get<double>());
        } catch (const json::exception& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
    }
    return s;
}

std::vector<LeaderboardRow> compare_methods(const std::vector<ScoredOutcomes>& methods, const std::string& baseline,
                                            int resamples, std::uint64_t seed) {
    if (methods.empty()) throw UsageError("nothing to compare");
    const ScoredOutcomes* base = nullptr;
    for (const auto& m : methods)
        if (m.method == baseline) base = &m;
    if (!base) throw UsageError("baseline method '" + baseline + "' is not among the compared outcomes");
    for (const auto& m : methods)
        if (m.questions != base->questions)
            throw UsageError("outcomes for '" + m.method + "' cover a different question set than '" + baseline + "'");

    const double base_mean =
        std::accumulate(base->scores.begin(), base->scores.end(), 0.0) / static_cast<double>(base->scores.size());
    std::vector<LeaderboardRow> rows;
    for (const auto& m : methods) {
        if (m.scores.empty()) throw UsageError("outcomes for '" + m.method + "' are empty");
        const auto ci = bootstrap_ci(m.scores, resamples, seed);
        LeaderboardRow r;
        r.method = m.method;
        r.accuracy = ci.point;
        r.ci_low = ci.ci_low;
        r.ci_high = ci.ci_high;
        r.delta_vs_baseline = ci.point - base_mean;
        r.p_value = paired_bootstrap_p(m.scores, base->scores, resamples, seed);
        rows.push_back(r);
    }
    return rows;
}

CsvTable leaderboard_table(const std::vector<LeaderboardRow>& rows, const std::string& manifest_hash) {
    CsvTable t;
    t.header = {"method", "accuracy", "ci_low", "ci_high", "delta_vs_baseline", "p_value", "manifest"};
    for (const auto& r : rows)
        t.rows.push_back({r.method, csv_number(r.accuracy), csv_number(r.ci_low), csv_number(r.ci_high),
                          csv_number(r.delta_vs_baseline), csv_number(r.p_value), manifest_hash});
    return t;
}

}  // namespace famvote
