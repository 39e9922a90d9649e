#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "famvote/dataset_io.hpp"
#include "famvote/error.hpp"
#include "support.hpp"

using namespace famvote;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("famvote_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string soft_record(const std::string& q, int n) {
    std::string s = R"({"question_id":")" + q + R"(","question_type":"yes/no","annotator_answers":[)";
    for (int i = 0; i < n; ++i) s += std::string(i ? "," : "") + "\"yes\"";
    return s + "]}";
}

}  // namespace

TEST_CASE("predictions parse one record per line") {
    std::istringstream in(R"({"question_id":"q1","answer":"yes"})");
    const auto p = parse_predictions(in, "p.jsonl", "m");
    CHECK(p.model_id == "m");
    REQUIRE(p.entries.size() == 1);
    CHECK(p.entries.at("q1") == "yes");
}

TEST_CASE("duplicate question ids are rejected") {
    std::istringstream in("{\"question_id\":\"q1\",\"answer\":\"yes\"}\n{\"question_id\":\"q1\",\"answer\":\"no\"}\n");
    CHECK_THROWS_AS(parse_predictions(in, "p.jsonl", "m"), ValidationError);
}

TEST_CASE("a missing answer field names the line") {
    std::istringstream in("{\"question_id\":\"q1\",\"answer\":\"yes\"}\n{\"question_id\":\"q2\"}\n");
    try {
        parse_predictions(in, "p.jsonl", "m");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("p.jsonl:2") != std::string::npos);
        CHECK(std::string(e.what()).find("answer") != std::string::npos);
    }
}

TEST_CASE("empty answers are legal") {
    std::istringstream in(R"({"question_id":"q1","answer":""})");
    CHECK(parse_predictions(in, "p", "m").entries.at("q1").empty());
}

TEST_CASE("soft labels need exactly ten annotators") {
    std::istringstream ok(soft_record("q1", 10));
    const auto labels = parse_labels(ok, "l", ScoreMode::soft);
    CHECK(labels.entries.at("q1").annotator_answers.size() == 10);
    std::istringstream bad(soft_record("q1", 9));
    CHECK_THROWS_AS(parse_labels(bad, "l", ScoreMode::soft), ValidationError);
}

TEST_CASE("exact label record") {
    std::istringstream in(R"({"question_id":"q1","gold_answer":"left","question_type":"query"})");
    const auto labels = parse_labels(in, "l", ScoreMode::exact);
    CHECK(labels.entries.at("q1").gold_answer == "left");
    CHECK(labels.entries.at("q1").question_type == "query");
}

TEST_CASE("family partitions") {
    std::vector<std::string> models;
    for (int i = 0; i < 17; ++i) models.push_back("m" + std::to_string(i));
    const std::vector<int> sizes = {5, 2, 2, 2, 2, 2, 1, 1};
    std::string doc = "{";
    int k = 0;
    for (std::size_t f = 0; f < sizes.size(); ++f)
        for (int i = 0; i < sizes[f]; ++i, ++k)
            doc += std::string(k ? "," : "") + "\"m" + std::to_string(k) + "\":\"f" + std::to_string(f) + "\"";
    doc += "}";

    SUBCASE("grouped") {
        std::istringstream in(doc);
        const auto p = parse_family_partition(in, "fam", models);
        CHECK(p.family_count() == 8);
        CHECK(p.families().front().members.size() == 5);
        CHECK(p.family_of("m16") == "f7");
    }
    SUBCASE("per model") {
        const auto p = FamilyPartition::singletons(models);
        CHECK(p.family_count() == 17);
        for (const auto& f : p.families()) CHECK(f.members.size() == 1);
    }
    SUBCASE("missing model is named") {
        auto short_doc = doc;
        short_doc.replace(short_doc.find(",\"m16\":\"f7\""), std::string(",\"m16\":\"f7\"").size(), "");
        std::istringstream in(short_doc);
        try {
            parse_family_partition(in, "fam", models);
            FAIL("expected a validation error");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("m16") != std::string::npos);
        }
    }
}

TEST_CASE("save and load round-trip byte for byte") {
    const auto dir = scratch("roundtrip");
    const auto d = testing::random_dataset(3, 5, 40);
    save_dataset(dir / "a", d);
    const auto back = load_dataset(dir / "a" / "dataset.json");
    CHECK(back.labels == d.labels);
    CHECK(back.partition == d.partition);
    save_dataset(dir / "b", back);
    for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), dir / "a");
        CHECK_MESSAGE(read_file(entry.path()) == read_file(dir / "b" / rel), rel.string());
    }

    SUBCASE("soft labels") {
        std::istringstream in(soft_record("q1", 10) + "\n" + soft_record("q2", 10) + "\n");
        const auto labels = parse_labels(in, "l", ScoreMode::soft);
        save_labels(dir / "soft.jsonl", labels);
        const auto again = load_labels(dir / "soft.jsonl", ScoreMode::soft);
        CHECK(again == labels);
        save_labels(dir / "soft2.jsonl", again);
        CHECK(read_file(dir / "soft.jsonl") == read_file(dir / "soft2.jsonl"));
    }
}

TEST_CASE("loading twice gives equal objects") {
    const auto dir = scratch("twice");
    save_dataset(dir, testing::random_dataset(9, 4, 20));
    const auto a = load_dataset(dir / "dataset.json");
    const auto b = load_dataset(dir / "dataset.json");
    CHECK(a.labels == b.labels);
    CHECK(a.partition == b.partition);
    REQUIRE(a.predictions.size() == b.predictions.size());
    for (std::size_t i = 0; i < a.predictions.size(); ++i) CHECK(a.predictions[i].entries == b.predictions[i].entries);
}

TEST_CASE("a missing file is named in the error") {
    try {
        load_predictions("/nonexistent/preds.jsonl");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("/nonexistent/preds.jsonl") != std::string::npos);
    }
}
