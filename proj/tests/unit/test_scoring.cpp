#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "famvote/error.hpp"
#include "famvote/random.hpp"
#include "famvote/scoring.hpp"
#include "support.hpp"

using namespace famvote;

namespace {

// Official metric, written out: average over the ten leave-one-out subsets.
double loo_oracle(const std::string& pred, const std::vector<std::string>& annotators) {
    double total = 0.0;
    for (std::size_t skip = 0; skip < annotators.size(); ++skip) {
        int matches = 0;
        for (std::size_t i = 0; i < annotators.size(); ++i)
            if (i != skip && annotators[i] == pred) ++matches;
        total += std::min(1.0, matches / 3.0);
    }
    return total / static_cast<double>(annotators.size());
}

std::vector<std::string> annotators_with(int matches, const std::string& yes = "yes") {
    std::vector<std::string> a;
    for (int i = 0; i < 10; ++i) a.push_back(i < matches ? yes : "other" + std::to_string(i));
    return a;
}

}  // namespace

TEST_CASE("normalize_answer rules") {
    CHECK(normalize_answer("The Cat") == "cat");
    CHECK(normalize_answer("  2  ") == "2");
    CHECK(normalize_answer("two") == "2");
    CHECK(normalize_answer("ten") == "10");
    CHECK(normalize_answer("eleven") == "eleven");
}

TEST_CASE("normalize_answer is idempotent") {
    const std::vector<std::string> pieces = {"The", " a ", "an", "Cat", "two", "3", "  ", ".", ",", "Don't", "!",
                                             "ten", "A", "yes", "NO", "x-ray", "\t", "one", "?", "it's"};
    Rng rng(11);
    for (int trial = 0; trial < 2000; ++trial) {
        std::string s;
        const int n = static_cast<int>(rng.below(6));
        for (int i = 0; i < n; ++i) s += pieces[rng.below(pieces.size())];
        const auto once = normalize_answer(s);
        CHECK(normalize_answer(once) == once);
    }
}

TEST_CASE("soft accuracy endpoints") {
    CHECK(soft_accuracy("yes", annotators_with(0)) == 0.0);
    CHECK(soft_accuracy("yes", annotators_with(10)) == 1.0);
}

TEST_CASE("three of ten matches gives 0.9 under leave-one-out") {
    const auto a = annotators_with(3);
    CHECK(loo_oracle("yes", a) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(soft_accuracy("yes", a) == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("soft accuracy matches the enumerated oracle for every match count") {
    for (int n = 0; n <= 10; ++n) {
        const auto a = annotators_with(n);
        CHECK(soft_accuracy("yes", a) == doctest::Approx(loo_oracle("yes", a)).epsilon(1e-15));
        CHECK(soft_accuracy_from_matches(n) == doctest::Approx(loo_oracle("yes", a)).epsilon(1e-15));
        CHECK(soft_accuracy("yes", a, SoftVariant::simple) == doctest::Approx(std::min(1.0, n / 3.0)));
        CHECK(soft_accuracy("yes", a) <= soft_accuracy("yes", a, SoftVariant::simple) + 1e-15);
    }
}

TEST_CASE("soft accuracy ignores annotator order") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        auto a = annotators_with(static_cast<int>(rng.below(11)));
        const double before = soft_accuracy("yes", a);
        for (std::size_t i = a.size() - 1; i > 0; --i) std::swap(a[i], a[rng.below(i + 1)]);
        CHECK(soft_accuracy("yes", a) == before);
    }
}

TEST_CASE("predictions are normalized before soft matching") {
    CHECK(soft_accuracy("Yes.", annotators_with(10)) == 1.0);
    CHECK(soft_accuracy("two", annotators_with(4, "2")) == 1.0);
}

TEST_CASE("exact accuracy") {
    CHECK(exact_accuracy("Left", "left") == 1.0);
    CHECK(exact_accuracy("left", "right") == 0.0);
    CHECK(exact_accuracy("the dog", "dog") == 1.0);
}

TEST_CASE("one model, two questions, both correct") {
    const auto d = testing::exact_dataset({"m"}, {"f"}, {{"yes", "no"}}, {"yes", "no"});
    const auto m = build_accuracy_matrix(d.predictions, d.labels);
    CHECK(m.scores.rows() == 1);
    CHECK(m.scores(0, 0) == 1.0);
    CHECK(m.scores(0, 1) == 1.0);
    CHECK(m.model_accuracy()(0) == 1.0);
}

TEST_CASE("hand-scored 3 x 4 matrix") {
    const auto d = testing::exact_dataset({"a", "b", "c"}, {"f", "f", "g"},
                                          {{"yes", "2", "The Red", "x"}, {"no", "two", "red", "x"}, {"yes", "3", "blue", "y"}},
                                          {"yes", "2", "red", "y"}, {"yn", "num", "other", "other"});
    const auto m = build_accuracy_matrix(d.predictions, d.labels);
    Eigen::MatrixXd expect(3, 4);
    expect << 1, 1, 1, 0,  //
        0, 1, 1, 0,        //
        1, 0, 0, 1;
    CHECK(m.scores == expect);
    CHECK(m.type_names == std::vector<std::string>{"num", "other", "yn"});
    CHECK(m.question_type == std::vector<int>{2, 0, 1, 1});
    const auto per_type = m.model_type_accuracy();
    CHECK(per_type(0, 1) == 0.5);
    CHECK(per_type(2, 1) == 0.5);
    CHECK(per_type(1, 2) == 0.0);
}

TEST_CASE("soft mode builds the matrix and answer ids") {
    Dataset d;
    d.labels.mode = ScoreMode::soft;
    LabelEntry e;
    e.annotator_answers = annotators_with(3);
    e.question_type = "yes/no";
    d.labels.entries["q1"] = e;
    e.annotator_answers = annotators_with(1, "no");
    d.labels.entries["q2"] = e;
    for (std::string id : {"a", "b"}) {
        PredictionSet p;
        p.model_id = id;
        p.entries = {{"q1", id == "a" ? "yes" : "no"}, {"q2", "no"}};
        d.predictions.push_back(p);
    }
    const auto data = build_eval_data(d.predictions, d.labels);
    CHECK(data.matrix.scores(0, 0) == doctest::Approx(0.9));
    CHECK(data.matrix.scores(1, 0) == 0.0);
    CHECK(data.matrix.scores(0, 1) == doctest::Approx(0.3));
    CHECK(data.matrix.is_correct(0.5));
    CHECK_FALSE(data.matrix.is_correct(0.3));
    CHECK(data.answers.ids(0, 1) == data.answers.ids(1, 1));
    CHECK(data.answer_score(0, data.answers.ids(0, 0)) == doctest::Approx(0.9));
}

TEST_CASE("row means reproduce overall and per-type accuracy") {
    const auto d = testing::random_dataset(21, 6, 300, 4, 3, 0.5, 3);
    const auto m = build_accuracy_matrix(d.predictions, d.labels);
    const auto acc = m.model_accuracy();
    const auto pt = m.model_type_accuracy();
    for (Eigen::Index i = 0; i < m.model_count(); ++i) {
        double total = 0.0;
        std::vector<double> sum(3, 0.0), n(3, 0.0);
        for (Eigen::Index q = 0; q < m.question_count(); ++q) {
            total += m.scores(i, q);
            sum[static_cast<std::size_t>(m.question_type[static_cast<std::size_t>(q)])] += m.scores(i, q);
            n[static_cast<std::size_t>(m.question_type[static_cast<std::size_t>(q)])] += 1.0;
        }
        CHECK(std::abs(acc(i) - total / static_cast<double>(m.question_count())) < 1e-12);
        for (int t = 0; t < 3; ++t) CHECK(std::abs(pt(i, t) - sum[t] / n[t]) < 1e-12);
    }
}

TEST_CASE("missing predictions are hard errors") {
    auto d = testing::exact_dataset({"a", "b"}, {"f", "g"}, {{"x", "y"}, {"x", "y"}}, {"x", "y"});
    d.predictions[1].entries.erase(testing::qid(1));
    CHECK_THROWS_AS(build_accuracy_matrix(d.predictions, d.labels), ValidationError);
}

TEST_CASE("stale cached accuracies are warnings") {
    auto d = testing::exact_dataset({"a", "b"}, {"f", "g"}, {{"x", "y"}, {"x", "n"}}, {"x", "y"});
    d.models[0].overall_accuracy = 1.0;
    d.models[1].overall_accuracy = 0.9;
    const auto m = build_accuracy_matrix(d.predictions, d.labels);
    const auto warnings = reconcile_model_meta(d.models, m);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("'b'") != std::string::npos);
    CHECK(*d.models[1].overall_accuracy == 0.5);
}

TEST_CASE("accuracy matrix persists as csv plus sidecar") {
    const auto dir = std::filesystem::temp_directory_path() / "famvote_matrix";
    std::filesystem::remove_all(dir);
    const auto d = testing::random_dataset(4, 4, 30);
    const auto m = build_accuracy_matrix(d.predictions, d.labels);
    save_accuracy_matrix(dir / "m.csv", dir / "m.json", m);
    const auto back = load_accuracy_matrix(dir / "m.csv", dir / "m.json");
    CHECK(back.models == m.models);
    CHECK(back.questions == m.questions);
    CHECK(back.scores == m.scores);
    CHECK(back.type_names == m.type_names);
    CHECK(back.question_type == m.question_type);
    CHECK(back.mode == m.mode);
}
