#include <doctest.h>

#include <cmath>

#include "famvote/error.hpp"
#include "famvote/gbdt.hpp"
#include "famvote/random.hpp"

using namespace famvote;

namespace {

struct Sample {
    Eigen::MatrixXd X;
    std::vector<int> y;
};

Sample separable(std::uint64_t seed, int n = 400) {
    Rng rng(seed);
    Sample s{Eigen::MatrixXd(n, 2), {}};
    for (int i = 0; i < n; ++i) {
        s.X(i, 0) = rng.uniform() * 2 - 1;
        s.X(i, 1) = rng.uniform() * 2 - 1;
        s.y.push_back(s.X(i, 0) + 0.7 * s.X(i, 1) > 0.1 ? 1 : 0);
    }
    return s;
}

Sample noisy(std::uint64_t seed, int n = 300, int d = 4) {
    Rng rng(seed);
    Sample s{Eigen::MatrixXd(n, d), {}};
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) s.X(i, j) = rng.normal();
        s.y.push_back(rng.uniform() < 1.0 / (1.0 + std::exp(-(s.X(i, 0) - s.X(i, 1) * s.X(i, 2)))) ? 1 : 0);
    }
    return s;
}

}  // namespace

TEST_CASE("separable data is learned") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto s = separable(seed);
        const auto model = train_gbdt(s.X, s.y, {});
        const auto p = model.predict_proba_rows(s.X);
        int right = 0;
        for (Eigen::Index i = 0; i < p.size(); ++i) right += (p(i) >= 0.5) == (s.y[static_cast<std::size_t>(i)] == 1);
        CHECK(right / static_cast<double>(p.size()) >= 0.99);
    }
}

TEST_CASE("flipping every label mirrors the probabilities") {
    const auto s = noisy(5);
    std::vector<int> flipped;
    for (int v : s.y) flipped.push_back(1 - v);
    GbdtConfig c;
    c.n_estimators = 50;
    c.max_depth = 3;
    const auto a = train_gbdt(s.X, s.y, c).predict_proba_rows(s.X);
    const auto b = train_gbdt(s.X, flipped, c).predict_proba_rows(s.X);
    CHECK((a + b - Eigen::VectorXd::Ones(a.size())).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("training loss falls every round") {
    const auto s = noisy(7);
    std::vector<double> losses;
    GbdtConfig c;
    c.n_estimators = 60;
    const auto model = train_gbdt(s.X, s.y, c, {}, [&](int, double loss) { losses.push_back(loss); });
    REQUIRE(losses.size() == 60);
    const double base = -std::log(0.5);
    CHECK(losses.front() < base + 1e-12);
    for (std::size_t i = 1; i < losses.size(); ++i) CHECK(losses[i] <= losses[i - 1] + 1e-12);
    CHECK(logistic_loss(model, s.X, s.y) == doctest::Approx(losses.back()));
}

TEST_CASE("one depth-1 estimator is a stump plus the base score") {
    const auto s = noisy(9);
    GbdtConfig c;
    c.n_estimators = 1;
    c.max_depth = 1;
    const auto m = train_gbdt(s.X, s.y, c);
    REQUIRE(m.trees.size() == 1);
    const auto& tree = m.trees[0];
    REQUIRE(tree.nodes.size() == 3);
    CHECK(tree.depth() == 1);
    const double prevalence = std::count(s.y.begin(), s.y.end(), 1) / static_cast<double>(s.y.size());
    CHECK(m.base_score == doctest::Approx(std::log(prevalence / (1 - prevalence))));
    const auto& root = tree.nodes[0];
    for (Eigen::Index i = 0; i < s.X.rows(); ++i) {
        const auto& leaf = tree.nodes[static_cast<std::size_t>(s.X(i, root.feature) <= root.threshold ? root.left : root.right)];
        CHECK(m.raw_score(s.X.row(i)) == doctest::Approx(m.base_score + m.learning_rate * leaf.value));
    }
}

TEST_CASE("probabilities, importances and depth") {
    const auto s = noisy(11);
    GbdtConfig c;
    c.n_estimators = 40;
    c.max_depth = 2;
    const auto m = train_gbdt(s.X, s.y, c);
    const auto p = m.predict_proba_rows(s.X);
    CHECK(p.minCoeff() > 0.0);
    CHECK(p.maxCoeff() < 1.0);
    CHECK(m.feature_importance.sum() == doctest::Approx(1.0));
    CHECK(m.feature_importance.minCoeff() >= 0.0);
    for (const auto& t : m.trees) CHECK(t.depth() <= 2);
}

TEST_CASE("model text round-trips") {
    const auto s = noisy(13);
    GbdtConfig c;
    c.n_estimators = 15;
    const auto m = train_gbdt(s.X, s.y, c, {"a", "b", "c", "d"});
    const auto text = m.to_text();
    const auto back = GbdtModel::from_text(text);
    CHECK(back.to_text() == text);
    CHECK(back.trees == m.trees);
    CHECK(back.feature_names == m.feature_names);
    CHECK(back.predict_proba_rows(s.X) == m.predict_proba_rows(s.X));
}

TEST_CASE("a single class is rejected") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(10, 2);
    std::vector<int> y(10, 1);
    CHECK_THROWS_AS(train_gbdt(X, y, {}), UsageError);
}

TEST_CASE("training is deterministic") {
    const auto s = noisy(15);
    CHECK(train_gbdt(s.X, s.y, {}).to_text() == train_gbdt(s.X, s.y, {}).to_text());
}
