#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>

#include "famvote/cv.hpp"
#include "famvote/error.hpp"
#include "famvote/random.hpp"

using namespace famvote;

TEST_CASE("stratified folds partition the questions") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 5 + static_cast<int>(rng.below(300));
        const int types = 1 + static_cast<int>(rng.below(5));
        const int k = 2 + static_cast<int>(rng.below(std::min(n, 9) - 1));
        std::vector<int> questions(static_cast<std::size_t>(n)), type(static_cast<std::size_t>(n));
        std::iota(questions.begin(), questions.end(), 0);
        for (auto& t : type) t = static_cast<int>(rng.below(types));

        const auto folds = stratified_folds(questions, type, k, trial);
        REQUIRE(folds.size() == static_cast<std::size_t>(k));
        std::vector<int> seen;
        std::size_t lo = SIZE_MAX, hi = 0;
        for (const auto& f : folds) {
            seen.insert(seen.end(), f.begin(), f.end());
            lo = std::min(lo, f.size());
            hi = std::max(hi, f.size());
        }
        std::sort(seen.begin(), seen.end());
        CHECK(seen == questions);
        CHECK(hi - lo <= 1);

        for (int t = 0; t < types; ++t) {
            int tlo = INT32_MAX, thi = 0;
            for (const auto& f : folds) {
                const int c = static_cast<int>(std::count_if(f.begin(), f.end(), [&](int q) { return type[static_cast<std::size_t>(q)] == t; }));
                tlo = std::min(tlo, c);
                thi = std::max(thi, c);
            }
            CHECK(thi - tlo <= 1);
        }

        for (std::size_t h = 0; h < folds.size(); ++h) {
            const auto train = training_questions(folds, h);
            CHECK(std::is_sorted(train.begin(), train.end()));
            CHECK(train.size() + folds[h].size() == static_cast<std::size_t>(n));
            for (int q : folds[h]) CHECK_FALSE(std::binary_search(train.begin(), train.end(), q));
        }
    }
}

TEST_CASE("folds are a function of the seed") {
    std::vector<int> q(100), t(100);
    std::iota(q.begin(), q.end(), 0);
    for (int i = 0; i < 100; ++i) t[static_cast<std::size_t>(i)] = i % 3;
    CHECK(stratified_folds(q, t, 5, 9) == stratified_folds(q, t, 5, 9));
    CHECK(stratified_folds(q, t, 5, 9) != stratified_folds(q, t, 5, 10));
}

TEST_CASE("too few questions") {
    std::vector<int> q = {0, 1, 2}, t = {0, 0, 0};
    CHECK_THROWS_AS(stratified_folds(q, t, 5, 0), UsageError);
}
