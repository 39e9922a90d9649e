#include "famvote/cv.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "famvote/error.hpp"
#include "famvote/random.hpp"

namespace famvote {

std::vector<std::vector<int>> stratified_folds(std::span<const int> questions, std::span<const int> question_type,
                                               int k, std::uint64_t seed) {
    if (k < 2) throw UsageError("cross-validation needs at least 2 folds");
    if (questions.size() < static_cast<std::size_t>(k))
        throw UsageError("cannot split " + std::to_string(questions.size()) + " questions into " +
                         std::to_string(k) + " folds");

    std::map<int, std::vector<int>> by_type;
    for (int q : questions) by_type[question_type[static_cast<std::size_t>(q)]].push_back(q);

    std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
    std::size_t deal = 0;
    for (auto& [type, qs] : by_type) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(type)}));
        for (std::size_t i = qs.size(); i > 1; --i) std::swap(qs[i - 1], qs[rng.below(i)]);
        for (int q : qs) folds[deal++ % folds.size()].push_back(q);
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

std::vector<int> training_questions(const std::vector<std::vector<int>>& folds, std::size_t held_out) {
    std::vector<int> train;
    for (std::size_t f = 0; f < folds.size(); ++f)
        if (f != held_out) train.insert(train.end(), folds[f].begin(), folds[f].end());
    std::sort(train.begin(), train.end());
    return train;
}

}  // namespace famvote
