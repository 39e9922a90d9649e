#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace famvote {

/// Splits `questions` into k disjoint folds, stratified by question type.
/// Each type's questions are shuffled with a seeded generator and dealt
/// round-robin, continuing the deal across types so fold sizes differ by at
/// most one. Throws UsageError if there are fewer questions than folds.
std::vector<std::vector<int>> stratified_folds(std::span<const int> questions, std::span<const int> question_type,
                                               int k, std::uint64_t seed);

/// All questions of `folds` except fold `held_out`, in ascending order.
std::vector<int> training_questions(const std::vector<std::vector<int>>& folds, std::size_t held_out);

}  // namespace famvote
