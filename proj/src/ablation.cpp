#include "famvote/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "famvote/error.hpp"
#include "famvote/parallel.hpp"
#include "famvote/random.hpp"

namespace famvote {

namespace {

double method_accuracy(const EvalData& data, const FamilyPartition& partition, Method method,
                       const MethodParams& params) {
    const auto outcomes = aggregate(data, partition, method, params);
    return outcome_scores(data, outcomes).mean();
}

}  // namespace

EvalData select_models(const EvalData& data, const std::vector<int>& models) {
    EvalData out;
    out.matrix = data.matrix;
    out.answers.vocab = data.answers.vocab;
    const auto m = static_cast<Eigen::Index>(models.size());
    out.matrix.models.clear();
    out.matrix.scores.resize(m, data.matrix.question_count());
    out.answers.ids.resize(m, data.answers.ids.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
        const int src = models[static_cast<std::size_t>(i)];
        out.matrix.models.push_back(data.matrix.models[static_cast<std::size_t>(src)]);
        out.matrix.scores.row(i) = data.matrix.scores.row(src);
        out.answers.ids.row(i) = data.answers.ids.row(src);
    }
    return out;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

BalancedEnsemble balanced_ensemble(const EvalData& data, const FamilyPartition& partition,
                                   const MethodParams& params) {
    const auto fam = FamilyIndex::build(partition, data.matrix.models);
    auto keep = best_member_per_family(fam, data.matrix.model_accuracy());
    std::sort(keep.begin(), keep.end());
    const auto subset = select_models(data, keep);

    BalancedEnsemble r;
    r.models = subset.matrix.models;
    r.accuracy = method_accuracy(subset, partition.restricted_to(subset.matrix.models), Method::calibrated, params);
    r.full_accuracy = method_accuracy(data, partition, Method::calibrated, params);
    r.delta = r.accuracy - r.full_accuracy;
    return r;
}

std::vector<ScalingPoint> scaling_curve(const EvalData& data, const FamilyPartition& partition,
                                        const std::vector<int>& k_values, Method method,
                                        const MethodParams& params, int samples) {
    const int m = static_cast<int>(data.matrix.model_count());
    const auto fam = FamilyIndex::build(partition, data.matrix.models);
    if (fam.size() < 2) throw UsageError("scaling curve needs at least two families");
    if (samples < 1) throw UsageError("scaling curve needs at least one sample per k");

    std::vector<ScalingPoint> out;
    for (int k : k_values) {
        if (k < 2 || k > m)
            throw UsageError("subset size " + std::to_string(k) + " must be between 2 and " + std::to_string(m));
        ScalingPoint p;
        p.k = k;
        p.samples = k == m ? 1 : samples;
        p.gaps.assign(static_cast<std::size_t>(p.samples), 0.0);
        p.imbalance.assign(static_cast<std::size_t>(p.samples), 0.0);
        parallel_for(static_cast<std::size_t>(p.samples), [&](std::size_t i) {
            Rng rng(derive_seed(params.seed, {static_cast<std::uint64_t>(k), i}));
            std::vector<int> pool(static_cast<std::size_t>(m));
            std::vector<int> subset;
            for (;;) {
                std::iota(pool.begin(), pool.end(), 0);
                for (int j = 0; j < k; ++j) {
                    const auto pick = j + static_cast<int>(rng.below(static_cast<std::uint64_t>(m - j)));
                    std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick)]);
                }
                subset.assign(pool.begin(), pool.begin() + k);
                std::set<int> families;
                for (int s : subset) families.insert(fam.family_of[static_cast<std::size_t>(s)]);
                if (families.size() >= 2) break;
            }
            std::sort(subset.begin(), subset.end());
            std::vector<int> counts(static_cast<std::size_t>(fam.size()), 0);
            for (int s : subset) ++counts[static_cast<std::size_t>(fam.family_of[static_cast<std::size_t>(s)])];
            p.imbalance[i] = static_cast<double>(*std::max_element(counts.begin(), counts.end())) / k;

            const auto sub = select_models(data, subset);
            const auto part = partition.restricted_to(sub.matrix.models);
            p.gaps[i] = method_accuracy(sub, part, method, params) -
                        method_accuracy(sub, part, Method::calibrated, params);
        });
        p.mean_gap = std::accumulate(p.gaps.begin(), p.gaps.end(), 0.0) / p.samples;
        p.positive_share =
            static_cast<double>(std::count_if(p.gaps.begin(), p.gaps.end(), [](double g) { return g > 0.0; })) /
            p.samples;
        p.gap_imbalance_corr = pearson(p.gaps, p.imbalance);
        out.push_back(std::move(p));
    }
    return out;
}

FlipReport answer_flip_report(const EvalData& data, const std::vector<int>& a, const std::vector<int>& b) {
    const auto n = static_cast<std::size_t>(data.matrix.question_count());
    if (a.size() != n || b.size() != n) throw UsageError("flip report needs answers for the same question set");
    FlipReport r;
    r.type_names = data.matrix.type_names;
    r.per_type.resize(r.type_names.size());
    auto add = [&](FlipCounts& c, int q) {
        const double sa = data.answer_score(q, a[static_cast<std::size_t>(q)]);
        const double sb = data.answer_score(q, b[static_cast<std::size_t>(q)]);
        ++c.questions;
        c.delta += sb - sa;
        if (a[static_cast<std::size_t>(q)] == b[static_cast<std::size_t>(q)]) return;
        ++c.flips;
        const bool ca = data.matrix.is_correct(sa), cb = data.matrix.is_correct(sb);
        if (!ca && cb) ++c.wrong_to_correct;
        if (ca && !cb) ++c.correct_to_wrong;
    };
    for (std::size_t q = 0; q < n; ++q) {
        add(r.total, static_cast<int>(q));
        add(r.per_type[static_cast<std::size_t>(data.matrix.question_type[q])], static_cast<int>(q));
    }
    auto finish = [](FlipCounts& c) {
        c.net = c.wrong_to_correct - c.correct_to_wrong;
        if (c.questions) c.delta /= c.questions;
    };
    finish(r.total);
    for (auto& c : r.per_type) finish(c);
    return r;
}

GranularityReport granularity_ablation(const EvalData& data,
                                       const std::vector<std::pair<std::string, FamilyPartition>>& partitions,
                                       const MethodParams& params) {
    MethodParams p = params;
    p.weights = WeightKind::overall;
    GranularityReport r;
    const auto flat = FamilyPartition::singletons(data.matrix.models);
    r.calibrated = method_accuracy(data, flat, Method::calibrated, p);
    for (const auto& [name, partition] : partitions) {
        GranularityRow row;
        row.name = name;
        row.families = static_cast<int>(partition.family_count());
        row.accuracy = method_accuracy(data, partition, Method::hfv, p);
        r.rows.push_back(row);
    }
    return r;
}

}  // namespace famvote
