#include "famvote/analysis.hpp"

#include <cmath>
#include <limits>

#include "famvote/error.hpp"
#include "famvote/stats.hpp"

namespace famvote {

namespace {

struct Moments {
    double mean = 0.0, sd = 0.0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    if (v.empty()) return m;
    for (double x : v) m.mean += x;
    m.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - m.mean) * (x - m.mean);
        m.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return m;
}

}  // namespace

CorrelationReport correlation_report(const AccuracyMatrix& matrix, const FamilyPartition& partition) {
    if (matrix.model_count() < 2) throw UsageError("correlation report needs at least two models");
    if (matrix.question_count() < 2) throw UsageError("correlation report needs at least two questions");
    CorrelationReport r;
    std::vector<Eigen::Index> constant;
    r.corr = row_correlation(matrix.scores, &constant);
    for (auto i : constant) r.constant_models.push_back(matrix.models[static_cast<std::size_t>(i)]);

    const auto fam = FamilyIndex::build(partition, matrix.models);
    std::vector<double> within, cross;
    const auto m = matrix.model_count();
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const bool same = fam.family_of[static_cast<std::size_t>(i)] == fam.family_of[static_cast<std::size_t>(j)];
            (same ? within : cross).push_back(r.corr(i, j));
        }
    const auto w = moments(within), c = moments(cross);
    r.within_mean = w.mean;
    r.within_sd = w.sd;
    r.cross_mean = c.mean;
    r.cross_sd = c.sd;
    r.within_pairs = within.size();
    r.cross_pairs = cross.size();
    if (!within.empty() && !cross.empty()) {
        r.gap = r.within_mean - r.cross_mean;
        r.mannwhitney_p = mann_whitney_p(within, cross);
    } else {
        r.gap = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
}

SpectrumReport spectrum_report(const Eigen::MatrixXd& corr, const FamilyIndex* families) {
    if (corr.rows() != corr.cols() || corr.rows() == 0)
        throw ContractViolation("spectrum needs a nonempty square matrix");
    if ((corr - corr.transpose()).cwiseAbs().maxCoeff() > 1e-9)
        throw ContractViolation("spectrum needs a symmetric matrix");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(corr, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error("eigen-decomposition failed");
    SpectrumReport r;
    r.eigenvalues = solver.eigenvalues().reverse();
    const double trace = corr.trace();
    r.top1_share = r.eigenvalues(0) / trace;
    r.top5_share = r.eigenvalues.head(std::min<Eigen::Index>(5, r.eigenvalues.size())).sum() / trace;
    r.participation_ratio = participation_ratio(r.eigenvalues);

    if (families) {
        for (int f = 0; f < families->size(); ++f) {
            const auto& mem = families->members[static_cast<std::size_t>(f)];
            FamilyKish k;
            k.family = families->ids[static_cast<std::size_t>(f)];
            k.size = static_cast<int>(mem.size());
            double sum = 0.0;
            int pairs = 0;
            for (std::size_t a = 0; a < mem.size(); ++a)
                for (std::size_t b = a + 1; b < mem.size(); ++b) {
                    sum += corr(mem[a], mem[b]);
                    ++pairs;
                }
            k.within_r = pairs ? sum / pairs : 1.0;
            k.effective = kish_effective_size(static_cast<double>(k.size), k.within_r);
            r.kish.push_back(k);
        }
    }
    return r;
}

std::string tier_name(Tier tier) {
    switch (tier) {
        case Tier::trivial: return "T0";
        case Tier::easy: return "T1";
        case Tier::misleading: return "T2";
        case Tier::hard: return "T3";
        case Tier::impossible: return "T4";
    }
    return "?";
}

int best_model(const AccuracyMatrix& matrix) {
    if (matrix.model_count() == 0) throw UsageError("no models");
    const Eigen::VectorXd acc = matrix.model_accuracy();
    int best = 0;
    for (int m = 1; m < acc.size(); ++m)
        if (acc(m) > acc(best)) best = m;
    return best;
}

std::vector<Tier> classify_taxonomy(const AccuracyMatrix& matrix, int best, const Eigen::VectorXd& baseline) {
    if (baseline.size() != matrix.question_count())
        throw ContractViolation("baseline scores must cover every question");
    const BoolMatrix ok = matrix.correctness();
    std::vector<Tier> out(static_cast<std::size_t>(matrix.question_count()));
    for (Eigen::Index q = 0; q < matrix.question_count(); ++q) {
        const auto correct = ok.col(q).count();
        Tier t;
        if (correct == ok.rows())
            t = Tier::trivial;
        else if (ok(best, q))
            t = matrix.is_correct(baseline(q)) ? Tier::easy : Tier::misleading;
        else
            t = correct > 0 ? Tier::hard : Tier::impossible;
        out[static_cast<std::size_t>(q)] = t;
    }
    return out;
}

TaxonomyReport taxonomy_report(const AccuracyMatrix& matrix, const std::vector<Tier>& tiers,
                               const std::vector<std::string>& methods,
                               const std::vector<Eigen::VectorXd>& method_scores) {
    if (methods.size() != method_scores.size()) throw ContractViolation("one score vector per method");
    TaxonomyReport r;
    r.tiers = tiers;
    r.methods = methods;
    const auto nm = methods.size();
    std::array<std::vector<double>, kTierCount> sum, hits;
    for (int t = 0; t < kTierCount; ++t) {
        r.rows[static_cast<std::size_t>(t)].tier = static_cast<Tier>(t);
        sum[static_cast<std::size_t>(t)].assign(nm, 0.0);
        hits[static_cast<std::size_t>(t)].assign(nm, 0.0);
    }
    for (std::size_t q = 0; q < tiers.size(); ++q) {
        const auto t = static_cast<std::size_t>(tiers[q]);
        ++r.rows[t].count;
        for (std::size_t k = 0; k < nm; ++k) {
            const double s = method_scores[k](static_cast<Eigen::Index>(q));
            sum[t][k] += s;
            hits[t][k] += matrix.is_correct(s) ? 1.0 : 0.0;
        }
    }
    const double n = static_cast<double>(tiers.size());
    for (std::size_t t = 0; t < kTierCount; ++t) {
        auto& row = r.rows[t];
        row.share = n > 0 ? static_cast<double>(row.count) / n : 0.0;
        row.mean_score.assign(nm, std::numeric_limits<double>::quiet_NaN());
        row.correct_rate.assign(nm, std::numeric_limits<double>::quiet_NaN());
        if (row.count == 0) continue;
        for (std::size_t k = 0; k < nm; ++k) {
            row.mean_score[k] = sum[t][k] / static_cast<double>(row.count);
            row.correct_rate[k] = hits[t][k] / static_cast<double>(row.count);
        }
    }
    return r;
}

Eigen::VectorXd oracle_scores(const AccuracyMatrix& matrix) { return matrix.scores.colwise().maxCoeff().transpose(); }

GapReport gap_decomposition(const AccuracyMatrix& matrix, const Eigen::VectorXd& ensemble) {
    if (ensemble.size() != matrix.question_count())
        throw ContractViolation("ensemble scores must cover every question");
    GapReport g;
    const int best = best_model(matrix);
    g.best_single = matrix.scores.row(best).mean();
    g.ensemble = ensemble.mean();
    g.routing = routing_oracle(matrix, ensemble, best);
    g.oracle = oracle_scores(matrix).mean();
    const double gap = g.oracle - g.best_single;
    if (gap > 0.0) {
        g.voting_fraction = (g.ensemble - g.best_single) / gap;
        g.routing_fraction = (g.routing - g.ensemble) / gap;
        g.residual_fraction = (g.oracle - g.routing) / gap;
    }
    return g;
}

}  // namespace famvote
