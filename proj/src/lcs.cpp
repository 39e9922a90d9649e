#include "famvote/lcs.hpp"

#include <algorithm>
#include <set>

#include "famvote/cv.hpp"
#include "famvote/error.hpp"
#include "famvote/parallel.hpp"

namespace famvote {

namespace {

constexpr int kBaseFeatures = 9;
constexpr int kExtendedFeatures = 4;

bool numeric_text(const std::string& s) {
    if (s.empty()) return false;
    bool digit = false;
    for (char c : s) {
        if (c >= '0' && c <= '9')
            digit = true;
        else if (c != '.' && c != ',' && c != ' ')
            return false;
    }
    return digit;
}

}  // namespace

CandidateContext CandidateContext::build(const EvalData& data, const FamilyPartition& partition,
                                         const LcsConfig& config, std::span<const int> reference) {
    MethodParams params;
    params.weights = config.weights;
    params.epsilon = config.epsilon;
    params.rho = config.rho;
    params.gamma = config.gamma;
    CandidateContext ctx;
    ctx.votes = VoteContext::build(data, partition, params, reference);
    Eigen::Index best = 0;
    ctx.votes.model_accuracy.maxCoeff(&best);
    ctx.best_model = static_cast<int>(best);
    ctx.model_count = static_cast<int>(data.matrix.model_count());
    ctx.type_count = data.matrix.type_count();
    ctx.extended = config.extended_features;
    return ctx;
}

std::vector<Candidate> generate_candidates(const EvalData& data, const VoteOutcome& tally,
                                           const CandidateContext& ctx, int k) {
    if (k < 1) throw UsageError("candidate count k must be at least 1");
    std::vector<Candidate> out;
    const double top = tally.candidates.front().weight;
    const auto& acc = ctx.votes.model_accuracy;
    for (std::size_t i = 0; i < tally.candidates.size() && out.size() < static_cast<std::size_t>(k); ++i) {
        const auto& t = tally.candidates[i];
        Candidate c;
        c.question = tally.question;
        c.answer = t.answer;
        c.rank = static_cast<int>(i);
        c.n_models = static_cast<int>(t.supporters.size());
        std::set<int> fams;
        double sum = 0.0, mx = -1.0, mn = 2.0;
        for (int m : t.supporters) {
            fams.insert(ctx.votes.families.family_of[static_cast<std::size_t>(m)]);
            sum += acc(m);
            mx = std::max(mx, acc(m));
            mn = std::min(mn, acc(m));
            c.best_model_supports = c.best_model_supports || m == ctx.best_model;
        }
        c.n_families = static_cast<int>(fams.size());
        c.total_weight = t.weight;
        c.margin = t.weight - top;
        c.avg_supporter_acc = c.n_models ? sum / c.n_models : 0.0;
        c.max_supporter_acc = c.n_models ? mx : 0.0;
        c.min_supporter_acc = c.n_models ? mn : 0.0;
        const auto& text = data.answer_text(t.answer);
        c.answer_length = static_cast<int>(text.size());
        c.is_numeric = numeric_text(text);
        c.question_type = tally.question >= 0 ? data.matrix.question_type[static_cast<std::size_t>(tally.question)] : -1;
        out.push_back(c);
    }
    return out;
}

std::vector<std::string> lcs_feature_names(const EvalData& data, bool extended) {
    std::vector<std::string> names = {"n_models",          "n_families",        "total_weight",
                                      "margin",            "avg_supporter_acc", "max_supporter_acc",
                                      "min_supporter_acc", "best_model_supports", "answer_length"};
    if (extended)
        for (const char* n : {"support_fraction", "family_fraction", "rank", "is_numeric"}) names.emplace_back(n);
    for (const auto& t : data.matrix.type_names) names.push_back("type=" + t);
    return names;
}

Eigen::RowVectorXd extract_features(const Candidate& c, const CandidateContext& ctx) {
    const int extra = ctx.extended ? kExtendedFeatures : 0;
    Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(kBaseFeatures + extra + ctx.type_count);
    x << c.n_models, c.n_families, c.total_weight, c.margin, c.avg_supporter_acc, c.max_supporter_acc,
        c.min_supporter_acc, c.best_model_supports ? 1.0 : 0.0, c.answer_length,
        Eigen::RowVectorXd::Zero(extra + ctx.type_count);
    if (ctx.extended) {
        x(kBaseFeatures) = static_cast<double>(c.n_models) / ctx.model_count;
        x(kBaseFeatures + 1) = static_cast<double>(c.n_families) / ctx.votes.families.size();
        x(kBaseFeatures + 2) = c.rank;
        x(kBaseFeatures + 3) = c.is_numeric ? 1.0 : 0.0;
    }
    if (c.question_type >= 0 && c.question_type < ctx.type_count) x(kBaseFeatures + extra + c.question_type) = 1.0;
    return x;
}

std::size_t lcs_predict(const std::vector<Candidate>& candidates, const GbdtModel& model,
                        const CandidateContext& ctx) {
    if (candidates.empty()) throw ContractViolation("lcs_predict needs at least one candidate");
    std::size_t best = 0;
    double best_p = model.predict_proba(extract_features(candidates[0], ctx));
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double p = model.predict_proba(extract_features(candidates[i], ctx));
        const auto& a = candidates[i];
        const auto& b = candidates[best];
        const bool better = p > best_p || (p == best_p && (a.total_weight > b.total_weight ||
                                                           (a.total_weight == b.total_weight && a.answer < b.answer)));
        if (better) {
            best = i;
            best_p = p;
        }
    }
    return best;
}

LcsResult run_lcs_cv(const EvalData& data, const FamilyPartition& partition, const LcsConfig& config) {
    const auto all = data.all_questions();
    const auto folds = stratified_folds(all, data.matrix.question_type, config.folds, config.seed);
    const auto n = all.size();

    LcsResult res;
    res.answers.assign(n, -1);
    res.qualrccv_answers.assign(n, -1);
    res.fold_of.assign(n, -1);
    res.scores = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    res.probabilities = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    res.feature_names = lcs_feature_names(data, config.extended_features);
    res.folds.resize(folds.size());
    res.models.resize(folds.size());

    parallel_for(folds.size(), [&](std::size_t k) {
        const auto train = training_questions(folds, k);
        const auto ctx = CandidateContext::build(data, partition, config, train);
        auto tally = [&](int q) {
            return qualrccv_vote(data, ctx.votes.weights, ctx.votes.families, ctx.votes.stats, config.rho,
                                 config.gamma, q);
        };

        std::vector<Eigen::RowVectorXd> rows;
        std::vector<int> labels;
        for (int q : train) {
            for (const auto& c : generate_candidates(data, tally(q), ctx, config.k)) {
                rows.push_back(extract_features(c, ctx));
                labels.push_back(data.matrix.is_correct(data.answer_score(q, c.answer)) ? 1 : 0);
            }
        }
        Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(res.feature_names.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = rows[i];
        auto model = train_gbdt(X, labels, config.gbdt, res.feature_names);

        auto& fm = res.folds[k];
        fm.fold = static_cast<int>(k);
        fm.train_questions = static_cast<int>(train.size());
        fm.test_questions = static_cast<int>(folds[k].size());
        fm.train_rows = static_cast<int>(rows.size());
        double lcs_total = 0.0, qual_total = 0.0;
        for (int q : folds[k]) {
            const auto outcome = tally(q);
            const auto cands = generate_candidates(data, outcome, ctx, config.k);
            const auto pick = lcs_predict(cands, model, ctx);
            const auto qi = static_cast<std::size_t>(q);
            res.answers[qi] = cands[pick].answer;
            res.qualrccv_answers[qi] = outcome.answer;
            res.fold_of[qi] = static_cast<int>(k);
            res.scores(q) = data.answer_score(q, cands[pick].answer);
            res.probabilities(q) = model.predict_proba(extract_features(cands[pick], ctx));
            lcs_total += res.scores(q);
            qual_total += data.answer_score(q, outcome.answer);
        }
        fm.lcs_accuracy = lcs_total / static_cast<double>(folds[k].size());
        fm.qualrccv_accuracy = qual_total / static_cast<double>(folds[k].size());
        res.models[k] = std::move(model);
    });

    res.accuracy = n ? res.scores.mean() : 0.0;
    double qual = 0.0;
    for (std::size_t q = 0; q < n; ++q) qual += data.answer_score(static_cast<int>(q), res.qualrccv_answers[q]);
    res.qualrccv_accuracy = n ? qual / static_cast<double>(n) : 0.0;
    res.feature_importance = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(res.feature_names.size()));
    for (const auto& m : res.models) res.feature_importance += m.feature_importance;
    res.feature_importance /= static_cast<double>(res.models.size());
    return res;
}

}  // namespace famvote
