#include "famvote/voting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "famvote/cv.hpp"
#include "famvote/error.hpp"
#include "famvote/random.hpp"

namespace famvote {

WeightKind parse_weight_kind(const std::string& text) {
    if (text == "overall") return WeightKind::overall;
    if (text == "per-type" || text == "per_type") return WeightKind::per_type;
    throw UsageError("unknown weight scheme '" + text + "' (expected overall or per-type)");
}

std::string to_string(WeightKind kind) { return kind == WeightKind::overall ? "overall" : "per-type"; }

double log_odds(double p, double eps) {
    const double c = std::clamp(p, eps, 1.0 - eps);
    return std::log(c / (1.0 - c));
}

WeightScheme make_weight_scheme(const AccuracyMatrix& matrix, WeightKind kind, double epsilon,
                                std::span<const int> questions) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw ContractViolation("epsilon must lie in (0, 0.5)");
    if (matrix.model_count() == 0 || matrix.question_count() == 0)
        throw ContractViolation("weight scheme needs a nonempty accuracy matrix");
    WeightScheme ws;
    ws.kind = kind;
    ws.epsilon = epsilon;
    const Eigen::MatrixXd acc = kind == WeightKind::overall ? Eigen::MatrixXd(matrix.model_accuracy(questions))
                                                            : matrix.model_type_accuracy(questions);
    ws.weights = acc.unaryExpr([epsilon](double p) { return log_odds(p, epsilon); });
    return ws;
}

FamilyIndex FamilyIndex::build(const FamilyPartition& partition, std::span<const std::string> models) {
    FamilyIndex fi;
    std::map<std::string, int> index;
    fi.family_of.resize(models.size());
    for (std::size_t m = 0; m < models.size(); ++m) {
        const auto& fam = partition.family_of(models[m]);
        auto [it, inserted] = index.emplace(fam, fi.size());
        if (inserted) {
            fi.ids.push_back(fam);
            fi.members.emplace_back();
        }
        fi.family_of[m] = it->second;
        fi.members[static_cast<std::size_t>(it->second)].push_back(static_cast<int>(m));
    }
    return fi;
}

const CandidateTally* VoteOutcome::find(int answer_id) const {
    for (const auto& c : candidates)
        if (c.answer == answer_id) return &c;
    return nullptr;
}

void Ballot::cast(int answer, double weight, std::span<const int> supporters) {
    auto it = std::find_if(tallies_.begin(), tallies_.end(), [&](const auto& t) { return t.answer == answer; });
    if (it == tallies_.end()) {
        tallies_.push_back({answer, 0.0, 0, {}});
        it = std::prev(tallies_.end());
    }
    it->weight += weight;
    it->voters += 1;
    it->supporters.insert(it->supporters.end(), supporters.begin(), supporters.end());
}

VoteOutcome Ballot::decide(int question) && {
    if (tallies_.empty()) throw ContractViolation("vote with no ballots");
    std::sort(tallies_.begin(), tallies_.end(), [](const CandidateTally& a, const CandidateTally& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        if (a.voters != b.voters) return a.voters > b.voters;
        return a.answer < b.answer;
    });
    VoteOutcome out;
    out.question = question;
    out.answer = tallies_.front().answer;
    out.margin = tallies_.size() > 1 ? tallies_[0].weight - tallies_[1].weight : 0.0;
    for (auto& t : tallies_) std::sort(t.supporters.begin(), t.supporters.end());
    out.candidates = std::move(tallies_);
    return out;
}

namespace {

template <typename WeightOf>
VoteOutcome weighted_vote(const EvalData& data, int question, std::span<const int> voters, WeightOf&& weight_of) {
    Ballot ballot;
    const auto& ids = data.answers.ids;
    auto cast = [&](int m) { ballot.cast(ids(m, question), weight_of(m), std::span<const int>(&m, 1)); };
    if (voters.empty())
        for (int m = 0; m < static_cast<int>(ids.rows()); ++m) cast(m);
    else
        for (int m : voters) cast(m);
    return std::move(ballot).decide(question);
}

int type_of(const EvalData& data, int question) {
    return data.matrix.question_type[static_cast<std::size_t>(question)];
}

double sharpen(double w, double alpha) {
    if (alpha == 1.0) return w;
    return std::copysign(std::pow(std::abs(w), alpha), w);
}

}  // namespace

VoteOutcome majority_vote(const EvalData& data, int question, std::span<const int> voters) {
    return weighted_vote(data, question, voters, [](int) { return 1.0; });
}

VoteOutcome calibrated_vote(const EvalData& data, const WeightScheme& weights, int question,
                            std::span<const int> voters) {
    const int t = type_of(data, question);
    return weighted_vote(data, question, voters, [&](int m) { return weights.weight(m, t); });
}

std::vector<int> best_member_per_family(const FamilyIndex& families, const Eigen::VectorXd& model_accuracy) {
    std::vector<int> best;
    for (const auto& members : families.members) {
        int b = members.front();
        for (int m : members)
            if (model_accuracy(m) > model_accuracy(b)) b = m;
        best.push_back(b);
    }
    std::sort(best.begin(), best.end());
    return best;
}

VoteOutcome dedup_vote(const EvalData& data, const WeightScheme& weights, const FamilyIndex& families,
                       const Eigen::VectorXd& model_accuracy, int question) {
    const auto voters = best_member_per_family(families, model_accuracy);
    return calibrated_vote(data, weights, question, voters);
}

Eigen::VectorXd answer_agreement(const AnswerMatrix& answers, std::span<const int> reference) {
    const Eigen::Index m_count = answers.ids.rows();
    Eigen::MatrixXd agree = Eigen::MatrixXd::Zero(m_count, m_count);
    std::size_t n = 0;
    auto add = [&](Eigen::Index q) {
        ++n;
        for (Eigen::Index i = 0; i < m_count; ++i)
            for (Eigen::Index j = i + 1; j < m_count; ++j)
                if (answers.ids(i, q) == answers.ids(j, q)) agree(i, j) += 1.0;
    };
    if (reference.empty())
        for (Eigen::Index q = 0; q < answers.ids.cols(); ++q) add(q);
    else
        for (int q : reference) add(q);

    Eigen::VectorXd out = Eigen::VectorXd::Ones(m_count);
    if (m_count < 2 || n == 0) return out;
    for (Eigen::Index i = 0; i < m_count; ++i) {
        double total = 0.0;
        for (Eigen::Index j = 0; j < m_count; ++j)
            if (j != i) total += agree(std::min(i, j), std::max(i, j));
        out(i) = total / (static_cast<double>(n) * static_cast<double>(m_count - 1));
    }
    return out;
}

VoteOutcome correlation_aware_vote(const EvalData& data, const WeightScheme& weights,
                                   const Eigen::VectorXd& agreement, int question, double epsilon) {
    const int t = type_of(data, question);
    return weighted_vote(data, question, {},
                         [&](int m) { return weights.weight(m, t) / std::max(agreement(m), epsilon); });
}

VoteOutcome family_vote(const EvalData& data, const WeightScheme& weights, const FamilyIndex& families, int family,
                        int question) {
    return calibrated_vote(data, weights, question, families.members[static_cast<std::size_t>(family)]);
}

FamilyStats compute_family_stats(const EvalData& data, const FamilyIndex& families, const WeightScheme& weights,
                                 std::span<const int> reference, double epsilon) {
    const int f_count = families.size();
    FamilyStats s;
    s.quality = Eigen::VectorXd::Zero(f_count);
    s.size.resize(static_cast<std::size_t>(f_count));

    std::vector<int> all;
    if (reference.empty()) {
        all = data.all_questions();
        reference = all;
    }
    // Family-vote scores laid out like model rows, so P_f is accumulated
    // exactly as a model accuracy would be.
    AccuracyMatrix votes;
    votes.scores = Eigen::MatrixXd::Zero(f_count, data.matrix.question_count());
    votes.type_names = data.matrix.type_names;
    votes.question_type = data.matrix.question_type;
    const Eigen::VectorXd acc = data.matrix.model_accuracy(reference);
    for (int f = 0; f < f_count; ++f) {
        const auto& members = families.members[static_cast<std::size_t>(f)];
        for (int q : reference)
            votes.scores(f, q) = data.answer_score(q, family_vote(data, weights, families, f, q).answer);
        double best = acc(members.front());
        for (int m : members) best = std::max(best, acc(m));
        s.quality(f) = best;
        s.size[static_cast<std::size_t>(f)] = static_cast<int>(members.size());
    }
    s.internal_accuracy = votes.model_accuracy(reference);
    auto to_weight = [epsilon](double p) { return log_odds(p, epsilon); };
    s.weight = s.internal_accuracy.unaryExpr(to_weight);
    if (weights.kind == WeightKind::per_type) s.type_weight = votes.model_type_accuracy(reference).unaryExpr(to_weight);
    return s;
}

VoteOutcome hfv_vote(const EvalData& data, const WeightScheme& weights, const FamilyIndex& families,
                     const FamilyStats& stats, double alpha, double tau, int question) {
    const int t = type_of(data, question);
    Ballot ballot;
    for (int f = 0; f < families.size(); ++f) {
        if (stats.internal_accuracy(f) < tau) continue;
        const auto inner = family_vote(data, weights, families, f, question);
        ballot.cast(inner.answer, sharpen(stats.weight_for(f, t), alpha), inner.winner().supporters);
    }
    try {
        return std::move(ballot).decide(question);
    } catch (const ContractViolation&) {
        throw Error("family-quality threshold " + std::to_string(tau) + " excludes every family");
    }
}

VoteOutcome rccv_vote(const EvalData& data, const WeightScheme& weights, const FamilyIndex& families, double rho,
                      int question) {
    const int t = type_of(data, question);
    return weighted_vote(data, question, {}, [&](int m) {
        return weights.weight(m, t) / std::pow(static_cast<double>(families.family_size(m)), rho);
    });
}

VoteOutcome qualrccv_vote(const EvalData& data, const WeightScheme& weights, const FamilyIndex& families,
                          const FamilyStats& stats, double rho, double gamma, int question) {
    const int t = type_of(data, question);
    return weighted_vote(data, question, {}, [&](int m) {
        const int f = families.family_of[static_cast<std::size_t>(m)];
        return weights.weight(m, t) * std::pow(stats.quality(f), gamma) /
               std::pow(static_cast<double>(families.family_size(m)), rho);
    });
}

double oracle_select(const AccuracyMatrix& matrix, int question) { return matrix.scores.col(question).maxCoeff(); }

double routing_oracle(const AccuracyMatrix& matrix, const Eigen::VectorXd& ensemble_scores, int best_model) {
    if (ensemble_scores.size() != matrix.question_count())
        throw ContractViolation("ensemble scores do not cover the matrix questions");
    if (ensemble_scores.size() == 0) return 0.0;
    return matrix.scores.row(best_model).transpose().cwiseMax(ensemble_scores).mean();
}

// ---------------------------------------------------------------------------

namespace {
const std::vector<std::pair<Method, std::string>>& method_names() {
    static const std::vector<std::pair<Method, std::string>> names = {
        {Method::majority, "majority"}, {Method::calibrated, "calibrated"}, {Method::dedup, "dedup"},
        {Method::correlation_aware, "corr"}, {Method::hfv, "hfv"},           {Method::hfv_sharp, "hfv-sharp"},
        {Method::hfv_auto, "hfv-auto"},     {Method::rccv, "rccv"},         {Method::qualrccv, "qualrccv"}};
    return names;
}
}  // namespace

Method parse_method(const std::string& text) {
    for (const auto& [m, name] : method_names())
        if (name == text) return m;
    throw UsageError("unknown method '" + text + "'");
}

std::string to_string(Method method) {
    for (const auto& [m, name] : method_names())
        if (m == method) return name;
    return "?";
}

const std::vector<Method>& all_methods() {
    static const std::vector<Method> methods = [] {
        std::vector<Method> v;
        for (const auto& [m, name] : method_names()) v.push_back(m);
        return v;
    }();
    return methods;
}

VoteContext VoteContext::build(const EvalData& data, const FamilyPartition& partition, const MethodParams& params,
                               std::span<const int> reference) {
    VoteContext ctx;
    ctx.weights = make_weight_scheme(data.matrix, params.weights, params.epsilon, reference);
    ctx.families = FamilyIndex::build(partition, data.matrix.models);
    ctx.model_accuracy = data.matrix.model_accuracy(reference);
    ctx.stats = compute_family_stats(data, ctx.families, ctx.weights, reference, params.epsilon);
    ctx.agreement = answer_agreement(data.answers, reference);
    return ctx;
}

std::vector<VoteOutcome> vote_questions(const EvalData& data, const VoteContext& ctx, Method method,
                                        const MethodParams& p, std::span<const int> targets) {
    std::vector<VoteOutcome> out;
    out.reserve(targets.size());
    const auto dedup_voters = best_member_per_family(ctx.families, ctx.model_accuracy);
    for (int q : targets) {
        switch (method) {
            case Method::majority: out.push_back(majority_vote(data, q)); break;
            case Method::calibrated: out.push_back(calibrated_vote(data, ctx.weights, q)); break;
            case Method::dedup: out.push_back(calibrated_vote(data, ctx.weights, q, dedup_voters)); break;
            case Method::correlation_aware:
                out.push_back(correlation_aware_vote(data, ctx.weights, ctx.agreement, q, p.epsilon));
                break;
            case Method::hfv: out.push_back(hfv_vote(data, ctx.weights, ctx.families, ctx.stats, 1.0, p.tau, q)); break;
            case Method::hfv_sharp:
                out.push_back(hfv_vote(data, ctx.weights, ctx.families, ctx.stats, p.alpha, p.tau, q));
                break;
            case Method::rccv: out.push_back(rccv_vote(data, ctx.weights, ctx.families, p.rho, q)); break;
            case Method::qualrccv:
                out.push_back(qualrccv_vote(data, ctx.weights, ctx.families, ctx.stats, p.rho, p.gamma, q));
                break;
            case Method::hfv_auto: throw ContractViolation("hfv-auto needs cross-validation; use aggregate()");
        }
    }
    return out;
}

Eigen::VectorXd outcome_scores(const EvalData& data, std::span<const VoteOutcome> outcomes) {
    Eigen::VectorXd s(static_cast<Eigen::Index>(outcomes.size()));
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        s(static_cast<Eigen::Index>(i)) = data.answer_score(outcomes[i].question, outcomes[i].answer);
    return s;
}

std::vector<double> hfv_alpha_grid() { return {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0}; }
std::vector<double> hfv_tau_grid() { return {0.0, 0.45, 0.50, 0.55, 0.60}; }

HfvAutoSelection hfv_auto_select(const EvalData& data, const FamilyPartition& partition, const MethodParams& params,
                                 std::span<const int> questions) {
    std::vector<int> pool(questions.begin(), questions.end());
    if (pool.empty()) pool = data.all_questions();
    const auto folds = stratified_folds(pool, data.matrix.question_type, params.folds, params.seed);

    HfvAutoSelection sel;
    sel.alpha_grid = hfv_alpha_grid();
    sel.tau_grid = hfv_tau_grid();
    const auto na = static_cast<Eigen::Index>(sel.alpha_grid.size());
    const auto nt = static_cast<Eigen::Index>(sel.tau_grid.size());
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(na, nt);
    std::vector<std::vector<bool>> feasible(static_cast<std::size_t>(na), std::vector<bool>(static_cast<std::size_t>(nt), true));

    for (std::size_t k = 0; k < folds.size(); ++k) {
        const auto train = training_questions(folds, k);
        const auto ctx = VoteContext::build(data, partition, params, train);
        const int f_count = ctx.families.size();
        // Stage-1 answers are independent of (alpha, tau).
        std::vector<std::vector<VoteOutcome>> stage1(folds[k].size());
        for (std::size_t i = 0; i < folds[k].size(); ++i)
            for (int f = 0; f < f_count; ++f)
                stage1[i].push_back(family_vote(data, ctx.weights, ctx.families, f, folds[k][i]));

        for (Eigen::Index a = 0; a < na; ++a) {
            for (Eigen::Index t = 0; t < nt; ++t) {
                const double tau = sel.tau_grid[static_cast<std::size_t>(t)];
                if ((ctx.stats.internal_accuracy.array() >= tau).count() == 0) {
                    feasible[static_cast<std::size_t>(a)][static_cast<std::size_t>(t)] = false;
                    continue;
                }
                for (std::size_t i = 0; i < folds[k].size(); ++i) {
                    const int qt = type_of(data, folds[k][i]);
                    Ballot ballot;
                    for (int f = 0; f < f_count; ++f) {
                        if (ctx.stats.internal_accuracy(f) < tau) continue;
                        ballot.cast(stage1[i][static_cast<std::size_t>(f)].answer,
                                    sharpen(ctx.stats.weight_for(f, qt), sel.alpha_grid[static_cast<std::size_t>(a)]),
                                    stage1[i][static_cast<std::size_t>(f)].winner().supporters);
                    }
                    const auto out = std::move(ballot).decide(folds[k][i]);
                    total(a, t) += data.answer_score(out.question, out.answer);
                }
            }
        }
    }

    sel.mean_accuracy = total / static_cast<double>(pool.size());
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < na; ++a)
        for (Eigen::Index t = 0; t < nt; ++t) {
            ++sel.cells_evaluated;
            if (!feasible[static_cast<std::size_t>(a)][static_cast<std::size_t>(t)]) {
                sel.mean_accuracy(a, t) = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            if (sel.mean_accuracy(a, t) > best) {
                best = sel.mean_accuracy(a, t);
                sel.alpha = sel.alpha_grid[static_cast<std::size_t>(a)];
                sel.tau = sel.tau_grid[static_cast<std::size_t>(t)];
            }
        }
    return sel;
}

std::vector<VoteOutcome> aggregate(const EvalData& data, const FamilyPartition& partition, Method method,
                                   const MethodParams& params) {
    const auto all = data.all_questions();
    if (method != Method::hfv_auto) {
        const auto ctx = VoteContext::build(data, partition, params, all);
        return vote_questions(data, ctx, method, params, all);
    }

    const auto folds = stratified_folds(all, data.matrix.question_type, params.folds, params.seed);
    std::vector<VoteOutcome> out(all.size());
    for (std::size_t k = 0; k < folds.size(); ++k) {
        const auto train = training_questions(folds, k);
        MethodParams inner = params;
        inner.seed = derive_seed(params.seed, {k});
        const auto sel = hfv_auto_select(data, partition, inner, train);
        const auto ctx = VoteContext::build(data, partition, params, train);
        MethodParams chosen = params;
        chosen.alpha = sel.alpha;
        chosen.tau = (ctx.stats.internal_accuracy.array() >= sel.tau).count() > 0 ? sel.tau : 0.0;
        for (auto& o : vote_questions(data, ctx, Method::hfv_sharp, chosen, folds[k]))
            out[static_cast<std::size_t>(o.question)] = std::move(o);
    }
    return out;
}

}  // namespace famvote
