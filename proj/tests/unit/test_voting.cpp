#include <doctest.h>

#include <cmath>

#include "famvote/error.hpp"
#include "famvote/parallel.hpp"
#include "famvote/synth.hpp"
#include "famvote/voting.hpp"
#include "support.hpp"

using namespace famvote;
using testing::eval_of;
using testing::exact_dataset;

namespace {

WeightScheme flat_weights(std::vector<double> w) {
    WeightScheme s;
    s.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    return s;
}

// One question; model i answers answers[i].
EvalData one_question(const std::vector<std::string>& answers, const std::string& gold = "yes") {
    std::vector<std::string> ids, fams;
    std::vector<std::vector<std::string>> a;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        ids.push_back("m" + std::to_string(i));
        fams.push_back("f" + std::to_string(i));
        a.push_back({answers[i]});
    }
    return eval_of(exact_dataset(ids, fams, a, {gold}));
}

const std::string& chosen(const EvalData& d, const VoteOutcome& o) { return d.answer_text(o.answer); }

double tally_of(const EvalData& d, const VoteOutcome& o, const std::string& answer) {
    for (const auto& c : o.candidates)
        if (d.answer_text(c.answer) == answer) return c.weight;
    return NAN;
}

std::vector<int> answers_of(const std::vector<VoteOutcome>& v) {
    std::vector<int> a;
    for (const auto& o : v) a.push_back(o.answer);
    return a;
}

}  // namespace

TEST_CASE("log-odds weights") {
    CHECK(log_odds(0.5) == 0.0);
    CHECK(log_odds(0.75) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
    CHECK(log_odds(1.0) == doctest::Approx(std::log(0.999 / 0.001)).epsilon(1e-15));
    CHECK(log_odds(1.0) == doctest::Approx(6.9068).epsilon(1e-4));
    CHECK(log_odds(0.0) == doctest::Approx(-log_odds(1.0)));
}

TEST_CASE("weight schemes are finite and per-type aware") {
    const auto d = testing::random_dataset(2, 5, 60);
    const auto data = eval_of(d);
    const auto overall = make_weight_scheme(data.matrix, WeightKind::overall);
    const auto per_type = make_weight_scheme(data.matrix, WeightKind::per_type);
    CHECK(overall.weights.cols() == 1);
    CHECK(per_type.weights.cols() == data.matrix.type_count());
    CHECK(overall.weights.allFinite());
    CHECK(per_type.weights.allFinite());
    const auto acc = data.matrix.model_accuracy();
    for (Eigen::Index m = 0; m < acc.size(); ++m) CHECK(overall.weights(m, 0) == log_odds(acc(m)));
}

TEST_CASE("majority vote") {
    auto d = one_question({"yes", "yes", "no"});
    auto o = majority_vote(d, 0);
    CHECK(chosen(d, o) == "yes");
    CHECK(o.margin == 1.0);

    d = one_question({"b", "a"});
    o = majority_vote(d, 0);
    CHECK(chosen(d, o) == "a");
    CHECK(o.margin == 0.0);
}

TEST_CASE("a planted majority of 17 voters wins") {
    std::vector<std::string> a;
    for (int i = 0; i < 17; ++i) a.push_back(i < 7 ? "cat" : (i < 12 ? "dog" : "cow" + std::to_string(i)));
    const auto d = one_question(a);
    CHECK(chosen(d, majority_vote(d, 0)) == "cat");
}

TEST_CASE("tie-break order: tally, then supporters, then answer") {
    // Equal tallies: two voters beat one.
    auto d = one_question({"b", "b", "a"});
    CHECK(chosen(d, calibrated_vote(d, flat_weights({1, 1, 2}), 0)) == "b");
    // Equal tallies and supporters: lexicographic.
    d = one_question({"b", "a"});
    CHECK(chosen(d, calibrated_vote(d, flat_weights({1, 1}), 0)) == "a");
}

TEST_CASE("calibrated vote") {
    auto d = one_question({"a", "b"});
    CHECK(chosen(d, calibrated_vote(d, flat_weights({2, 1}), 0)) == "a");
    CHECK(chosen(d, calibrated_vote(d, flat_weights({1, 2}), 0)) == "b");

    SUBCASE("five correlated members against three independents") {
        d = one_question({"no", "no", "no", "no", "no", "yes", "yes", "yes"});
        auto o = calibrated_vote(d, flat_weights({1, 1, 1, 1, 1, 2, 2, 2}), 0);
        CHECK(chosen(d, o) == "yes");
        CHECK(tally_of(d, o, "yes") == 6.0);
        CHECK(tally_of(d, o, "no") == 5.0);
        o = calibrated_vote(d, flat_weights({1, 1, 1, 1, 1, 1.1, 1.1, 1.1}), 0);
        CHECK(chosen(d, o) == "no");
        CHECK(tally_of(d, o, "yes") == doctest::Approx(3.3));
    }
}

TEST_CASE("equal weights reduce calibrated to majority") {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto data = eval_of(testing::random_dataset(s, 7, 80));
        const auto w = flat_weights(std::vector<double>(7, 0.7));
        for (int q = 0; q < 80; ++q) CHECK(calibrated_vote(data, w, q).answer == majority_vote(data, q).answer);
    }
}

TEST_CASE("dedup keeps the most accurate member of each family") {
    const auto d = exact_dataset({"A", "B", "C"}, {"f", "f", "g"}, {{"x"}, {"y"}, {"y"}}, {"x"});
    const auto data = eval_of(d);
    const auto fam = FamilyIndex::build(d.partition, data.matrix.models);
    Eigen::VectorXd acc(3);
    acc << 0.9, 0.8, 0.6;
    const auto w = flat_weights({1.0, 1.0, 0.5});
    const auto o = dedup_vote(data, w, fam, acc, 0);
    CHECK(chosen(data, o) == "x");
    int voters = 0;
    for (const auto& c : o.candidates) voters += c.voters;
    CHECK(voters == 2);
}

TEST_CASE("dedup on a 17-model, 8-family pool has 8 voters") {
    SynthConfig c;
    c.rho_w = 0.5;
    c.rho_b = 0.2;
    c.n_questions = 50;
    const std::vector<int> sizes = {5, 2, 2, 2, 2, 2, 1, 1};
    for (std::size_t f = 0; f < sizes.size(); ++f)
        c.families.push_back({"f" + std::to_string(f), std::vector<double>(static_cast<std::size_t>(sizes[f]), 0.7), {}, {}});
    const auto d = generate(c);
    const auto data = eval_of(d);
    const auto ctx = VoteContext::build(data, d.partition, {}, {});
    for (int q = 0; q < 50; ++q) {
        const auto o = dedup_vote(data, ctx.weights, ctx.families, ctx.model_accuracy, q);
        int voters = 0;
        for (const auto& cand : o.candidates) voters += cand.voters;
        CHECK(voters == 8);
    }
}

TEST_CASE("correlation-aware vote") {
    SUBCASE("uniform agreement changes nothing") {
        for (std::uint64_t s = 0; s < 5; ++s) {
            const auto d = testing::random_dataset(s + 40, 6, 60);
            const auto data = eval_of(d);
            const auto w = make_weight_scheme(data.matrix, WeightKind::overall);
            const Eigen::VectorXd agree = Eigen::VectorXd::Constant(6, 0.37);
            for (int q = 0; q < 60; ++q)
                CHECK(correlation_aware_vote(data, w, agree, q).answer == calibrated_vote(data, w, q).answer);
        }
    }
    SUBCASE("models that always agree have agreement 1") {
        const auto d = exact_dataset({"a", "b", "c"}, {"f", "g", "h"}, {{"x", "y"}, {"x", "y"}, {"x", "y"}}, {"x", "z"});
        const auto agree = answer_agreement(eval_of(d).answers);
        CHECK(agree == Eigen::VectorXd::Ones(3));
    }
    SUBCASE("a loner gets the floor and the largest boost") {
        const auto d = exact_dataset({"a", "b", "c"}, {"f", "g", "h"}, {{"x", "y"}, {"x", "y"}, {"u", "v"}}, {"x", "y"});
        const auto data = eval_of(d);
        const auto agree = answer_agreement(data.answers);
        CHECK(agree(2) == 0.0);
        CHECK(agree(0) == 0.5);
        const auto o = correlation_aware_vote(data, flat_weights({1, 1, 1}), agree, 0, 1e-3);
        CHECK(chosen(data, o) == "u");
        CHECK(tally_of(data, o, "u") == doctest::Approx(1000.0));
    }
    SUBCASE("hand-computed tally with agreement {1, 1, 0.5}") {
        const auto data = one_question({"x", "x", "y"});
        Eigen::VectorXd agree(3);
        agree << 1.0, 1.0, 0.5;
        const auto w = flat_weights({1.0, 1.0, 1.2});
        CHECK(chosen(data, calibrated_vote(data, w, 0)) == "x");
        const auto o = correlation_aware_vote(data, w, agree, 0);
        CHECK(chosen(data, o) == "y");
        CHECK(tally_of(data, o, "x") == doctest::Approx(2.0));
        CHECK(tally_of(data, o, "y") == doctest::Approx(2.4));
    }
}

TEST_CASE("hfv recovers the answer of the independent families") {
    // Family of five all saying "no", three singletons saying "yes", every
    // model and family at accuracy 0.8.
    const std::vector<std::string> ids = {"a0", "a1", "a2", "a3", "a4", "b", "c", "d"};
    const auto d = exact_dataset(ids, {"A", "A", "A", "A", "A", "B", "C", "D"},
                                 {{"no"}, {"no"}, {"no"}, {"no"}, {"no"}, {"yes"}, {"yes"}, {"yes"}}, {"yes"});
    const auto data = eval_of(d);
    const auto fam = FamilyIndex::build(d.partition, data.matrix.models);
    const double w = log_odds(0.8);
    const auto weights = flat_weights(std::vector<double>(8, w));
    FamilyStats stats;
    stats.internal_accuracy = Eigen::VectorXd::Constant(4, 0.8);
    stats.weight = Eigen::VectorXd::Constant(4, w);
    stats.quality = Eigen::VectorXd::Constant(4, 0.8);
    stats.size = {5, 1, 1, 1};

    const auto flat = calibrated_vote(data, weights, 0);
    CHECK(chosen(data, flat) == "no");
    CHECK(tally_of(data, flat, "no") == doctest::Approx(5 * w));
    const auto h = hfv_vote(data, weights, fam, stats, 1.0, 0.0, 0);
    CHECK(chosen(data, h) == "yes");
    CHECK(tally_of(data, h, "yes") == doctest::Approx(3 * w));
    CHECK(tally_of(data, h, "no") == doctest::Approx(w));

    SUBCASE("sharpening raises family weights to alpha") {
        const auto s = hfv_vote(data, weights, fam, stats, 2.0, 0.0, 0);
        CHECK(tally_of(data, s, "yes") == doctest::Approx(3 * w * w));
    }
    SUBCASE("tau drops weak families and rejects excluding them all") {
        stats.internal_accuracy(0) = 0.4;
        CHECK(hfv_vote(data, weights, fam, stats, 1.0, 0.5, 0).candidates.size() == 1);
        CHECK_THROWS_AS(hfv_vote(data, weights, fam, stats, 1.0, 0.9, 0), Error);
    }
    SUBCASE("negative family weights keep their sign") {
        stats.weight(1) = -0.5;
        const auto s = hfv_vote(data, weights, fam, stats, 2.0, 0.0, 0);
        CHECK(tally_of(data, s, "yes") == doctest::Approx(2 * w * w - 0.25));
    }
}

TEST_CASE("rccv divides member weights by family size to the rho") {
    const auto d = exact_dataset({"a0", "a1", "a2", "a3", "a4", "b"}, {"A", "A", "A", "A", "A", "B"},
                                 {{"x"}, {"x"}, {"x"}, {"x"}, {"x"}, {"y"}}, {"y"});
    const auto data = eval_of(d);
    const auto fam = FamilyIndex::build(d.partition, data.matrix.models);
    const auto o = rccv_vote(data, flat_weights(std::vector<double>(6, 1.0)), fam, 0.4, 0);
    CHECK(std::pow(5.0, 0.4) == doctest::Approx(1.9037).epsilon(1e-4));
    CHECK(tally_of(data, o, "x") == doctest::Approx(5.0 / std::pow(5.0, 0.4)));
    CHECK(5.0 / tally_of(data, o, "x") == doctest::Approx(1.9037).epsilon(1e-4));
    CHECK(tally_of(data, o, "y") == 1.0);
}

TEST_CASE("qualrccv rescales by family quality") {
    const auto d = exact_dataset({"a", "b"}, {"A", "B"}, {{"x"}, {"y"}}, {"x"});
    const auto data = eval_of(d);
    const auto fam = FamilyIndex::build(d.partition, data.matrix.models);
    FamilyStats stats;
    stats.internal_accuracy = Eigen::Vector2d(0.9, 0.6);
    stats.weight = stats.internal_accuracy.unaryExpr([](double p) { return log_odds(p); });
    stats.quality = Eigen::Vector2d(0.9, 0.6);
    stats.size = {1, 1};
    const auto w = flat_weights({1.0, 1.4});
    CHECK(chosen(data, calibrated_vote(data, w, 0)) == "y");
    const auto o = qualrccv_vote(data, w, fam, stats, 0.0, 1.0, 0);
    CHECK(chosen(data, o) == "x");
    CHECK(tally_of(data, o, "x") == doctest::Approx(0.9));
    CHECK(tally_of(data, o, "y") == doctest::Approx(0.84));
}

TEST_CASE("oracles") {
    const auto d = exact_dataset({"a", "b"}, {"A", "B"}, {{"x", "n", "x"}, {"n", "n", "y"}}, {"x", "y", "y"});
    const auto m = eval_of(d).matrix;
    CHECK(oracle_select(m, 0) == 1.0);
    CHECK(oracle_select(m, 1) == 0.0);
    const Eigen::Vector3d always(1, 1, 1);
    CHECK(routing_oracle(m, always, 0) == 1.0);
    // Best model right on q0, ensemble right on q2: disjoint sets give the union.
    const Eigen::Vector3d ens(0, 0, 1);
    CHECK(routing_oracle(m, ens, 0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("reduction identities on random data") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto d = testing::random_dataset(1000 + s, 8, 120, 4, 4, 0.6);
        const auto data = eval_of(d);
        MethodParams p;
        const auto cal = answers_of(aggregate(data, d.partition, Method::calibrated, p));

        auto with = [&](Method m, MethodParams q, const FamilyPartition& part) {
            return answers_of(aggregate(data, part, m, q));
        };
        MethodParams rho0 = p;
        rho0.rho = 0.0;
        CHECK(with(Method::rccv, rho0, d.partition) == cal);
        for (double rho : {0.0, 0.4, 1.3}) {
            MethodParams g0 = p;
            g0.rho = rho;
            g0.gamma = 0.0;
            CHECK(with(Method::qualrccv, g0, d.partition) == with(Method::rccv, g0, d.partition));
        }
        MethodParams a1 = p;
        a1.alpha = 1.0;
        CHECK(with(Method::hfv_sharp, a1, d.partition) == with(Method::hfv, a1, d.partition));
        const auto singles = FamilyPartition::singletons(data.matrix.models);
        CHECK(with(Method::hfv, p, singles) == cal);
        CHECK(with(Method::dedup, p, singles) == cal);
        CHECK(with(Method::hfv, p, FamilyPartition::merged(data.matrix.models)) == cal);
        CHECK(with(Method::rccv, p, singles) == cal);

        MethodParams pt = p;
        pt.weights = WeightKind::per_type;
        const auto cal_pt = with(Method::calibrated, pt, d.partition);
        pt.rho = 0.0;
        CHECK(with(Method::rccv, pt, d.partition) == cal_pt);
        CHECK(with(Method::dedup, pt, singles) == cal_pt);
        CHECK(with(Method::hfv, pt, singles) == cal_pt);
        CHECK(with(Method::hfv, pt, FamilyPartition::merged(data.matrix.models)) == cal_pt);
    }
}

TEST_CASE("scaling every weight leaves the winners alone") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto d = testing::random_dataset(2000 + s, 7, 80);
        const auto data = eval_of(d);
        const auto ctx = VoteContext::build(data, d.partition, {}, {});
        for (double c : {0.01, 0.5, 3.0, 1e4}) {
            const auto w = ctx.weights.scaled(c);
            auto stats = ctx.stats;
            stats.weight *= c;
            for (int q = 0; q < 80; ++q) {
                CHECK(calibrated_vote(data, w, q).answer == calibrated_vote(data, ctx.weights, q).answer);
                CHECK(rccv_vote(data, w, ctx.families, 0.4, q).answer ==
                      rccv_vote(data, ctx.weights, ctx.families, 0.4, q).answer);
                CHECK(hfv_vote(data, w, ctx.families, stats, 1.0, 0.0, q).answer ==
                      hfv_vote(data, ctx.weights, ctx.families, ctx.stats, 1.0, 0.0, q).answer);
            }
        }
    }
}

TEST_CASE("extra weight on the winner never changes it") {
    Rng rng(8);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<std::pair<int, double>> ballots;
        const int n = 1 + static_cast<int>(rng.below(8));
        for (int i = 0; i < n; ++i) ballots.emplace_back(static_cast<int>(rng.below(4)), rng.uniform() * 2.0 - 0.5);
        Ballot a;
        for (int i = 0; i < n; ++i) a.cast(ballots[static_cast<std::size_t>(i)].first, ballots[static_cast<std::size_t>(i)].second, std::vector<int>{i});
        const int winner = std::move(a).decide(0).answer;
        Ballot b;
        for (int i = 0; i < n; ++i) b.cast(ballots[static_cast<std::size_t>(i)].first, ballots[static_cast<std::size_t>(i)].second, std::vector<int>{i});
        b.cast(winner, rng.uniform() + 1e-9, std::vector<int>{n});
        CHECK(std::move(b).decide(0).answer == winner);
    }
}

TEST_CASE("outcomes do not depend on the thread count") {
    const auto d = testing::random_dataset(77, 9, 400, 5, 4);
    const auto data = eval_of(d);
    for (Method m : all_methods()) {
        set_max_threads(1);
        const auto one = aggregate(data, d.partition, m, {});
        set_max_threads(4);
        const auto four = aggregate(data, d.partition, m, {});
        REQUIRE(one.size() == four.size());
        for (std::size_t q = 0; q < one.size(); ++q) {
            CHECK(one[q].answer == four[q].answer);
            CHECK(one[q].margin == four[q].margin);
        }
    }
    set_max_threads(0);
}

TEST_CASE("oracle dominates routing, which dominates best and ensemble") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto d = testing::random_dataset(300 + s, 6, 150);
        const auto data = eval_of(d);
        const auto m = data.matrix;
        Eigen::Index best;
        m.model_accuracy().maxCoeff(&best);
        for (Method meth : {Method::calibrated, Method::hfv, Method::qualrccv}) {
            const auto ens = outcome_scores(data, aggregate(data, d.partition, meth, {}));
            double oracle = 0.0;
            for (int q = 0; q < m.question_count(); ++q) {
                const double route = std::max(m.scores(best, q), ens(q));
                CHECK(oracle_select(m, q) >= route);
                oracle += oracle_select(m, q);
            }
            oracle /= static_cast<double>(m.question_count());
            const double routing = routing_oracle(m, ens, static_cast<int>(best));
            CHECK(oracle >= routing);
            CHECK(routing >= std::max(m.model_accuracy()(best), ens.mean()));
        }
    }
}

TEST_CASE("method names round-trip") {
    for (Method m : all_methods()) CHECK(parse_method(to_string(m)) == m);
    CHECK(to_string(Method::correlation_aware) == "corr");
    CHECK_THROWS_AS(parse_method("nope"), UsageError);
}

TEST_CASE("hfv-auto grid") {
    CHECK(hfv_alpha_grid().size() == 7);
    CHECK(hfv_tau_grid().size() == 5);

    SUBCASE("balanced strong families keep alpha at 1") {
        SynthConfig c;
        c.rho_w = 0.5;
        c.rho_b = 0.1;
        c.n_questions = 1500;
        c.seed = 4;
        for (int f = 0; f < 4; ++f) c.families.push_back({"f" + std::to_string(f), {0.75, 0.75}, {}, {}});
        const auto d = generate(c);
        const auto sel = hfv_auto_select(eval_of(d), d.partition, {});
        CHECK(sel.cells_evaluated == 35);
        CHECK(sel.mean_accuracy.rows() == 7);
        CHECK(sel.mean_accuracy.cols() == 5);
        CHECK(sel.alpha == 1.0);
    }
    SUBCASE("a near-random family is excluded by tau") {
        SynthConfig c;
        c.rho_w = 0.8;
        c.rho_b = 0.1;
        c.n_questions = 2000;
        c.answer_space = 3;
        c.seed = 6;
        c.families.push_back({"good0", {0.62}, {}, {}});
        c.families.push_back({"good1", {0.6}, {}, {}});
        c.families.push_back({"good2", {0.58}, {}, {}});
        c.families.push_back({"noise", {0.42, 0.41, 0.4}, {}, {}});
        const auto d = generate(c);
        const auto sel = hfv_auto_select(eval_of(d), d.partition, {});
        CHECK(sel.tau > 0.0);
    }
}
