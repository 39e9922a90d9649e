#include "famvote/pipeline.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "famvote/ablation.hpp"
#include "famvote/analysis.hpp"
#include "famvote/error.hpp"
#include "famvote/parallel.hpp"
#include "famvote/stats.hpp"
#include "famvote/synth.hpp"

namespace famvote {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) { return csv_number(v); }

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

Eigen::VectorXd method_scores(const LoadedInput& in, Method m, const MethodParams& p) {
    return outcome_scores(in.data, aggregate(in.data, in.dataset.partition, m, p));
}

std::vector<int> outcome_answers(const std::vector<VoteOutcome>& outcomes) {
    std::vector<int> a;
    a.reserve(outcomes.size());
    for (const auto& o : outcomes) a.push_back(o.answer);
    return a;
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

LoadedInput prepare_input(Dataset dataset, const ScoringOptions& options) {
    LoadedInput in;
    in.data = build_eval_data(dataset.predictions, dataset.labels, options);
    in.warnings = reconcile_model_meta(dataset.models, in.data.matrix);
    in.dataset = std::move(dataset);
    return in;
}

void write_score_report(const fs::path& dir, const LoadedInput& in, const std::string& manifest) {
    const auto& m = in.data.matrix;
    save_accuracy_matrix(dir / "accuracy_matrix.csv", dir / "accuracy_matrix.json", m);
    CsvTable t;
    t.header = {"model_id", "family_id", "accuracy"};
    for (const auto& type : m.type_names) t.header.push_back("accuracy[" + type + "]");
    t.header.push_back("manifest");
    const Eigen::VectorXd acc = m.model_accuracy();
    const Eigen::MatrixXd per_type = m.model_type_accuracy();
    for (Eigen::Index i = 0; i < m.model_count(); ++i) {
        const auto& id = m.models[static_cast<std::size_t>(i)];
        std::vector<std::string> row = {id, in.dataset.partition.family_of(id), num(acc(i))};
        for (Eigen::Index t2 = 0; t2 < per_type.cols(); ++t2) row.push_back(num(per_type(i, t2)));
        row.push_back(manifest);
        t.rows.push_back(std::move(row));
    }
    write_file(dir / "models.csv", t.str());
    std::string warnings;
    for (const auto& w : in.warnings) warnings += w + "\n";
    write_file(dir / "warnings.txt", warnings);
}

std::vector<ScoredOutcomes> write_aggregate_report(const fs::path& dir, const LoadedInput& in,
                                                   const std::vector<Method>& methods, const MethodParams& params,
                                                   int resamples, const std::string& manifest) {
    CsvTable summary;
    summary.header = {"method", "accuracy", "ci_low", "ci_high", "resamples", "seed", "manifest"};
    std::vector<ScoredOutcomes> scored;
    for (Method method : methods) {
        const auto name = to_string(method);
        const auto outcomes = aggregate(in.data, in.dataset.partition, method, params);
        write_file(dir / (name + ".jsonl"), outcomes_jsonl(in.data, outcomes, name, manifest));
        ScoredOutcomes s;
        s.method = name;
        s.questions = in.data.matrix.questions;
        const Eigen::VectorXd sc = outcome_scores(in.data, outcomes);
        s.scores.assign(sc.data(), sc.data() + sc.size());
        const auto ci = bootstrap_ci(s.scores, resamples, params.seed);
        summary.rows.push_back({name, num(ci.point), num(ci.ci_low), num(ci.ci_high), std::to_string(resamples),
                                std::to_string(params.seed), manifest});
        scored.push_back(std::move(s));
    }
    write_file(dir / "summary.csv", summary.str());
    return scored;
}

ScoredOutcomes write_lcs_report(const fs::path& dir, const LoadedInput& in, const LcsConfig& config,
                                const std::string& manifest) {
    const auto r = run_lcs_cv(in.data, in.dataset.partition, config);
    const auto& m = in.data.matrix;
    std::ostringstream lines;
    for (std::size_t q = 0; q < r.answers.size(); ++q) {
        json j;
        j["question_id"] = m.questions[q];
        j["method"] = "lcs";
        j["answer"] = in.data.answer_text(r.answers[q]);
        j["score"] = r.scores(static_cast<Eigen::Index>(q));
        j["correct"] = m.is_correct(r.scores(static_cast<Eigen::Index>(q)));
        j["probability"] = r.probabilities(static_cast<Eigen::Index>(q));
        j["qualrccv_answer"] = in.data.answer_text(r.qualrccv_answers[q]);
        j["fold"] = r.fold_of[q];
        j["manifest"] = manifest;
        lines << j.dump() << "\n";
    }
    write_file(dir / "lcs.jsonl", lines.str());

    CsvTable folds;
    folds.header = {"fold", "train_questions", "test_questions", "train_rows", "lcs_accuracy", "qualrccv_accuracy",
                    "manifest"};
    for (const auto& f : r.folds)
        folds.rows.push_back({std::to_string(f.fold), std::to_string(f.train_questions),
                              std::to_string(f.test_questions), std::to_string(f.train_rows), num(f.lcs_accuracy),
                              num(f.qualrccv_accuracy), manifest});
    folds.rows.push_back({"all", "", std::to_string(r.answers.size()), "", num(r.accuracy), num(r.qualrccv_accuracy),
                          manifest});
    write_file(dir / "folds.csv", folds.str());

    CsvTable imp;
    imp.header = {"feature", "importance", "manifest"};
    for (std::size_t i = 0; i < r.feature_names.size(); ++i)
        imp.rows.push_back({r.feature_names[i], num(r.feature_importance(static_cast<Eigen::Index>(i))), manifest});
    write_file(dir / "feature_importance.csv", imp.str());
    for (std::size_t k = 0; k < r.models.size(); ++k)
        write_file(dir / ("model_fold" + std::to_string(k) + ".json"), r.models[k].to_text());

    ScoredOutcomes s;
    s.method = "lcs";
    s.questions = m.questions;
    s.scores.assign(r.scores.data(), r.scores.data() + r.scores.size());
    return s;
}

const std::vector<std::string>& analysis_kinds() {
    static const std::vector<std::string> kinds = {"taxonomy", "correlation", "spectrum",    "cluster", "gap",
                                                   "balanced", "scaling",     "flips", "granularity"};
    return kinds;
}

void write_analysis(const fs::path& dir, const std::string& kind, const LoadedInput& in,
                    const AnalysisOptions& opt_in, const std::string& manifest) {
    const auto& m = in.data.matrix;
    const auto& partition = in.dataset.partition;
    const auto& params = opt_in.params;

    if (kind == "taxonomy") {
        const int best = best_model(m);
        const Method base = opt_in.baseline == TaxonomyBaseline::calibrated ? Method::calibrated : Method::majority;
        const std::vector<Method> methods = {Method::majority, Method::calibrated, Method::hfv, Method::rccv,
                                             Method::qualrccv};
        std::vector<std::string> names = {"best_model"};
        std::vector<Eigen::VectorXd> scores = {m.scores.row(best).transpose()};
        Eigen::VectorXd baseline;
        for (Method meth : methods) {
            names.push_back(to_string(meth));
            scores.push_back(method_scores(in, meth, params));
            if (meth == base) baseline = scores.back();
        }
        const auto tiers = classify_taxonomy(m, best, baseline);
        const auto rep = taxonomy_report(m, tiers, names, scores);
        CsvTable t;
        t.header = {"tier", "count", "share", "method", "mean_score", "correct_rate", "baseline", "manifest"};
        const std::string base_name = to_string(base);
        for (const auto& row : rep.rows)
            for (std::size_t k = 0; k < names.size(); ++k)
                t.rows.push_back({tier_name(row.tier), std::to_string(row.count), num(row.share), names[k],
                                  num(row.mean_score[k]), num(row.correct_rate[k]), base_name, manifest});
        write_file(dir / "taxonomy.csv", t.str());
        CsvTable q;
        q.header = {"question_id", "tier"};
        for (std::size_t i = 0; i < tiers.size(); ++i) q.rows.push_back({m.questions[i], tier_name(tiers[i])});
        write_file(dir / "taxonomy_questions.csv", q.str());
        json meta;
        meta["baseline"] = base_name;
        meta["best_model"] = m.models[static_cast<std::size_t>(best)];
        meta["weights"] = to_string(params.weights);
        meta["manifest"] = manifest;
        write_file(dir / "taxonomy.json", json_text(meta));
    } else if (kind == "correlation" || kind == "spectrum" || kind == "cluster") {
        const auto cr = correlation_report(m, partition);
        if (kind == "correlation") {
            json j;
            j["within_mean"] = finite_or_null(cr.within_mean);
            j["within_sd"] = finite_or_null(cr.within_sd);
            j["cross_mean"] = finite_or_null(cr.cross_mean);
            j["cross_sd"] = finite_or_null(cr.cross_sd);
            j["gap"] = finite_or_null(cr.gap);
            j["mannwhitney_p"] = cr.mannwhitney_p;
            j["within_pairs"] = cr.within_pairs;
            j["cross_pairs"] = cr.cross_pairs;
            j["constant_models"] = cr.constant_models;
            j["manifest"] = manifest;
            write_file(dir / "correlation.json", json_text(j));
            CsvTable pairs;
            pairs.header = {"model_a", "model_b", "r", "same_family", "manifest"};
            for (Eigen::Index i = 0; i < m.model_count(); ++i)
                for (Eigen::Index k = i + 1; k < m.model_count(); ++k) {
                    const auto& a = m.models[static_cast<std::size_t>(i)];
                    const auto& b = m.models[static_cast<std::size_t>(k)];
                    pairs.rows.push_back({a, b, num(cr.corr(i, k)),
                                          partition.family_of(a) == partition.family_of(b) ? "1" : "0", manifest});
                }
            write_file(dir / "correlation_pairs.csv", pairs.str());
            CsvTable mat;
            mat.header = {"model_id"};
            for (const auto& id : m.models) mat.header.push_back(id);
            for (Eigen::Index i = 0; i < m.model_count(); ++i) {
                std::vector<std::string> row = {m.models[static_cast<std::size_t>(i)]};
                for (Eigen::Index k = 0; k < m.model_count(); ++k) row.push_back(num(cr.corr(i, k)));
                mat.rows.push_back(std::move(row));
            }
            write_file(dir / "correlation_matrix.csv", mat.str());
        } else if (kind == "spectrum") {
            const auto fam = FamilyIndex::build(partition, m.models);
            const auto sp = spectrum_report(cr.corr, &fam);
            json j;
            j["top1_share"] = sp.top1_share;
            j["top5_share"] = sp.top5_share;
            j["participation_ratio"] = sp.participation_ratio;
            j["models"] = m.model_count();
            j["manifest"] = manifest;
            write_file(dir / "spectrum.json", json_text(j));
            CsvTable e;
            e.header = {"index", "eigenvalue", "share", "cumulative_share", "manifest"};
            const double trace = sp.eigenvalues.sum();
            double cum = 0.0;
            for (Eigen::Index i = 0; i < sp.eigenvalues.size(); ++i) {
                cum += sp.eigenvalues(i);
                e.rows.push_back({std::to_string(i + 1), num(sp.eigenvalues(i)), num(sp.eigenvalues(i) / trace),
                                  num(cum / trace), manifest});
            }
            write_file(dir / "eigenvalues.csv", e.str());
            CsvTable k;
            k.header = {"family_id", "size", "within_r", "effective_size", "manifest"};
            for (const auto& f : sp.kish)
                k.rows.push_back({f.family, std::to_string(f.size), num(f.within_r), num(f.effective), manifest});
            write_file(dir / "kish.csv", k.str());
        } else {
            const auto ref = partition_labels(partition, m.models);
            auto rep = cluster_models(cr.corr, opt_in.cluster_method, opt_in.cluster_k, params.seed, &ref);
            const auto found = partition_from_labels(rep.assignment, m.models);
            rep.hfv_accuracy =
                outcome_scores(in.data, aggregate(in.data, found, Method::hfv, params)).mean();
            CsvTable t;
            t.header = {"model_id", "family_id", "cluster", "manifest"};
            for (std::size_t i = 0; i < m.models.size(); ++i)
                t.rows.push_back({m.models[i], partition.family_of(m.models[i]), std::to_string(rep.assignment[i]),
                                  manifest});
            write_file(dir / "clusters.csv", t.str());
            json j;
            j["method"] = to_string(rep.method);
            j["k"] = rep.k;
            j["ari"] = opt(rep.ari);
            j["nmi"] = opt(rep.nmi);
            j["hfv_accuracy_discovered"] = opt(rep.hfv_accuracy);
            j["hfv_accuracy_reference"] = method_scores(in, Method::hfv, params).mean();
            j["seed"] = params.seed;
            j["manifest"] = manifest;
            write_file(dir / "cluster.json", json_text(j));
        }
    } else if (kind == "gap") {
        const auto g = gap_decomposition(m, method_scores(in, opt_in.gap_method, params));
        json j;
        j["ensemble_method"] = to_string(opt_in.gap_method);
        j["best_single"] = g.best_single;
        j["ensemble"] = g.ensemble;
        j["routing"] = g.routing;
        j["oracle"] = g.oracle;
        j["voting_fraction"] = opt(g.voting_fraction);
        j["routing_fraction"] = opt(g.routing_fraction);
        j["residual_fraction"] = opt(g.residual_fraction);
        j["manifest"] = manifest;
        write_file(dir / "gap.json", json_text(j));
    } else if (kind == "balanced") {
        const auto b = balanced_ensemble(in.data, partition, params);
        json j;
        j["models"] = b.models;
        j["accuracy"] = b.accuracy;
        j["full_accuracy"] = b.full_accuracy;
        j["delta"] = b.delta;
        j["manifest"] = manifest;
        write_file(dir / "balanced.json", json_text(j));
    } else if (kind == "scaling") {
        auto ks = opt_in.scaling_k;
        if (ks.empty())
            for (int k = 3; k <= m.model_count(); ++k) ks.push_back(k);
        const auto points = scaling_curve(in.data, partition, ks, opt_in.method, params, opt_in.scaling_samples);
        CsvTable t;
        t.header = {"k", "samples", "mean_gap", "positive_share", "gap_imbalance_corr", "method", "manifest"};
        CsvTable s;
        s.header = {"k", "sample", "gap", "imbalance", "manifest"};
        for (const auto& p : points) {
            t.rows.push_back({std::to_string(p.k), std::to_string(p.samples), num(p.mean_gap), num(p.positive_share),
                              num(p.gap_imbalance_corr), to_string(opt_in.method), manifest});
            for (std::size_t i = 0; i < p.gaps.size(); ++i)
                s.rows.push_back({std::to_string(p.k), std::to_string(i), num(p.gaps[i]), num(p.imbalance[i]),
                                  manifest});
        }
        write_file(dir / "scaling.csv", t.str());
        write_file(dir / "scaling_samples.csv", s.str());
    } else if (kind == "flips") {
        const auto a = outcome_answers(aggregate(in.data, partition, opt_in.flip_a, params));
        const auto b = outcome_answers(aggregate(in.data, partition, opt_in.flip_b, params));
        const auto r = answer_flip_report(in.data, a, b);
        CsvTable t;
        t.header = {"scope",    "questions", "flips", "wrong_to_correct", "correct_to_wrong",
                    "net",      "delta",     "from",  "to",               "manifest"};
        auto add = [&](const std::string& scope, const FlipCounts& c) {
            t.rows.push_back({scope, std::to_string(c.questions), std::to_string(c.flips),
                              std::to_string(c.wrong_to_correct), std::to_string(c.correct_to_wrong),
                              std::to_string(c.net), num(c.delta), to_string(opt_in.flip_a), to_string(opt_in.flip_b),
                              manifest});
        };
        add("all", r.total);
        for (std::size_t i = 0; i < r.per_type.size(); ++i) add("type=" + r.type_names[i], r.per_type[i]);
        write_file(dir / "flips.csv", t.str());
    } else if (kind == "granularity") {
        std::vector<std::pair<std::string, FamilyPartition>> parts = {
            {"family", partition},
            {"model", FamilyPartition::singletons(m.models)},
            {"merged", FamilyPartition::merged(m.models)},
        };
        for (const auto& p : opt_in.partitions) parts.push_back(p);
        const auto g = granularity_ablation(in.data, parts, params);
        CsvTable t;
        t.header = {"partition", "families", "hfv_accuracy", "calibrated_accuracy", "delta", "manifest"};
        for (const auto& row : g.rows)
            t.rows.push_back({row.name, std::to_string(row.families), num(row.accuracy), num(g.calibrated),
                              num(row.accuracy - g.calibrated), manifest});
        write_file(dir / "granularity.csv", t.str());
    } else {
        throw UsageError("unknown analysis '" + kind + "'");
    }
}

void write_compare_report(const fs::path& dir, const std::vector<ScoredOutcomes>& outcomes,
                          const std::string& baseline, int resamples, std::uint64_t seed,
                          const std::string& manifest) {
    const auto rows = compare_methods(outcomes, baseline, resamples, seed);
    write_file(dir / "leaderboard.csv", leaderboard_table(rows, manifest).str());
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

MethodParams method_params(const json& j, std::uint64_t seed) {
    MethodParams p;
    p.seed = seed;
    if (j.contains("weights")) p.weights = parse_weight_kind(j.at("weights").get<std::string>());
    p.epsilon = get_or(j, "epsilon", p.epsilon);
    p.alpha = get_or(j, "alpha", 2.0);
    p.tau = get_or(j, "tau", p.tau);
    p.rho = get_or(j, "rho", p.rho);
    p.gamma = get_or(j, "gamma", p.gamma);
    p.folds = get_or(j, "folds", p.folds);
    return p;
}

void run_stages(const json& cfg, const fs::path& base, const fs::path& out, std::uint64_t seed,
                RunManifest& manifest) {
    const auto stages = get_or(cfg, "stages", std::vector<std::string>{});
    if (stages.empty()) throw UsageError("pipeline config declares no stages");

    std::optional<Dataset> dataset;
    if (cfg.contains("dataset")) {
        const fs::path p = base / cfg.at("dataset").get<std::string>();
        if (!fs::exists(p)) throw UsageError("dataset manifest not found: " + p.string());
        dataset = load_dataset(p);
        manifest.inputs[cfg.at("dataset").get<std::string>()] = file_digest(p);
    }
    const auto hash = manifest.hash();
    write_file(out / "manifest.json", manifest.to_json());

    std::optional<LoadedInput> input;
    std::vector<ScoredOutcomes> scored;
    const json empty = json::object();
    auto section = [&](const char* key) -> const json& { return cfg.contains(key) ? cfg.at(key) : empty; };
    auto need_input = [&](const std::string& stage) -> LoadedInput& {
        if (!input) {
            if (!dataset) throw UsageError("stage '" + stage + "' needs a dataset: add a 'synth' stage or 'dataset'");
            const auto& sc = section("score");
            ScoringOptions so;
            so.threshold = get_or(sc, "threshold", so.threshold);
            const auto variant = get_or(sc, "soft_variant", std::string("leave_one_out"));
            if (variant == "simple")
                so.soft_variant = SoftVariant::simple;
            else if (variant != "leave_one_out")
                throw UsageError("soft_variant must be 'leave_one_out' or 'simple'");
            input = prepare_input(*dataset, so);
        }
        return *input;
    };

    for (const auto& stage : stages) {
        if (stage == "synth") {
            if (dataset) throw UsageError("pipeline config has both a dataset and a synth stage");
            auto sc = parse_synth_config(section("synth").dump(), "synth section");
            if (!section("synth").contains("seed")) sc.seed = seed;
            dataset = generate(sc);
            save_dataset(out / "dataset", *dataset);
        } else if (stage == "score") {
            write_score_report(out / "score", need_input(stage), hash);
        } else if (stage == "aggregate") {
            const auto& a = section("aggregate");
            std::vector<Method> methods;
            for (const auto& name : get_or(a, "methods", std::vector<std::string>{"majority", "calibrated", "hfv"}))
                methods.push_back(parse_method(name));
            const auto params = method_params(a, seed);
            for (auto& s : write_aggregate_report(out / "aggregate", need_input(stage), methods, params,
                                                  get_or(a, "resamples", kDefaultResamples), hash))
                scored.push_back(std::move(s));
        } else if (stage == "lcs") {
            const auto& l = section("lcs");
            LcsConfig c;
            c.seed = seed;
            c.k = get_or(l, "k", c.k);
            c.folds = get_or(l, "folds", c.folds);
            c.gbdt.n_estimators = get_or(l, "n_estimators", c.gbdt.n_estimators);
            c.gbdt.max_depth = get_or(l, "max_depth", c.gbdt.max_depth);
            c.gbdt.learning_rate = get_or(l, "learning_rate", c.gbdt.learning_rate);
            c.extended_features = get_or(l, "extended_features", c.extended_features);
            if (l.contains("weights")) c.weights = parse_weight_kind(l.at("weights").get<std::string>());
            c.rho = get_or(l, "rho", c.rho);
            c.gamma = get_or(l, "gamma", c.gamma);
            scored.push_back(write_lcs_report(out / "lcs", need_input(stage), c, hash));
        } else if (stage == "analyze") {
            const auto& a = section("analyze");
            AnalysisOptions o;
            o.params = method_params(a, seed);
            const auto baseline = get_or(a, "baseline", std::string("calibrated"));
            if (baseline == "majority")
                o.baseline = TaxonomyBaseline::majority;
            else if (baseline != "calibrated")
                throw UsageError("taxonomy baseline must be 'calibrated' or 'majority'");
            o.cluster_k = get_or(a, "cluster_k", o.cluster_k);
            if (a.contains("cluster_method")) o.cluster_method = parse_cluster_method(a.at("cluster_method"));
            o.scaling_samples = get_or(a, "scaling_samples", o.scaling_samples);
            o.scaling_k = get_or(a, "scaling_k", o.scaling_k);
            if (a.contains("method")) o.method = parse_method(a.at("method"));
            for (const auto& kind : get_or(a, "reports", std::vector<std::string>{"taxonomy", "correlation", "spectrum",
                                                                                  "gap"}))
                write_analysis(out / "analysis", kind, need_input(stage), o, hash);
        } else if (stage == "compare") {
            const auto& c = section("compare");
            write_compare_report(out / "compare", scored, get_or(c, "baseline", std::string("calibrated")),
                                 get_or(c, "resamples", kDefaultResamples), seed, hash);
        } else {
            throw UsageError("unknown pipeline stage '" + stage + "'");
        }
    }
}

}  // namespace

void run_pipeline(const fs::path& config, const fs::path& out, std::uint64_t default_seed,
                  const std::vector<std::string>& command) {
    fs::create_directories(out);
    const fs::path failed = out / "FAILED";
    std::error_code ec;
    fs::remove(failed, ec);
    try {
        const auto text = read_file(config);
        json cfg;
        try {
            cfg = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ParseError(config.string(), 0, e.what());
        }
        const auto seed = get_or(cfg, "seed", default_seed);
        if (cfg.contains("threads")) set_max_threads(cfg.at("threads").get<std::size_t>());
        RunManifest manifest;
        manifest.command = command;
        manifest.config_hash = fnv1a_hex(text);
        manifest.seeds["seed"] = seed;
        manifest.timestamp = iso_timestamp();
        manifest.threads = max_threads();
        try {
            run_stages(cfg, config.parent_path(), out, seed, manifest);
        } catch (const json::exception& e) {
            throw UsageError(config.string() + ": " + e.what());
        }
    } catch (const std::exception& e) {
        write_file(failed, std::string(e.what()) + "\n");
        throw;
    }
}

}  // namespace famvote
