#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "famvote/error.hpp"
#include "famvote/parallel.hpp"
#include "famvote/pipeline.hpp"
#include "famvote/stats.hpp"
#include "famvote/synth.hpp"

using namespace famvote;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct InputArgs {
    std::string data;
    std::string labels;
    std::string mode = "soft";
    std::string families;
    std::vector<std::string> preds;  // model_id=path
    std::string soft_variant = "leave_one_out";
    double threshold = 0.5;

    void add(CLI::App* app) {
        app->add_option("--data", data, "dataset manifest (dataset.json)");
        app->add_option("--labels", labels, "labels JSONL (with --pred and --families)");
        app->add_option("--mode", mode, "label mode for --labels")->check(CLI::IsMember({"soft", "exact"}));
        app->add_option("--families", families, "family map JSON");
        app->add_option("--pred", preds, "model_id=predictions.jsonl, repeatable");
        app->add_option("--soft-variant", soft_variant)->check(CLI::IsMember({"leave_one_out", "simple"}));
        app->add_option("--threshold", threshold, "score at which a soft answer counts as correct");
    }

    LoadedInput load(RunManifest& manifest) const {
        Dataset d;
        if (!data.empty()) {
            if (!labels.empty() || !preds.empty()) throw UsageError("--data excludes --labels/--pred");
            d = load_dataset(data);
            manifest.add_input(data);
        } else {
            if (labels.empty() || families.empty() || preds.empty())
                throw UsageError("give --data, or --labels, --families and at least one --pred");
            d.labels = load_labels(labels, parse_score_mode(mode));
            manifest.add_input(labels);
            for (const auto& p : preds) {
                const auto eq = p.find('=');
                if (eq == std::string::npos || eq == 0) throw UsageError("--pred expects model_id=path, got '" + p + "'");
                const std::string path = p.substr(eq + 1);
                d.predictions.push_back(load_predictions(path, p.substr(0, eq)));
                manifest.add_input(path);
            }
            const auto ids = d.model_ids();
            d.partition = load_family_partition(families, ids);
            manifest.add_input(families);
            for (const auto& id : ids) {
                ModelMeta m;
                m.model_id = id;
                m.family_id = d.partition.family_of(id);
                d.models.push_back(std::move(m));
            }
        }
        ScoringOptions so;
        so.threshold = threshold;
        so.soft_variant = soft_variant == "simple" ? SoftVariant::simple : SoftVariant::leave_one_out;
        auto in = prepare_input(std::move(d), so);
        for (const auto& w : in.warnings) std::cerr << "warning: " << w << "\n";
        return in;
    }
};

RunManifest start_manifest(int argc, char** argv, const json& options, std::uint64_t seed) {
    RunManifest m;
    m.command.assign(argv, argv + argc);
    m.config_hash = fnv1a_hex(options.dump());
    m.seeds["seed"] = seed;
    m.timestamp = iso_timestamp();
    m.threads = max_threads();
    return m;
}

void finish_manifest(const fs::path& out, const RunManifest& m) { write_file(out / "manifest.json", m.to_json()); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"famvote: family-aware ensemble voting and diagnostics"};
    app.require_subcommand(1);
    std::size_t threads = 0;
    std::uint64_t seed = 0;
    app.add_option("--threads", threads, "worker cap (0: hardware concurrency)");
    app.add_option("--seed", seed, "global seed")->envname("FAMVOTE_SEED");

    // score
    auto* score = app.add_subcommand("score", "score predictions into an accuracy matrix");
    InputArgs score_in;
    std::string score_out;
    score_in.add(score);
    score->add_option("--out", score_out)->required();

    // aggregate
    auto* agg = app.add_subcommand("aggregate", "vote per question with one or more methods");
    InputArgs agg_in;
    std::string agg_out, weights = "overall";
    std::vector<std::string> methods{"calibrated"};
    MethodParams params;
    params.alpha = 2.0;
    int resamples = kDefaultResamples;
    agg_in.add(agg);
    agg->add_option("--out", agg_out)->required();
    agg->add_option("--method", methods, "repeatable; 'all' for every method");
    agg->add_option("--weights", weights)->check(CLI::IsMember({"overall", "per-type", "per_type"}));
    agg->add_option("--alpha", params.alpha, "hfv-sharp exponent");
    agg->add_option("--tau", params.tau, "hfv family exclusion threshold");
    agg->add_option("--rho", params.rho, "rccv size exponent");
    agg->add_option("--gamma", params.gamma, "qualrccv quality exponent");
    agg->add_option("--folds", params.folds, "hfv-auto inner folds");
    agg->add_option("--epsilon", params.epsilon, "log-odds clip");
    agg->add_option("--resamples", resamples, "bootstrap resamples for the summary");

    // lcs
    auto* lcs = app.add_subcommand("lcs", "learned candidate scoring under k-fold cross-validation");
    InputArgs lcs_in;
    std::string lcs_out, lcs_weights = "per-type";
    LcsConfig lcs_cfg;
    lcs_in.add(lcs);
    lcs->add_option("--out", lcs_out)->required();
    lcs->add_option("--k", lcs_cfg.k, "candidates per question");
    lcs->add_option("--trees", lcs_cfg.gbdt.n_estimators);
    lcs->add_option("--depth", lcs_cfg.gbdt.max_depth);
    lcs->add_option("--learning-rate", lcs_cfg.gbdt.learning_rate);
    lcs->add_option("--min-leaf", lcs_cfg.gbdt.min_samples_leaf);
    lcs->add_option("--folds", lcs_cfg.folds);
    lcs->add_option("--weights", lcs_weights)->check(CLI::IsMember({"overall", "per-type", "per_type"}));
    lcs->add_option("--rho", lcs_cfg.rho);
    lcs->add_option("--gamma", lcs_cfg.gamma);
    lcs->add_flag("--extended-features", lcs_cfg.extended_features);

    // analyze
    auto* an = app.add_subcommand("analyze", "diagnostic reports");
    InputArgs an_in;
    std::string an_out, kind, an_weights = "overall", baseline = "calibrated", cluster_method = "spectral";
    std::string an_method = "hfv", gap_method = "calibrated", flip_a = "calibrated", flip_b = "hfv";
    std::vector<std::string> extra_partitions;  // name=families.json
    AnalysisOptions aopt;
    aopt.params.alpha = 2.0;
    an_in.add(an);
    an->add_option("kind", kind)->required()->check(CLI::IsMember(analysis_kinds()));
    an->add_option("--out", an_out)->required();
    an->add_option("--weights", an_weights)->check(CLI::IsMember({"overall", "per-type", "per_type"}));
    an->add_option("--baseline", baseline, "taxonomy baseline")->check(CLI::IsMember({"calibrated", "majority"}));
    an->add_option("--method", an_method, "method for scaling");
    an->add_option("--gap-method", gap_method, "ensemble for the gap decomposition");
    an->add_option("--cluster-method", cluster_method)->check(CLI::IsMember({"spectral", "ward"}));
    an->add_option("--k", aopt.cluster_k, "cluster count");
    an->add_option("--samples", aopt.scaling_samples, "scaling subsets per k");
    an->add_option("--scaling-k", aopt.scaling_k, "ensemble sizes (default 3..M)");
    an->add_option("--flip-a", flip_a);
    an->add_option("--flip-b", flip_b);
    an->add_option("--partition", extra_partitions, "name=families.json, extra granularity partition");
    an->add_option("--alpha", aopt.params.alpha);
    an->add_option("--tau", aopt.params.tau);
    an->add_option("--rho", aopt.params.rho);
    an->add_option("--gamma", aopt.params.gamma);

    // synth
    auto* syn = app.add_subcommand("synth", "generate a correlated-voter dataset");
    std::string syn_config, syn_out;
    syn->add_option("--config", syn_config)->required()->check(CLI::ExistingFile);
    syn->add_option("--out", syn_out)->required();

    // compare
    auto* cmp = app.add_subcommand("compare", "leaderboard with bootstrap intervals");
    std::vector<std::string> outcome_files;
    std::string cmp_out, cmp_baseline = "calibrated";
    int cmp_resamples = kDefaultResamples;
    cmp->add_option("outcomes", outcome_files, "[method=]outcomes.jsonl")->required();
    cmp->add_option("--baseline", cmp_baseline);
    cmp->add_option("--resamples", cmp_resamples);
    cmp->add_option("--out", cmp_out)->required();

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "run the stages of a config file");
    std::string pipe_config, pipe_out;
    pipe->add_option("config", pipe_config)->required();
    pipe->add_option("--out", pipe_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        set_max_threads(threads);
        if (score->parsed()) {
            json o = {{"cmd", "score"}, {"threshold", score_in.threshold}, {"soft_variant", score_in.soft_variant}};
            auto m = start_manifest(argc, argv, o, seed);
            const auto in = score_in.load(m);
            write_score_report(score_out, in, m.hash());
            finish_manifest(score_out, m);
        } else if (agg->parsed()) {
            std::vector<Method> ms;
            for (const auto& name : methods) {
                if (name == "all")
                    ms.insert(ms.end(), all_methods().begin(), all_methods().end());
                else
                    ms.push_back(parse_method(name));
            }
            params.weights = parse_weight_kind(weights);
            params.seed = seed;
            json o = {{"cmd", "aggregate"}, {"methods", methods}, {"weights", weights}, {"alpha", params.alpha},
                      {"tau", params.tau},  {"rho", params.rho},   {"gamma", params.gamma},
                      {"folds", params.folds}, {"epsilon", params.epsilon}, {"resamples", resamples},
                      {"threshold", agg_in.threshold}};
            auto m = start_manifest(argc, argv, o, seed);
            const auto in = agg_in.load(m);
            write_aggregate_report(agg_out, in, ms, params, resamples, m.hash());
            finish_manifest(agg_out, m);
        } else if (lcs->parsed()) {
            lcs_cfg.seed = seed;
            lcs_cfg.weights = parse_weight_kind(lcs_weights);
            json o = {{"cmd", "lcs"},
                      {"k", lcs_cfg.k},
                      {"trees", lcs_cfg.gbdt.n_estimators},
                      {"depth", lcs_cfg.gbdt.max_depth},
                      {"learning_rate", lcs_cfg.gbdt.learning_rate},
                      {"min_leaf", lcs_cfg.gbdt.min_samples_leaf},
                      {"folds", lcs_cfg.folds},
                      {"weights", lcs_weights},
                      {"rho", lcs_cfg.rho},
                      {"gamma", lcs_cfg.gamma},
                      {"extended", lcs_cfg.extended_features}};
            auto m = start_manifest(argc, argv, o, seed);
            const auto in = lcs_in.load(m);
            write_lcs_report(lcs_out, in, lcs_cfg, m.hash());
            finish_manifest(lcs_out, m);
        } else if (an->parsed()) {
            aopt.params.weights = parse_weight_kind(an_weights);
            aopt.params.seed = seed;
            aopt.baseline = baseline == "majority" ? TaxonomyBaseline::majority : TaxonomyBaseline::calibrated;
            aopt.cluster_method = parse_cluster_method(cluster_method);
            aopt.method = parse_method(an_method);
            aopt.gap_method = parse_method(gap_method);
            aopt.flip_a = parse_method(flip_a);
            aopt.flip_b = parse_method(flip_b);
            json o = {{"cmd", "analyze"}, {"kind", kind}, {"weights", an_weights}, {"baseline", baseline},
                      {"method", an_method}, {"gap_method", gap_method}, {"cluster_method", cluster_method},
                      {"k", aopt.cluster_k}, {"samples", aopt.scaling_samples}, {"scaling_k", aopt.scaling_k},
                      {"flip_a", flip_a}, {"flip_b", flip_b}, {"alpha", aopt.params.alpha},
                      {"tau", aopt.params.tau}, {"rho", aopt.params.rho}, {"gamma", aopt.params.gamma}};
            auto m = start_manifest(argc, argv, o, seed);
            const auto in = an_in.load(m);
            for (const auto& p : extra_partitions) {
                const auto eq = p.find('=');
                if (eq == std::string::npos || eq == 0)
                    throw UsageError("--partition expects name=families.json, got '" + p + "'");
                const std::string path = p.substr(eq + 1);
                aopt.partitions.emplace_back(p.substr(0, eq), load_family_partition(path, in.data.matrix.models));
                m.add_input(path);
            }
            write_analysis(an_out, kind, in, aopt, m.hash());
            finish_manifest(an_out, m);
        } else if (syn->parsed()) {
            const auto text = read_file(syn_config);
            auto cfg = parse_synth_config(text, syn_config);
            if (!json::parse(text).contains("seed")) cfg.seed = seed;
            save_dataset(syn_out, generate(cfg));
            json o = {{"cmd", "synth"}, {"config", json::parse(synth_config_to_json(cfg))}};
            auto m = start_manifest(argc, argv, o, cfg.seed);
            m.add_input(syn_config);
            finish_manifest(syn_out, m);
        } else if (cmp->parsed()) {
            json o = {{"cmd", "compare"}, {"baseline", cmp_baseline}, {"resamples", cmp_resamples}};
            auto m = start_manifest(argc, argv, o, seed);
            std::vector<ScoredOutcomes> outcomes;
            for (const auto& f : outcome_files) {
                const auto eq = f.find('=');
                const std::string path = eq == std::string::npos ? f : f.substr(eq + 1);
                const std::string name = eq == std::string::npos ? fs::path(path).stem().string() : f.substr(0, eq);
                outcomes.push_back(load_scored_outcomes(path, name));
                m.add_input(path);
            }
            write_compare_report(cmp_out, outcomes, cmp_baseline, cmp_resamples, seed, m.hash());
            finish_manifest(cmp_out, m);
        } else if (pipe->parsed()) {
            if (!fs::exists(pipe_config)) throw UsageError("pipeline config not found: " + pipe_config);
            run_pipeline(pipe_config, pipe_out, seed, std::vector<std::string>(argv, argv + argc));
        }
    } catch (const UsageError& e) {
        std::cerr << "famvote: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "famvote: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
