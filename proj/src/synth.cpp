#include "famvote/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "famvote/error.hpp"
#include "famvote/normal.hpp"
#include "famvote/parallel.hpp"
#include "famvote/random.hpp"
#include "famvote/scoring.hpp"

namespace famvote {

namespace {

using nlohmann::json;

std::uint64_t text_hash(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string member_id(const SynthFamily& f, std::size_t i) {
    return i < f.models.size() ? f.models[i] : f.id + "-" + std::to_string(i);
}

std::string question_id(int q, int n) {
    const auto width = std::to_string(std::max(n - 1, 0)).size();
    auto digits = std::to_string(q);
    return "q" + std::string(width - digits.size(), '0') + digits;
}

double mean_accuracy(const SynthConfig& c) {
    double s = 0.0;
    int n = 0;
    for (const auto& f : c.families)
        for (double p : f.accuracies) {
            s += p;
            ++n;
        }
    return n ? s / n : 0.5;
}

}  // namespace

int SynthConfig::model_count() const {
    int n = 0;
    for (const auto& f : families) n += static_cast<int>(f.accuracies.size());
    return n;
}

void SynthConfig::validate() const {
    if (families.empty()) throw UsageError("synthetic config needs at least one family");
    if (n_questions < 1) throw UsageError("n_questions must be at least 1");
    if (answer_space < 2) throw UsageError("answer_space must be at least 2");
    auto check_rho = [&](double w, const std::string& what) {
        if (!(rho_b >= 0.0 && rho_b <= w && w < 1.0))
            throw UsageError(what + ": need 0 <= rho_b <= rho_w < 1 (rho_b=" + format_double(rho_b) +
                             ", rho_w=" + format_double(w) + ")");
    };
    check_rho(rho_w, "synthetic config");
    std::set<std::string> fam_ids, model_ids;
    for (const auto& f : families) {
        if (f.id.empty()) throw UsageError("family id must be nonempty");
        if (!fam_ids.insert(f.id).second) throw UsageError("duplicate family id '" + f.id + "'");
        if (f.accuracies.empty()) throw UsageError("family '" + f.id + "' has no members");
        if (!f.models.empty() && f.models.size() != f.accuracies.size())
            throw UsageError("family '" + f.id + "' lists " + std::to_string(f.models.size()) + " model ids for " +
                             std::to_string(f.accuracies.size()) + " accuracies");
        if (f.rho_w) check_rho(*f.rho_w, "family '" + f.id + "'");
        for (std::size_t i = 0; i < f.accuracies.size(); ++i) {
            const double p = f.accuracies[i];
            if (!(p > 0.0 && p < 1.0))
                throw UsageError("family '" + f.id + "': accuracy " + format_double(p) + " outside (0, 1)");
            if (!model_ids.insert(member_id(f, i)).second)
                throw UsageError("duplicate model id '" + member_id(f, i) + "'");
        }
    }
}

SynthConfig parse_synth_config(const std::string& text, const std::string& where) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(where, 0, e.what());
    }
    try {
        SynthConfig c;
        for (const auto& f : j.at("families")) {
            SynthFamily fam;
            fam.id = f.at("id").get<std::string>();
            fam.accuracies = f.at("accuracies").get<std::vector<double>>();
            if (f.contains("models")) fam.models = f.at("models").get<std::vector<std::string>>();
            if (f.contains("rho_w")) fam.rho_w = f.at("rho_w").get<double>();
            c.families.push_back(std::move(fam));
        }
        c.rho_w = j.value("rho_w", 0.0);
        c.rho_b = j.value("rho_b", 0.0);
        c.n_questions = j.value("n_questions", 1000);
        c.answer_space = j.value("answer_space", 8);
        c.seed = j.value("seed", std::uint64_t{0});
        const auto scale = j.value("correlation_scale", std::string("latent"));
        if (scale == "latent")
            c.scale = CorrelationScale::latent;
        else if (scale == "observed")
            c.scale = CorrelationScale::observed;
        else
            throw UsageError(where + ": correlation_scale must be 'latent' or 'observed', got '" + scale + "'");
        if (j.contains("question_types")) c.question_types = j.at("question_types").get<std::vector<std::string>>();
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ParseError(where, 0, e.what());
    }
}

std::string synth_config_to_json(const SynthConfig& c) {
    json j;
    j["rho_w"] = c.rho_w;
    j["rho_b"] = c.rho_b;
    j["n_questions"] = c.n_questions;
    j["answer_space"] = c.answer_space;
    j["seed"] = c.seed;
    j["correlation_scale"] = c.scale == CorrelationScale::latent ? "latent" : "observed";
    if (!c.question_types.empty()) j["question_types"] = c.question_types;
    j["families"] = json::array();
    for (const auto& f : c.families) {
        json fj;
        fj["id"] = f.id;
        fj["accuracies"] = f.accuracies;
        if (!f.models.empty()) fj["models"] = f.models;
        if (f.rho_w) fj["rho_w"] = *f.rho_w;
        j["families"].push_back(fj);
    }
    return j.dump(2) + "\n";
}

LatentCorrelations latent_correlations(const SynthConfig& c) {
    LatentCorrelations out;
    auto conv = [&](double r) {
        return c.scale == CorrelationScale::latent ? r : latent_correlation_for(mean_accuracy(c), r);
    };
    out.rho_b = conv(c.rho_b);
    for (const auto& f : c.families) out.rho_w.push_back(std::max(conv(f.rho_w.value_or(c.rho_w)), out.rho_b));
    return out;
}

Dataset generate(const SynthConfig& config) {
    config.validate();
    const auto latent = latent_correlations(config);
    const int n = config.n_questions;
    const int a = config.answer_space;
    const auto nf = config.families.size();
    const std::vector<std::string> types = config.question_types.empty() ? std::vector<std::string>{"other"}
                                                                         : config.question_types;

    struct Member {
        std::size_t family;
        double threshold;
        double sw, se;
    };
    std::vector<Member> members;
    std::vector<std::uint64_t> family_hash;
    for (std::size_t f = 0; f < nf; ++f) {
        const auto& fam = config.families[f];
        family_hash.push_back(text_hash(fam.id));
        const double rw = latent.rho_w[f];
        for (double p : fam.accuracies)
            members.push_back({f, normal_quantile(p), std::sqrt(rw - latent.rho_b), std::sqrt(1.0 - rw)});
    }
    const double sb = std::sqrt(latent.rho_b);

    // answers[q][m] as token numbers.
    std::vector<std::vector<int>> tokens(static_cast<std::size_t>(n), std::vector<int>(members.size()));
    std::vector<int> correct(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t q) {
        Rng rng(derive_seed(config.seed, {q}));
        const double g = rng.normal();
        std::vector<double> h(nf);
        for (auto& v : h) v = rng.normal();
        const int c = static_cast<int>(derive_seed(config.seed, {q, 0x5eedULL}) % static_cast<std::uint64_t>(a));
        correct[q] = c;
        for (std::size_t m = 0; m < members.size(); ++m) {
            const auto& mem = members[m];
            const double x = sb * g + mem.sw * h[mem.family] + mem.se * rng.normal();
            if (x < mem.threshold) {
                tokens[q][m] = c;
            } else {
                const auto offset = 1 + derive_seed(config.seed, {family_hash[mem.family], q}) %
                                            static_cast<std::uint64_t>(a - 1);
                tokens[q][m] = static_cast<int>((static_cast<std::uint64_t>(c) + offset) % static_cast<std::uint64_t>(a));
            }
        }
    });

    Dataset d;
    d.labels.mode = ScoreMode::exact;
    std::map<std::string, std::string> assignment;
    std::vector<std::string> model_ids;
    for (const auto& fam : config.families)
        for (std::size_t i = 0; i < fam.accuracies.size(); ++i) {
            const auto id = member_id(fam, i);
            model_ids.push_back(id);
            assignment[id] = fam.id;
            d.predictions.push_back({id, {}});
            ModelMeta meta;
            meta.model_id = id;
            meta.family_id = fam.id;
            d.models.push_back(meta);
        }
    for (int q = 0; q < n; ++q) {
        const auto qid = question_id(q, n);
        const auto qi = static_cast<std::size_t>(q);
        LabelEntry e;
        e.gold_answer = "ans" + std::to_string(correct[qi]);
        e.question_type = types[qi % types.size()];
        d.labels.entries.emplace(qid, std::move(e));
        for (std::size_t m = 0; m < members.size(); ++m)
            d.predictions[m].entries.emplace(qid, "ans" + std::to_string(tokens[qi][m]));
    }
    d.partition = FamilyPartition::from_map(assignment, model_ids);
    return d;
}

std::vector<SweepRow> condition_sweep(const std::vector<SweepCell>& cells, int seeds, std::uint64_t seed,
                                         const MethodParams& params) {
    if (cells.empty()) throw UsageError("sweep grid is empty");
    if (seeds < 1) throw UsageError("sweep needs at least one seed");
    std::vector<SweepRow> rows;
    for (const auto& cell : cells) {
        SweepRow row;
        row.name = cell.name;
        row.seeds = seeds;
        row.rho_gap = cell.config.rho_w - cell.config.rho_b;
        std::set<std::size_t> sizes;
        for (const auto& f : cell.config.families) sizes.insert(f.accuracies.size());
        row.imbalanced = sizes.size() > 1;
        row.gaps.assign(static_cast<std::size_t>(seeds), 0.0);
        std::vector<Eigen::VectorXd> quality(static_cast<std::size_t>(seeds));

        parallel_for(static_cast<std::size_t>(seeds), [&](std::size_t s) {
            SynthConfig c = cell.config;
            c.seed = derive_seed(seed, {s});
            const auto dataset = generate(c);
            const auto data = build_eval_data(dataset.predictions, dataset.labels);
            MethodParams p = params;
            p.seed = c.seed;
            const auto ctx = VoteContext::build(data, dataset.partition, p, {});
            quality[s] = ctx.stats.internal_accuracy;
            const auto hfv = outcome_scores(data, aggregate(data, dataset.partition, Method::hfv, p)).mean();
            const auto cal = outcome_scores(data, aggregate(data, dataset.partition, Method::calibrated, p)).mean();
            row.gaps[s] = hfv - cal;
        });

        Eigen::VectorXd mean_quality = Eigen::VectorXd::Zero(quality.front().size());
        for (const auto& q : quality) mean_quality += q;
        mean_quality /= seeds;
        row.min_family_accuracy = mean_quality.minCoeff();
        row.cond_gap = row.rho_gap > 0.0;
        row.cond_quality = row.min_family_accuracy > 0.5;
        row.cond_imbalance = row.imbalanced;
        for (double g : row.gaps) {
            row.mean_gap += g;
            row.positive_share += g > 0.0 ? 1.0 : 0.0;
        }
        row.mean_gap /= seeds;
        row.positive_share /= seeds;
        row.nonpositive_share = 1.0 - row.positive_share;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<SweepCell> default_sweep_grid(int n_questions) {
    std::vector<SweepCell> cells;
    for (double gap : {0.0, 0.3})
        for (bool imbalanced : {false, true})
            for (bool weak : {false, true}) {
                SynthConfig c;
                c.rho_b = 0.4;
                c.rho_w = c.rho_b + gap;
                c.n_questions = n_questions;
                c.answer_space = 8;
                // One strong family, the rest middling.
                if (imbalanced) {
                    c.families.push_back({"big", {0.82, 0.81, 0.80, 0.79, 0.78}, {}, {}});
                    for (int i = 0; i < 7; ++i)
                        c.families.push_back({"solo" + std::to_string(i), {0.57 + 0.01 * i}, {}, {}});
                } else {
                    c.families.push_back({"fam0", {0.82, 0.78}, {}, {}});
                    for (int i = 1; i < 6; ++i)
                        c.families.push_back({"fam" + std::to_string(i), {0.62, 0.58}, {}, {}});
                }
                if (weak) {
                    const auto n = c.families.size();
                    for (auto& p : c.families[n - 1].accuracies) p = 0.49;
                    for (auto& p : c.families[n - 2].accuracies) p = 0.46;
                }
                std::string name = std::string(gap > 0 ? "gap0.3" : "gap0") +
                                   (imbalanced ? "-imbalanced" : "-balanced") + (weak ? "-weak" : "-strong");
                cells.push_back({name, c});
            }
    return cells;
}

}  // namespace famvote
