#pragma once

#include <string>
#include <vector>

#include "famvote/dataset_io.hpp"
#include "famvote/random.hpp"
#include "famvote/scoring.hpp"

namespace famvote::testing {

inline std::string qid(int q) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "q%04d", q);
    return buf;
}

// Exact-mode dataset from hand-set answers: answers[m][q].
inline Dataset exact_dataset(const std::vector<std::string>& models, const std::vector<std::string>& families,
                             const std::vector<std::vector<std::string>>& answers, const std::vector<std::string>& gold,
                             const std::vector<std::string>& types = {}) {
    Dataset d;
    d.labels.mode = ScoreMode::exact;
    for (std::size_t q = 0; q < gold.size(); ++q) {
        LabelEntry e;
        e.gold_answer = gold[q];
        e.question_type = types.empty() ? "other" : types[q];
        d.labels.entries[qid(static_cast<int>(q))] = e;
    }
    std::map<std::string, std::string> fam;
    for (std::size_t m = 0; m < models.size(); ++m) {
        PredictionSet p;
        p.model_id = models[m];
        for (std::size_t q = 0; q < gold.size(); ++q) p.entries[qid(static_cast<int>(q))] = answers[m][q];
        d.predictions.push_back(p);
        ModelMeta meta;
        meta.model_id = models[m];
        meta.family_id = families[m];
        d.models.push_back(meta);
        fam[models[m]] = families[m];
    }
    d.partition = FamilyPartition::from_map(fam, models);
    return d;
}

// Noisy voters over a small answer vocabulary, so ties and split votes are
// common. Family members copy a shared answer with probability `copy`.
inline Dataset random_dataset(std::uint64_t seed, int models, int questions, int vocab = 4, int families = 3,
                              double copy = 0.5, int types = 2) {
    Rng rng(seed);
    std::vector<std::string> ids, fams;
    std::vector<double> acc;
    for (int m = 0; m < models; ++m) {
        ids.push_back("m" + std::to_string(m));
        fams.push_back("f" + std::to_string(m < families ? m : static_cast<int>(rng.below(families))));
        acc.push_back(0.3 + 0.6 * rng.uniform());
    }
    std::vector<std::string> gold, qtypes;
    std::vector<std::vector<std::string>> answers(static_cast<std::size_t>(models));
    for (int q = 0; q < questions; ++q) {
        const int g = static_cast<int>(rng.below(vocab));
        gold.push_back("a" + std::to_string(g));
        qtypes.push_back("t" + std::to_string(q % types));
        std::map<std::string, std::string> shared;
        for (int m = 0; m < models; ++m) {
            const auto& f = fams[static_cast<std::size_t>(m)];
            std::string a;
            if (shared.count(f) && rng.uniform() < copy)
                a = shared[f];
            else
                a = rng.uniform() < acc[static_cast<std::size_t>(m)] ? gold.back()
                                                                      : "a" + std::to_string(rng.below(vocab));
            shared.emplace(f, a);
            answers[static_cast<std::size_t>(m)].push_back(a);
        }
    }
    return exact_dataset(ids, fams, answers, gold, qtypes);
}

inline EvalData eval_of(const Dataset& d) { return build_eval_data(d.predictions, d.labels); }

}  // namespace famvote::testing
