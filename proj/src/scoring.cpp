#include "famvote/scoring.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "famvote/error.hpp"
#include "famvote/parallel.hpp"

namespace famvote {

using nlohmann::json;

namespace {

bool is_ascii_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }
bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }

constexpr std::array<std::string_view, 11> kNumberWords = {"zero", "one", "two", "three", "four", "five",
                                                           "six",  "seven", "eight", "nine", "ten"};

bool is_article(std::string_view w) { return w == "a" || w == "an" || w == "the"; }

}  // namespace

std::string normalize_answer(std::string_view raw) {
    std::string text;
    text.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto c = static_cast<unsigned char>(raw[i]);
        if (c == '\'') continue;  // contractions: "don't" -> "dont"
        if (is_ascii_punct(c)) {
            const bool between_digits = i > 0 && i + 1 < raw.size() &&
                                        is_ascii_digit(static_cast<unsigned char>(raw[i - 1])) &&
                                        is_ascii_digit(static_cast<unsigned char>(raw[i + 1]));
            text.push_back(between_digits ? static_cast<char>(c) : ' ');
        } else if (c < 0x80) {
            text.push_back(static_cast<char>(std::tolower(c)));
        } else {
            text.push_back(static_cast<char>(c));
        }
    }

    std::vector<std::string> words;
    std::istringstream ss(text);
    for (std::string w; ss >> w;) words.push_back(std::move(w));

    std::size_t first = 0;
    while (first + 1 < words.size() && is_article(words[first])) ++first;

    std::string out;
    for (std::size_t i = first; i < words.size(); ++i) {
        if (!out.empty()) out.push_back(' ');
        auto it = std::find(kNumberWords.begin(), kNumberWords.end(), words[i]);
        if (it != kNumberWords.end())
            out += std::to_string(it - kNumberWords.begin());
        else
            out += words[i];
    }
    return out;
}

double soft_accuracy_from_matches(int matches, SoftVariant variant) {
    const int n = static_cast<int>(kAnnotatorCount);
    if (matches < 0 || matches > n) throw ContractViolation("match count out of range");
    if (variant == SoftVariant::simple) return std::min(matches / 3.0, 1.0);
    // Average over the ten subsets that leave one annotator out.
    double total = 0.0;
    for (int left_out = 0; left_out < n; ++left_out) {
        const int remaining = left_out < matches ? matches - 1 : matches;
        total += std::min(remaining / 3.0, 1.0);
    }
    return total / n;
}

double soft_accuracy(std::string_view pred, std::span<const std::string> annotator_answers, SoftVariant variant) {
    if (annotator_answers.size() != kAnnotatorCount)
        throw ContractViolation("soft accuracy needs exactly 10 annotator answers, got " +
                                std::to_string(annotator_answers.size()));
    const std::string p = normalize_answer(pred);
    int matches = 0;
    for (const auto& a : annotator_answers) matches += normalize_answer(a) == p;
    return soft_accuracy_from_matches(matches, variant);
}

double exact_accuracy(std::string_view pred, std::string_view gold) {
    return normalize_answer(pred) == normalize_answer(gold) ? 1.0 : 0.0;
}

// ---------------------------------------------------------------------------

BoolMatrix AccuracyMatrix::correctness() const {
    if (mode == ScoreMode::exact) return (scores.array() >= 1.0).matrix();
    return (scores.array() >= threshold).matrix();
}

Eigen::VectorXd AccuracyMatrix::model_accuracy(std::span<const int> qs) const {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(model_count());
    if (qs.empty()) {
        if (question_count() == 0) return acc;
        for (Eigen::Index q = 0; q < question_count(); ++q) acc += scores.col(q);
        return acc / static_cast<double>(question_count());
    }
    for (int q : qs) acc += scores.col(q);
    return acc / static_cast<double>(qs.size());
}

Eigen::MatrixXd AccuracyMatrix::model_type_accuracy(std::span<const int> qs) const {
    const int types = type_count();
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(model_count(), types);
    std::vector<int> counts(static_cast<std::size_t>(types), 0);
    auto add = [&](int q) {
        const int t = question_type[static_cast<std::size_t>(q)];
        sums.col(t) += scores.col(q);
        ++counts[static_cast<std::size_t>(t)];
    };
    if (qs.empty())
        for (int q = 0; q < question_count(); ++q) add(q);
    else
        for (int q : qs) add(q);
    const Eigen::VectorXd overall = model_accuracy(qs);
    for (int t = 0; t < types; ++t) {
        const int c = counts[static_cast<std::size_t>(t)];
        sums.col(t) = c ? Eigen::VectorXd(sums.col(t) / c) : overall;
    }
    return sums;
}

int AccuracyMatrix::model_index(const std::string& model_id) const {
    auto it = std::find(models.begin(), models.end(), model_id);
    if (it == models.end()) throw UsageError("unknown model '" + model_id + "'");
    return static_cast<int>(it - models.begin());
}

double EvalData::answer_score(int question, int answer) const {
    for (Eigen::Index m = 0; m < answers.ids.rows(); ++m)
        if (answers.ids(m, question) == answer) return matrix.scores(m, question);
    throw ContractViolation("answer '" + answer_text(answer) + "' was not given by any model");
}

std::vector<int> EvalData::all_questions() const {
    std::vector<int> qs(static_cast<std::size_t>(matrix.question_count()));
    for (std::size_t i = 0; i < qs.size(); ++i) qs[i] = static_cast<int>(i);
    return qs;
}

// ---------------------------------------------------------------------------

namespace {

struct Normalized {
    std::vector<std::string> questions;
    std::vector<std::vector<std::string>> answers;  // [model][question]
};

Normalized normalize_predictions(std::span<const PredictionSet> predictions, const LabelSet& labels) {
    Normalized out;
    for (const auto& [qid, e] : labels.entries) out.questions.push_back(qid);
    if (predictions.empty()) throw ValidationError("no prediction sets supplied");
    out.answers.resize(predictions.size());
    for (std::size_t m = 0; m < predictions.size(); ++m) {
        const auto& p = predictions[m];
        auto& row = out.answers[m];
        row.resize(out.questions.size());
        for (std::size_t q = 0; q < out.questions.size(); ++q) {
            auto it = p.entries.find(out.questions[q]);
            if (it == p.entries.end())
                throw ValidationError("model '" + p.model_id + "' has no prediction for question '" +
                                      out.questions[q] + "'");
        }
        parallel_for(out.questions.size(),
                     [&](std::size_t q) { row[q] = normalize_answer(p.entries.at(out.questions[q])); });
    }
    return out;
}

AccuracyMatrix score_normalized(const Normalized& norm, std::span<const PredictionSet> predictions,
                                const LabelSet& labels, const ScoringOptions& options) {
    AccuracyMatrix mat;
    mat.mode = labels.mode;
    mat.threshold = options.threshold;
    mat.questions = norm.questions;
    for (const auto& p : predictions) mat.models.push_back(p.model_id);
    {
        std::set<std::string> seen;
        for (const auto& m : mat.models)
            if (!seen.insert(m).second) throw ValidationError("duplicate model_id '" + m + "'");
    }

    std::set<std::string> types;
    for (const auto& [qid, e] : labels.entries) types.insert(e.question_type);
    mat.type_names.assign(types.begin(), types.end());

    const std::size_t n = norm.questions.size(), m_count = predictions.size();
    mat.scores.resize(static_cast<Eigen::Index>(m_count), static_cast<Eigen::Index>(n));
    mat.question_type.resize(n);
    parallel_for(n, [&](std::size_t q) {
        const auto& e = labels.entries.at(norm.questions[q]);
        mat.question_type[q] = static_cast<int>(
            std::lower_bound(mat.type_names.begin(), mat.type_names.end(), e.question_type) -
            mat.type_names.begin());
        if (labels.mode == ScoreMode::soft) {
            if (e.annotator_answers.size() != kAnnotatorCount)
                throw ContractViolation("question '" + norm.questions[q] + "' lacks 10 annotator answers");
            std::vector<std::string> gold;
            for (const auto& a : e.annotator_answers) gold.push_back(normalize_answer(a));
            for (std::size_t m = 0; m < m_count; ++m) {
                const auto& ans = norm.answers[m][q];
                const int matches = static_cast<int>(std::count(gold.begin(), gold.end(), ans));
                mat.scores(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(q)) =
                    soft_accuracy_from_matches(matches, options.soft_variant);
            }
        } else {
            const std::string gold = normalize_answer(e.gold_answer);
            for (std::size_t m = 0; m < m_count; ++m)
                mat.scores(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(q)) =
                    norm.answers[m][q] == gold ? 1.0 : 0.0;
        }
    });
    return mat;
}

}  // namespace

AccuracyMatrix build_accuracy_matrix(std::span<const PredictionSet> predictions, const LabelSet& labels,
                                     const ScoringOptions& options) {
    const auto norm = normalize_predictions(predictions, labels);
    return score_normalized(norm, predictions, labels, options);
}

EvalData build_eval_data(std::span<const PredictionSet> predictions, const LabelSet& labels,
                         const ScoringOptions& options) {
    const auto norm = normalize_predictions(predictions, labels);
    EvalData data;
    data.matrix = score_normalized(norm, predictions, labels, options);

    std::set<std::string> vocab;
    for (const auto& row : norm.answers) vocab.insert(row.begin(), row.end());
    data.answers.vocab.assign(vocab.begin(), vocab.end());
    const auto& v = data.answers.vocab;
    data.answers.ids.resize(data.matrix.scores.rows(), data.matrix.scores.cols());
    for (std::size_t m = 0; m < norm.answers.size(); ++m)
        for (std::size_t q = 0; q < norm.questions.size(); ++q)
            data.answers.ids(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(q)) =
                static_cast<int>(std::lower_bound(v.begin(), v.end(), norm.answers[m][q]) - v.begin());
    return data;
}

std::vector<std::string> reconcile_model_meta(std::vector<ModelMeta>& models, const AccuracyMatrix& matrix) {
    std::vector<std::string> warnings;
    const Eigen::VectorXd overall = matrix.model_accuracy();
    const Eigen::MatrixXd per_type = matrix.model_type_accuracy();
    for (auto& meta : models) {
        const int m = matrix.model_index(meta.model_id);
        const double acc = overall(m);
        if (meta.overall_accuracy && std::abs(*meta.overall_accuracy - acc) > 1e-12)
            warnings.push_back("model '" + meta.model_id + "': cached overall accuracy " +
                               format_double(*meta.overall_accuracy) + " != recomputed " + format_double(acc));
        meta.overall_accuracy = acc;
        std::map<std::string, double> recomputed;
        for (int t = 0; t < matrix.type_count(); ++t)
            recomputed[matrix.type_names[static_cast<std::size_t>(t)]] = per_type(m, t);
        for (const auto& [type, cached] : meta.per_type_accuracy) {
            auto it = recomputed.find(type);
            if (it == recomputed.end() || std::abs(it->second - cached) > 1e-12)
                warnings.push_back("model '" + meta.model_id + "': cached accuracy for type '" + type +
                                   "' does not match recomputation");
        }
        meta.per_type_accuracy = std::move(recomputed);
    }
    return warnings;
}

// ---------------------------------------------------------------------------

std::string format_double(double value) {
    if (value == 0.0) return "0";  // folds -0
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(std::move(cur));
    return cells;
}

}  // namespace

void save_accuracy_matrix(const std::filesystem::path& csv, const std::filesystem::path& sidecar,
                          const AccuracyMatrix& matrix) {
    for (const auto& id : matrix.questions)
        if (id.find(',') != std::string::npos) throw UsageError("question id '" + id + "' contains a comma");
    std::ostringstream out;
    out << "model_id";
    for (const auto& q : matrix.questions) out << ',' << q;
    out << '\n';
    for (Eigen::Index m = 0; m < matrix.model_count(); ++m) {
        out << matrix.models[static_cast<std::size_t>(m)];
        for (Eigen::Index q = 0; q < matrix.question_count(); ++q) out << ',' << format_double(matrix.scores(m, q));
        out << '\n';
    }
    write_file(csv, out.str());

    std::vector<std::string> types;
    for (int t : matrix.question_type) types.push_back(matrix.type_names[static_cast<std::size_t>(t)]);
    json meta{{"mode", to_string(matrix.mode)},
              {"threshold", matrix.threshold},
              {"models", matrix.models},
              {"question_types", types}};
    write_file(sidecar, meta.dump(2) + "\n");
}

AccuracyMatrix load_accuracy_matrix(const std::filesystem::path& csv, const std::filesystem::path& sidecar) {
    AccuracyMatrix mat;
    const json meta = json::parse(read_file(sidecar));
    mat.mode = parse_score_mode(meta.at("mode").get<std::string>());
    mat.threshold = meta.at("threshold").get<double>();
    const auto types = meta.at("question_types").get<std::vector<std::string>>();

    std::istringstream in(read_file(csv));
    std::string line;
    if (!std::getline(in, line)) throw ParseError(csv.string(), 1, "empty matrix file");
    auto header = split_csv(line);
    if (header.empty() || header[0] != "model_id") throw ParseError(csv.string(), 1, "header must start with model_id");
    mat.questions.assign(header.begin() + 1, header.end());
    if (types.size() != mat.questions.size())
        throw ValidationError("sidecar lists " + std::to_string(types.size()) + " question types for " +
                              std::to_string(mat.questions.size()) + " columns");

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != header.size()) throw ParseError(csv.string(), lineno, "wrong number of cells");
        mat.models.push_back(cells[0]);
        std::vector<double> row;
        for (std::size_t i = 1; i < cells.size(); ++i) {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), v);
            if (ec != std::errc{} || ptr != cells[i].data() + cells[i].size() || v < 0.0 || v > 1.0)
                throw ParseError(csv.string(), lineno, "bad score '" + cells[i] + "'");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    mat.scores.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(mat.questions.size()));
    for (std::size_t m = 0; m < rows.size(); ++m)
        for (std::size_t q = 0; q < rows[m].size(); ++q)
            mat.scores(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(q)) = rows[m][q];

    std::set<std::string> distinct(types.begin(), types.end());
    mat.type_names.assign(distinct.begin(), distinct.end());
    for (const auto& t : types)
        mat.question_type.push_back(static_cast<int>(
            std::lower_bound(mat.type_names.begin(), mat.type_names.end(), t) - mat.type_names.begin()));
    return mat;
}

}  // namespace famvote
