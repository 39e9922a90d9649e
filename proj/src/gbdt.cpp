#include "famvote/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "famvote/error.hpp"

namespace famvote {

using nlohmann::json;

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

int RegressionTree::depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, d[i]);
        if (nodes[i].feature >= 0) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return best;
}

double GbdtModel::raw_score(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(x);
    return base_score + learning_rate * s;
}

double GbdtModel::predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return sigmoid(raw_score(x));
}

Eigen::VectorXd GbdtModel::predict_proba_rows(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd p(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) p(i) = predict_proba(X.row(i));
    return p;
}

double logistic_loss(const GbdtModel& model, const Eigen::MatrixXd& X, std::span<const int> y) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double z = model.raw_score(X.row(i));
        // log(1 + e^z) - y z, stable for large |z|
        const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        total += softplus - y[static_cast<std::size_t>(i)] * z;
    }
    return X.rows() ? total / static_cast<double>(X.rows()) : 0.0;
}

namespace {

struct Split {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

// Per-node accumulator for the scan over one feature.
struct Scan {
    int n_left = 0;
    double sum_left = 0.0;
    double last = 0.0;
    bool seen = false;
};

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& X, const std::vector<std::vector<int>>& sorted, const GbdtConfig& config)
        : X_(X), sorted_(sorted), config_(config) {}

    /// Fits one tree to `residual`; writes each row's leaf into `leaf_of`.
    RegressionTree fit(const Eigen::VectorXd& residual, const Eigen::VectorXd& hessian, std::vector<int>& leaf_of,
                       Eigen::VectorXd& importance) {
        const auto n = static_cast<std::size_t>(X_.rows());
        RegressionTree tree;
        tree.nodes.emplace_back();
        std::vector<int>& node_of = leaf_of;
        node_of.assign(n, 0);
        std::vector<int> frontier{0};

        for (int depth = 0; depth < config_.max_depth && !frontier.empty(); ++depth) {
            // Node totals.
            std::vector<int> slot(tree.nodes.size(), -1);
            for (std::size_t i = 0; i < frontier.size(); ++i) slot[static_cast<std::size_t>(frontier[i])] = static_cast<int>(i);
            std::vector<int> count(frontier.size(), 0);
            std::vector<double> sum(frontier.size(), 0.0);
            for (std::size_t r = 0; r < n; ++r) {
                const int s = slot[static_cast<std::size_t>(node_of[r])];
                if (s < 0) continue;
                ++count[static_cast<std::size_t>(s)];
                sum[static_cast<std::size_t>(s)] += residual(static_cast<Eigen::Index>(r));
            }

            std::vector<Split> best(frontier.size());
            for (Eigen::Index f = 0; f < X_.cols(); ++f) {
                std::vector<Scan> scan(frontier.size());
                for (int r : sorted_[static_cast<std::size_t>(f)]) {
                    const int s = slot[static_cast<std::size_t>(node_of[static_cast<std::size_t>(r)])];
                    if (s < 0) continue;
                    auto& sc = scan[static_cast<std::size_t>(s)];
                    const double v = X_(r, f);
                    if (sc.seen && v > sc.last) {
                        const int nl = sc.n_left, nr = count[static_cast<std::size_t>(s)] - nl;
                        if (nl >= config_.min_samples_leaf && nr >= config_.min_samples_leaf) {
                            const double total = sum[static_cast<std::size_t>(s)];
                            const double sr = total - sc.sum_left;
                            const double gain = sc.sum_left * sc.sum_left / nl + sr * sr / nr -
                                                total * total / count[static_cast<std::size_t>(s)];
                            auto& b = best[static_cast<std::size_t>(s)];
                            if (gain > b.gain) {
                                double thr = sc.last + 0.5 * (v - sc.last);
                                if (!(thr < v)) thr = sc.last;
                                b = {gain, static_cast<int>(f), thr};
                            }
                        }
                    }
                    sc.seen = true;
                    sc.last = v;
                    ++sc.n_left;
                    sc.sum_left += residual(r);
                }
            }

            std::vector<int> next;
            for (std::size_t i = 0; i < frontier.size(); ++i) {
                const auto& b = best[i];
                if (b.feature < 0 || !(b.gain > 1e-12)) continue;
                const int id = frontier[i];
                const int left = static_cast<int>(tree.nodes.size());
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();
                auto& node = tree.nodes[static_cast<std::size_t>(id)];
                node.feature = b.feature;
                node.threshold = b.threshold;
                node.left = left;
                node.right = left + 1;
                importance(b.feature) += b.gain;
                next.push_back(left);
                next.push_back(left + 1);
            }
            if (next.empty()) break;
            for (std::size_t r = 0; r < n; ++r) {
                const auto& node = tree.nodes[static_cast<std::size_t>(node_of[r])];
                if (node.feature < 0) continue;
                node_of[r] = X_(static_cast<Eigen::Index>(r), node.feature) <= node.threshold ? node.left : node.right;
            }
            frontier = std::move(next);
        }

        // Newton leaf values.
        std::vector<double> num(tree.nodes.size(), 0.0), den(tree.nodes.size(), 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            num[static_cast<std::size_t>(node_of[r])] += residual(static_cast<Eigen::Index>(r));
            den[static_cast<std::size_t>(node_of[r])] += hessian(static_cast<Eigen::Index>(r));
        }
        for (std::size_t i = 0; i < tree.nodes.size(); ++i)
            if (tree.nodes[i].feature < 0) tree.nodes[i].value = den[i] > 1e-150 ? num[i] / den[i] : 0.0;
        return tree;
    }

private:
    const Eigen::MatrixXd& X_;
    const std::vector<std::vector<int>>& sorted_;
    const GbdtConfig& config_;
};

}  // namespace

GbdtModel train_gbdt(const Eigen::MatrixXd& X, std::span<const int> y, const GbdtConfig& config,
                     std::vector<std::string> feature_names, const std::function<void(int, double)>& on_round) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) throw UsageError("feature rows and labels differ in length");
    if (config.n_estimators < 0 || config.max_depth < 1 || !(config.learning_rate > 0.0))
        throw UsageError("invalid GBDT configuration");
    const auto positives = std::count(y.begin(), y.end(), 1);
    if (positives == 0 || positives == static_cast<std::ptrdiff_t>(y.size()))
        throw UsageError("GBDT training data must contain both classes");
    for (int v : y)
        if (v != 0 && v != 1) throw UsageError("GBDT labels must be 0 or 1");

    const auto n = X.rows();
    GbdtModel model;
    model.learning_rate = config.learning_rate;
    model.max_depth = config.max_depth;
    model.feature_names = std::move(feature_names);
    const double prior = static_cast<double>(positives) / static_cast<double>(n);
    model.base_score = std::log(prior / (1.0 - prior));

    std::vector<std::vector<int>> sorted(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
        auto& idx = sorted[static_cast<std::size_t>(f)];
        idx.resize(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return X(a, f) < X(b, f); });
    }

    Eigen::VectorXd raw = Eigen::VectorXd::Constant(n, model.base_score);
    Eigen::VectorXd residual(n), hessian(n);
    Eigen::VectorXd importance = Eigen::VectorXd::Zero(X.cols());
    std::vector<int> leaf_of;
    TreeBuilder builder(X, sorted, config);

    for (int round = 0; round < config.n_estimators; ++round) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double p = sigmoid(raw(i));
            residual(i) = y[static_cast<std::size_t>(i)] - p;
            hessian(i) = p * (1.0 - p);
        }
        auto tree = builder.fit(residual, hessian, leaf_of, importance);
        for (Eigen::Index i = 0; i < n; ++i)
            raw(i) += config.learning_rate * tree.nodes[static_cast<std::size_t>(leaf_of[static_cast<std::size_t>(i)])].value;
        model.trees.push_back(std::move(tree));
        if (on_round) {
            double loss = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double z = raw(i);
                loss += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) -
                        y[static_cast<std::size_t>(i)] * z;
            }
            on_round(round, loss / static_cast<double>(n));
        }
    }

    const double total = importance.sum();
    model.feature_importance = total > 0 ? Eigen::VectorXd(importance / total)
                                         : Eigen::VectorXd::Constant(X.cols(), 1.0 / static_cast<double>(X.cols()));
    return model;
}

std::string GbdtModel::to_text() const {
    json trees_json = json::array();
    for (const auto& t : trees) {
        json nodes = json::array();
        for (const auto& nd : t.nodes) {
            if (nd.feature < 0)
                nodes.push_back({{"leaf", nd.value}});
            else
                nodes.push_back({{"feature", nd.feature}, {"threshold", nd.threshold}, {"left", nd.left}, {"right", nd.right}});
        }
        trees_json.push_back(std::move(nodes));
    }
    json j{{"format", "famvote-gbdt"},
           {"version", 1},
           {"base_score", base_score},
           {"learning_rate", learning_rate},
           {"max_depth", max_depth},
           {"feature_names", feature_names},
           {"feature_importance", std::vector<double>(feature_importance.data(),
                                                      feature_importance.data() + feature_importance.size())},
           {"trees", trees_json}};
    return j.dump(1) + "\n";
}

GbdtModel GbdtModel::from_text(const std::string& text) {
    const json j = json::parse(text);
    if (j.value("format", "") != "famvote-gbdt") throw ParseError("gbdt model", 0, "not a famvote-gbdt document");
    GbdtModel m;
    m.base_score = j.at("base_score").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.max_depth = j.at("max_depth").get<int>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto imp = j.at("feature_importance").get<std::vector<double>>();
    m.feature_importance = Eigen::Map<const Eigen::VectorXd>(imp.data(), static_cast<Eigen::Index>(imp.size()));
    for (const auto& tj : j.at("trees")) {
        RegressionTree t;
        for (const auto& nj : tj) {
            RegressionTree::Node nd;
            if (nj.contains("leaf")) {
                nd.value = nj["leaf"].get<double>();
            } else {
                nd.feature = nj.at("feature").get<int>();
                nd.threshold = nj.at("threshold").get<double>();
                nd.left = nj.at("left").get<int>();
                nd.right = nj.at("right").get<int>();
            }
            t.nodes.push_back(nd);
        }
        m.trees.push_back(std::move(t));
    }
    return m;
}

}  // namespace famvote
