#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace famvote {

struct GbdtConfig {
    int n_estimators = 200;
    int max_depth = 5;
    double learning_rate = 0.1;
    int min_samples_leaf = 1;
};

/// Binary regression tree stored as a node array; node 0 is the root.
/// Internal nodes send x[feature] <= threshold to `left`.
struct RegressionTree {
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
        bool operator==(const Node&) const = default;
    };
    std::vector<Node> nodes;

    template <typename Row>
    double predict(const Row& x) const {
        int i = 0;
        while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
            const auto& n = nodes[static_cast<std::size_t>(i)];
            i = x[n.feature] <= n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<std::size_t>(i)].value;
    }
    int depth() const;
    bool operator==(const RegressionTree&) const = default;
};

/// Gradient-boosted trees for logistic loss:
/// P(y = 1 | x) = sigmoid(base_score + learning_rate * sum_t tree_t(x)).
struct GbdtModel {
    double base_score = 0.0;
    double learning_rate = 0.1;
    int max_depth = 0;
    std::vector<RegressionTree> trees;
    std::vector<std::string> feature_names;
    Eigen::VectorXd feature_importance;  // normalized total split gain, sums to 1

    double raw_score(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    double predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    Eigen::VectorXd predict_proba_rows(const Eigen::MatrixXd& X) const;

    /// JSON document: {"format": "famvote-gbdt", "version": 1, "base_score",
    /// "learning_rate", "max_depth", "feature_names", "feature_importance",
    /// "trees": [[{"feature", "threshold", "left", "right"} | {"leaf"}...]...]}.
    std::string to_text() const;
    static GbdtModel from_text(const std::string& text);
};

double sigmoid(double z);

/// Mean logistic loss of `model` on (X, y).
double logistic_loss(const GbdtModel& model, const Eigen::MatrixXd& X, std::span<const int> y);

/// Fits a model by gradient boosting. Each round fits a depth-bounded tree to
/// the residuals y - p by exact greedy least-squares splits over presorted
/// feature values, then sets each leaf to the Newton step sum(r) / sum(p(1-p)).
/// Throws UsageError if y holds a single class. `on_round`, when set, is
/// called after every round with the round index and training loss.
GbdtModel train_gbdt(const Eigen::MatrixXd& X, std::span<const int> y, const GbdtConfig& config,
                     std::vector<std::string> feature_names = {},
                     const std::function<void(int, double)>& on_round = {});

}  // namespace famvote
