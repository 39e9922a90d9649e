#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "famvote/dataset_io.hpp"
#include "famvote/random.hpp"

namespace famvote {

enum class ClusterMethod { spectral, ward };

ClusterMethod parse_cluster_method(const std::string& text);
std::string to_string(ClusterMethod method);

struct KMeansResult {
    std::vector<int> labels;
    Eigen::MatrixXd centers;
    double inertia = 0.0;
};

/// k-means++ seeding plus Lloyd iterations, best inertia over `restarts`.
/// Restart r seeds from derive_seed(seed, {r}).
template <typename Derived>
KMeansResult kmeans(const Eigen::MatrixBase<Derived>& points, int k, int restarts, std::uint64_t seed) {
    const Eigen::MatrixXd X = points.template cast<double>();
    const Eigen::Index n = X.rows();
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
        Eigen::MatrixXd centers(k, X.cols());
        centers.row(0) = X.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
        Eigen::VectorXd d2 = (X.rowwise() - centers.row(0)).rowwise().squaredNorm();
        for (int c = 1; c < k; ++c) {
            const double total = d2.sum();
            Eigen::Index pick = 0;
            if (total > 0.0) {
                double u = rng.uniform() * total;
                pick = n - 1;
                for (Eigen::Index i = 0; i < n; ++i) {
                    u -= d2(i);
                    if (u < 0.0 && d2(i) > 0.0) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
            }
            centers.row(c) = X.row(pick);
            d2 = d2.cwiseMin((X.rowwise() - centers.row(c)).rowwise().squaredNorm());
        }

        std::vector<int> labels(static_cast<std::size_t>(n), -1);
        double inertia = 0.0;
        for (int iter = 0; iter < 300; ++iter) {
            bool changed = false;
            inertia = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::Index c;
                inertia += (centers.rowwise() - X.row(i)).rowwise().squaredNorm().minCoeff(&c);
                if (labels[static_cast<std::size_t>(i)] != static_cast<int>(c)) {
                    labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
                    changed = true;
                }
            }
            if (!changed) break;
            Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, X.cols());
            Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
            for (Eigen::Index i = 0; i < n; ++i) {
                sums.row(labels[static_cast<std::size_t>(i)]) += X.row(i);
                counts(labels[static_cast<std::size_t>(i)]) += 1.0;
            }
            for (int c = 0; c < k; ++c)
                if (counts(c) > 0.0) centers.row(c) = sums.row(c) / counts(c);
        }
        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.labels = labels;
            best.centers = centers;
        }
    }
    return best;
}

/// Labels 0..k-1 in order of first appearance, so equivalent clusterings of
/// the same items compare equal.
std::vector<int> canonical_labels(const std::vector<int>& labels);

/// Spectral clustering of a correlation matrix: affinity (corr + 1) / 2,
/// symmetric normalized Laplacian, its k smallest eigenvectors with rows
/// normalized, then k-means with 50 seeded restarts.
std::vector<int> spectral_clusters(const Eigen::MatrixXd& corr, int k, std::uint64_t seed = 0);

/// Agglomerative clustering with Ward linkage on distance 1 - corr, cut at k
/// clusters.
std::vector<int> ward_clusters(const Eigen::MatrixXd& corr, int k);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);
/// Mutual information over the arithmetic mean of the two entropies; 1 when
/// both partitions have a single cluster.
double normalized_mutual_information(const std::vector<int>& a, const std::vector<int>& b);

/// Cluster labels of `models` under `partition`, numbered in family order.
std::vector<int> partition_labels(const FamilyPartition& partition, const std::vector<std::string>& models);
FamilyPartition partition_from_labels(const std::vector<int>& labels, const std::vector<std::string>& models,
                                      const std::string& prefix = "cluster");

struct ClusteringReport {
    ClusterMethod method = ClusterMethod::spectral;
    int k = 0;
    std::vector<int> assignment;  // per model
    std::optional<double> ari;    // against the reference partition, when given
    std::optional<double> nmi;
    std::optional<double> hfv_accuracy;
};

/// Throws UsageError unless 2 <= k <= M.
ClusteringReport cluster_models(const Eigen::MatrixXd& corr, ClusterMethod method, int k, std::uint64_t seed = 0,
                                const std::vector<int>* reference = nullptr);

}  // namespace famvote
