#include "famvote/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "famvote/error.hpp"

namespace famvote {

namespace {

constexpr int kSpectralRestarts = 50;

void check_k(const Eigen::MatrixXd& corr, int k) {
    if (corr.rows() != corr.cols()) throw ContractViolation("correlation matrix must be square");
    if (k < 2 || k > corr.rows())
        throw UsageError("cluster count k=" + std::to_string(k) + " must be between 2 and the number of models (" +
                         std::to_string(corr.rows()) + ")");
}

double comb2(double n) { return n * (n - 1.0) / 2.0; }

struct Contingency {
    std::map<std::pair<int, int>, double> cells;
    std::map<int, double> rows, cols;
    double n = 0.0;
};

Contingency contingency(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw ContractViolation("partitions must label the same items");
    Contingency c;
    for (std::size_t i = 0; i < a.size(); ++i) {
        c.cells[{a[i], b[i]}] += 1.0;
        c.rows[a[i]] += 1.0;
        c.cols[b[i]] += 1.0;
    }
    c.n = static_cast<double>(a.size());
    return c;
}

}  // namespace

ClusterMethod parse_cluster_method(const std::string& text) {
    if (text == "spectral") return ClusterMethod::spectral;
    if (text == "ward") return ClusterMethod::ward;
    throw UsageError("unknown clustering method '" + text + "' (expected spectral or ward)");
}

std::string to_string(ClusterMethod method) { return method == ClusterMethod::spectral ? "spectral" : "ward"; }

std::vector<int> canonical_labels(const std::vector<int>& labels) {
    std::map<int, int> seen;
    std::vector<int> out;
    out.reserve(labels.size());
    for (int l : labels) {
        auto it = seen.try_emplace(l, static_cast<int>(seen.size())).first;
        out.push_back(it->second);
    }
    return out;
}

std::vector<int> spectral_clusters(const Eigen::MatrixXd& corr, int k, std::uint64_t seed) {
    check_k(corr, k);
    const Eigen::MatrixXd affinity = (corr.array() + 1.0) / 2.0;
    const Eigen::VectorXd inv_sqrt = affinity.rowwise().sum().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    const Eigen::Index n = corr.rows();
    const Eigen::MatrixXd laplacian = Eigen::MatrixXd::Identity(n, n) -
                                      inv_sqrt.asDiagonal() * affinity * inv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
    if (solver.info() != Eigen::Success) throw Error("eigen-decomposition failed");
    // Eigenvalues ascend, so the first k columns span the smallest.
    Eigen::MatrixXd embedding = solver.eigenvectors().leftCols(k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double norm = embedding.row(i).norm();
        if (norm > 0.0) embedding.row(i) /= norm;
    }
    return canonical_labels(kmeans(embedding, k, kSpectralRestarts, seed).labels);
}

std::vector<int> ward_clusters(const Eigen::MatrixXd& corr, int k) {
    check_k(corr, k);
    const auto n = static_cast<std::size_t>(corr.rows());
    Eigen::MatrixXd d = (1.0 - corr.array()).cwiseMax(0.0).matrix();
    std::vector<double> size(n, 1.0);
    std::vector<bool> active(n, true);
    std::vector<int> label(n);
    for (std::size_t i = 0; i < n; ++i) label[i] = static_cast<int>(i);

    for (std::size_t clusters = n; clusters > static_cast<std::size_t>(k); --clusters) {
        std::size_t bi = 0, bj = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j)
                if (active[j] && d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) < best) {
                    best = d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                    bi = i;
                    bj = j;
                }
        }
        // Lance-Williams update for Ward linkage; bj merges into bi.
        const auto I = static_cast<Eigen::Index>(bi), J = static_cast<Eigen::Index>(bj);
        for (std::size_t m = 0; m < n; ++m) {
            if (!active[m] || m == bi || m == bj) continue;
            const auto M = static_cast<Eigen::Index>(m);
            const double t = size[bi] + size[bj] + size[m];
            const double v = ((size[bi] + size[m]) * d(I, M) * d(I, M) + (size[bj] + size[m]) * d(J, M) * d(J, M) -
                              size[m] * best * best) /
                             t;
            d(I, M) = d(M, I) = std::sqrt(std::max(v, 0.0));
        }
        size[bi] += size[bj];
        active[bj] = false;
        for (auto& l : label)
            if (l == static_cast<int>(bj)) l = static_cast<int>(bi);
    }
    return canonical_labels(label);
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    const auto c = contingency(a, b);
    double index = 0.0, ra = 0.0, rb = 0.0;
    for (const auto& [_, v] : c.cells) index += comb2(v);
    for (const auto& [_, v] : c.rows) ra += comb2(v);
    for (const auto& [_, v] : c.cols) rb += comb2(v);
    const double total = comb2(c.n);
    if (total == 0.0) return 1.0;
    const double expected = ra * rb / total;
    const double max_index = 0.5 * (ra + rb);
    // Both partitions trivial (all singletons or one cluster) and identical.
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

double normalized_mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
    const auto c = contingency(a, b);
    if (c.n == 0.0) return 1.0;
    auto entropy = [&](const std::map<int, double>& marg) {
        double h = 0.0;
        for (const auto& [_, v] : marg) h -= v / c.n * std::log(v / c.n);
        return h;
    };
    const double ha = entropy(c.rows), hb = entropy(c.cols);
    if (ha == 0.0 && hb == 0.0) return 1.0;
    double mi = 0.0;
    for (const auto& [key, v] : c.cells)
        mi += v / c.n * std::log(v * c.n / (c.rows.at(key.first) * c.cols.at(key.second)));
    const double nmi = mi / (0.5 * (ha + hb));
    return std::clamp(nmi, 0.0, 1.0);
}

std::vector<int> partition_labels(const FamilyPartition& partition, const std::vector<std::string>& models) {
    std::map<std::string, int> index;
    for (const auto& f : partition.families()) index.emplace(f.id, static_cast<int>(index.size()));
    std::vector<int> out;
    out.reserve(models.size());
    for (const auto& m : models) out.push_back(index.at(partition.family_of(m)));
    return out;
}

FamilyPartition partition_from_labels(const std::vector<int>& labels, const std::vector<std::string>& models,
                                      const std::string& prefix) {
    if (labels.size() != models.size()) throw ContractViolation("one label per model");
    std::map<std::string, std::string> assignment;
    for (std::size_t i = 0; i < models.size(); ++i) assignment[models[i]] = prefix + std::to_string(labels[i]);
    return FamilyPartition::from_map(assignment, models);
}

ClusteringReport cluster_models(const Eigen::MatrixXd& corr, ClusterMethod method, int k, std::uint64_t seed,
                                const std::vector<int>* reference) {
    ClusteringReport r;
    r.method = method;
    r.k = k;
    r.assignment = method == ClusterMethod::spectral ? spectral_clusters(corr, k, seed) : ward_clusters(corr, k);
    if (reference) {
        r.ari = adjusted_rand_index(r.assignment, *reference);
        r.nmi = normalized_mutual_information(r.assignment, *reference);
    }
    return r;
}

}  // namespace famvote
