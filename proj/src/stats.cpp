#include "famvote/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "famvote/error.hpp"
#include "famvote/parallel.hpp"
#include "famvote/random.hpp"

namespace famvote {

double sorted_quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw UsageError("quantile of empty data");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BootstrapResult bootstrap_ci(std::span<const double> scores, int resamples, std::uint64_t seed, double level) {
    if (scores.empty()) throw UsageError("bootstrap of an empty score vector");
    if (resamples < 1) throw UsageError("bootstrap needs at least one resample");
    const std::size_t n = scores.size();
    BootstrapResult out;
    out.resamples = resamples;
    out.seed = seed;
    out.point = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(n);

    std::vector<double> means(static_cast<std::size_t>(resamples));
    parallel_for(means.size(), [&](std::size_t r) {
        Rng rng(derive_seed(seed, {r}));
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += scores[rng.below(n)];
        means[r] = s / static_cast<double>(n);
    });
    std::sort(means.begin(), means.end());
    const double tail = (1.0 - level) / 2.0;
    out.ci_low = sorted_quantile(means, tail);
    out.ci_high = sorted_quantile(means, 1.0 - tail);
    return out;
}

double paired_bootstrap_p(std::span<const double> method, std::span<const double> baseline, int resamples,
                          std::uint64_t seed) {
    if (method.size() != baseline.size())
        throw UsageError("paired bootstrap needs equal-length score vectors (" + std::to_string(method.size()) +
                         " vs " + std::to_string(baseline.size()) + ")");
    if (method.empty()) throw UsageError("paired bootstrap of empty score vectors");
    if (resamples < 1) throw UsageError("bootstrap needs at least one resample");
    const std::size_t n = method.size();
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = method[i] - baseline[i];

    std::vector<double> outcome(static_cast<std::size_t>(resamples));
    parallel_for(outcome.size(), [&](std::size_t r) {
        Rng rng(derive_seed(seed, {r}));
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += diff[rng.below(n)];
        outcome[r] = s < 0.0 ? 1.0 : (s == 0.0 ? 0.5 : 0.0);
    });
    return std::accumulate(outcome.begin(), outcome.end(), 0.0) / static_cast<double>(resamples);
}

namespace {

// Number of arrangements of na + nb distinct values with each U in [0, na*nb].
std::vector<double> exact_u_counts(int na, int nb) {
    // f[j][u] for the current i, rolling over i.
    const int umax = na * nb;
    std::vector<std::vector<double>> prev(static_cast<std::size_t>(nb + 1), std::vector<double>(static_cast<std::size_t>(umax + 1), 0.0));
    for (int j = 0; j <= nb; ++j) prev[static_cast<std::size_t>(j)][0] = 1.0;  // i = 0
    for (int i = 1; i <= na; ++i) {
        std::vector<std::vector<double>> cur(prev.size(), std::vector<double>(static_cast<std::size_t>(umax + 1), 0.0));
        cur[0][0] = 1.0;  // j = 0
        for (int j = 1; j <= nb; ++j)
            for (int u = 0; u <= umax; ++u) {
                // Largest value belongs to group a (adds j to U) or to group b.
                double v = cur[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(u)];
                if (u >= j) v += prev[static_cast<std::size_t>(j)][static_cast<std::size_t>(u - j)];
                cur[static_cast<std::size_t>(j)][static_cast<std::size_t>(u)] = v;
            }
        prev = std::move(cur);
    }
    return prev[static_cast<std::size_t>(nb)];
}

}  // namespace

MannWhitneyResult mann_whitney(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw UsageError("Mann-Whitney needs two nonempty groups");
    const std::size_t na = a.size(), nb = b.size(), n = na + nb;
    std::vector<std::pair<double, int>> all;
    all.reserve(n);
    for (double v : a) all.emplace_back(v, 0);
    for (double v : b) all.emplace_back(v, 1);
    std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

    double rank_sum_a = 0.0, tie_term = 0.0;
    bool ties = false;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && all[j].first == all[i].first) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        const double t = static_cast<double>(j - i);
        if (t > 1) ties = true;
        tie_term += t * t * t - t;
        for (std::size_t k = i; k < j; ++k)
            if (all[k].second == 0) rank_sum_a += avg_rank;
        i = j;
    }

    MannWhitneyResult r;
    const double nn = static_cast<double>(na) * static_cast<double>(nb);
    r.u_a = rank_sum_a - static_cast<double>(na) * (static_cast<double>(na) + 1.0) / 2.0;
    r.u_b = nn - r.u_a;

    if (!ties && na <= 20 && nb <= 20) {
        const auto counts = exact_u_counts(static_cast<int>(na), static_cast<int>(nb));
        const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        const auto u = static_cast<std::size_t>(std::llround(r.u_a));
        double le = 0.0, ge = 0.0;
        for (std::size_t k = 0; k < counts.size(); ++k) {
            if (k <= u) le += counts[k];
            if (k >= u) ge += counts[k];
        }
        r.p = std::min(1.0, 2.0 * std::min(le, ge) / total);
        r.exact = true;
        return r;
    }

    const double mu = nn / 2.0;
    const double nd = static_cast<double>(n);
    const double var = nn / 12.0 * ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
    if (var <= 0.0) {
        r.p = 1.0;
        return r;
    }
    const double z = std::max(std::abs(r.u_a - mu) - 0.5, 0.0) / std::sqrt(var);
    r.p = std::min(1.0, std::erfc(z / std::numbers::sqrt2));
    return r;
}

double mann_whitney_p(std::span<const double> a, std::span<const double> b) { return mann_whitney(a, b).p; }

}  // namespace famvote
