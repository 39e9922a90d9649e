#pragma once

#include <cstdint>
#include <span>

namespace famvote {

inline constexpr int kDefaultResamples = 2000;

struct BootstrapResult {
    double point = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int resamples = kDefaultResamples;
    std::uint64_t seed = 0;
};

/// Percentile bootstrap interval of the mean. Resample r draws its indices
/// from derive_seed(seed, {r}), so results do not depend on thread count.
/// Throws UsageError on empty input.
BootstrapResult bootstrap_ci(std::span<const double> scores, int resamples = kDefaultResamples,
                             std::uint64_t seed = 0, double level = 0.95);

/// One-sided paired bootstrap p-value for "method a beats baseline b": the
/// fraction of resamples in which mean(b) > mean(a), ties counted as 0.5.
double paired_bootstrap_p(std::span<const double> method, std::span<const double> baseline,
                          int resamples = kDefaultResamples, std::uint64_t seed = 0);

struct MannWhitneyResult {
    double u_a = 0.0;
    double u_b = 0.0;
    double p = 1.0;  // two-sided
    bool exact = false;
};

/// Mann-Whitney U test. Without ties and with both groups of size <= 20 the
/// p-value comes from the exact null distribution of U; otherwise from the
/// normal approximation with tie and continuity corrections.
MannWhitneyResult mann_whitney(std::span<const double> a, std::span<const double> b);
double mann_whitney_p(std::span<const double> a, std::span<const double> b);

/// Linear-interpolation quantile of sorted data (numpy's default rule).
double sorted_quantile(std::span<const double> sorted, double q);

}  // namespace famvote
