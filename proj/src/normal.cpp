#include "famvote/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

#include "famvote/random.hpp"

namespace famvote {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();

    // Acklam's rational approximation (relative error ~1e-9).
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Halley refinement.
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

double Rng::normal() { return normal_quantile(uniform_open()); }

namespace {

// Gauss-Legendre nodes on [-1, 1] (positive half) and weights, 6/12/20 points.
constexpr double kW6[] = {0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
constexpr double kX6[] = {0.9324695142031522, 0.6612093864662647, 0.2386191860831970};
constexpr double kW12[] = {0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                           0.2031674267230659,  0.2334925365383547, 0.2491470458134029};
constexpr double kX12[] = {0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
                           0.5873179542866171, 0.3678314989981802, 0.1252334085114692};
constexpr double kW20[] = {0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475,
                           0.1019301198172404,  0.1181945319615184,  0.1316886384491766,  0.1420961093183821,
                           0.1491729864726037,  0.1527533871307259};
constexpr double kX20[] = {0.9931285991850949, 0.9639719272779138, 0.9122344282513259, 0.8391169718222188,
                           0.7463319064601508, 0.6360536807265150, 0.5108670019508271, 0.3737060887154196,
                           0.2277858511416451, 0.07652652113349733};

// P(X > h, Y > k), after Genz (2004).
double bvn_upper(double h, double k, double r) {
    constexpr double tp = 2.0 * std::numbers::pi;
    std::span<const double> w, x;
    if (std::abs(r) < 0.3) {
        w = kW6;
        x = kX6;
    } else if (std::abs(r) < 0.75) {
        w = kW12;
        x = kX12;
    } else {
        w = kW20;
        x = kX20;
    }
    double hk = h * k;
    double bvn = 0.0;
    if (std::abs(r) < 0.925) {
        const double hs = (h * h + k * k) / 2.0;
        const double asr = std::asin(r) / 2.0;
        for (std::size_t i = 0; i < w.size(); ++i)
            for (double sign : {-1.0, 1.0}) {
                const double sn = std::sin(asr * (1.0 + sign * x[i]));
                bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            }
        return bvn * asr / tp + normal_cdf(-h) * normal_cdf(-k);
    }
    if (r < 0.0) {
        k = -k;
        hk = -hk;
    }
    if (std::abs(r) < 1.0) {
        const double as = 1.0 - r * r;
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 80.0;
        double asr = -(bs / as + hk) / 2.0;
        if (asr > -100.0) bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
        if (hk > -100.0) {
            const double b = std::sqrt(bs);
            const double sp = std::sqrt(tp) * normal_cdf(-b / a);
            bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
        }
        a /= 2.0;
        double sum = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i)
            for (double sign : {-1.0, 1.0}) {
                const double xs = std::pow(a * (1.0 + sign * x[i]), 2);
                asr = -(bs / xs + hk) / 2.0;
                if (asr <= -100.0) continue;
                const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                const double rs = std::sqrt(1.0 - xs);
                const double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
                sum += w[i] * std::exp(asr) * (sp - ep);
            }
        bvn = (a * sum - bvn) / tp;
    }
    if (r > 0.0) return bvn + normal_cdf(-std::max(h, k));
    if (h >= k) return -bvn;
    const double l = h < 0.0 ? normal_cdf(k) - normal_cdf(h) : normal_cdf(-h) - normal_cdf(-k);
    return l - bvn;
}

}  // namespace

double bivariate_normal_cdf(double a, double b, double rho) {
    if (a == -INFINITY || b == -INFINITY) return 0.0;
    if (a == INFINITY) return b == INFINITY ? 1.0 : normal_cdf(b);
    if (b == INFINITY) return normal_cdf(a);
    if (rho == 0.0) return normal_cdf(a) * normal_cdf(b);
    return std::clamp(bvn_upper(-a, -b, std::clamp(rho, -1.0, 1.0)), 0.0, 1.0);
}

double thresholded_correlation(double p_i, double p_j, double rho) {
    const double both = bivariate_normal_cdf(normal_quantile(p_i), normal_quantile(p_j), rho);
    return (both - p_i * p_j) / std::sqrt(p_i * (1.0 - p_i) * p_j * (1.0 - p_j));
}

double latent_correlation_for(double p, double target) {
    if (target <= 0.0) return 0.0;
    double lo = 0.0, hi = 1.0 - 1e-12;
    if (target >= thresholded_correlation(p, p, hi)) return hi;
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        const double mid = 0.5 * (lo + hi);
        (thresholded_correlation(p, p, mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace famvote
