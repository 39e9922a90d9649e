#include <doctest.h>

#include <cmath>
#include <numbers>

#include "famvote/normal.hpp"
#include "famvote/random.hpp"

using namespace famvote;

TEST_CASE("normal quantile inverts the cdf") {
    for (double p : {1e-12, 1e-6, 0.01, 0.025, 0.3, 0.5, 0.77, 0.975, 0.999999}) {
        const double z = normal_quantile(p);
        CHECK(normal_cdf(z) == doctest::Approx(p).epsilon(1e-10));
    }
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
    CHECK(std::isinf(normal_quantile(0.0)));
    CHECK(std::isinf(normal_quantile(1.0)));
}

TEST_CASE("bivariate normal closed forms") {
    for (double a : {-1.5, 0.0, 0.4, 2.0})
        for (double b : {-0.7, 0.0, 1.1}) {
            CHECK(bivariate_normal_cdf(a, b, 0.0) == doctest::Approx(normal_cdf(a) * normal_cdf(b)).epsilon(1e-12));
            CHECK(bivariate_normal_cdf(a, b, 1.0) == doctest::Approx(normal_cdf(std::min(a, b))).epsilon(1e-12));
            CHECK(bivariate_normal_cdf(a, b, -1.0) ==
                  doctest::Approx(std::max(0.0, normal_cdf(a) + normal_cdf(b) - 1.0)).scale(1.0).epsilon(1e-12));
        }
    // Orthant probability: 1/4 + asin(rho) / (2 pi).
    for (double rho : {-0.95, -0.5, 0.2, 0.6, 0.99})
        CHECK(bivariate_normal_cdf(0, 0, rho) ==
              doctest::Approx(0.25 + std::asin(rho) / (2 * std::numbers::pi)).epsilon(1e-12));
}

TEST_CASE("bivariate normal agrees with Monte Carlo") {
    Rng rng(8);
    const double rho = 0.7, a = 0.3, b = -0.4;
    const int n = 200000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        const double y = rho * x + std::sqrt(1 - rho * rho) * rng.normal();
        hits += x <= a && y <= b;
    }
    CHECK(bivariate_normal_cdf(a, b, rho) == doctest::Approx(double(hits) / n).epsilon(0.01));
}

TEST_CASE("thresholded correlation and its inverse") {
    CHECK(thresholded_correlation(0.7, 0.6, 0.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(thresholded_correlation(0.7, 0.7, 1.0) == doctest::Approx(1.0).epsilon(1e-9));
    double last = -1;
    for (double rho : {-0.5, 0.0, 0.3, 0.6, 0.9}) {
        const double r = thresholded_correlation(0.7, 0.7, rho);
        CHECK(r > last);
        CHECK(std::abs(r) <= std::abs(rho) + 1e-12);
        last = r;
        if (rho > 0) CHECK(latent_correlation_for(0.7, r) == doctest::Approx(rho).epsilon(1e-6));
    }
}
