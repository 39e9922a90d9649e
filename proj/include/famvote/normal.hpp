#pragma once

namespace famvote {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile. Rational approximation refined by one Halley
/// step against erfc; absolute error below 1e-12 on (1e-300, 1 - 1e-16).
/// Returns +-infinity at 1 and 0.
double normal_quantile(double p);

/// P(X <= a, Y <= b) for a standard bivariate normal with correlation rho,
/// -1 <= rho <= 1. Genz's Gauss-Legendre scheme, about 1e-15 absolute.
double bivariate_normal_cdf(double a, double b, double rho);

/// Pearson correlation of the indicators 1[X < z_i], 1[Y < z_j] where
/// z = quantile(p) and (X, Y) has latent correlation rho.
double thresholded_correlation(double p_i, double p_j, double rho);

/// Inverse of thresholded_correlation in rho for p_i == p_j == p. Solves by
/// bisection; target is clamped to the attainable range.
double latent_correlation_for(double p, double target);

}  // namespace famvote
