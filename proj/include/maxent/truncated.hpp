#pragma once

// Closed forms for one coordinate of a canonical distribution on an interval:
// densities proportional to exp(a*x) (truncated exponential) and exp(a*x + b*x^2)
// with b < 0 (truncated Gaussian). Everything is evaluated in log space so that
// standardized bounds in the thousands stay finite.

namespace maxent {

/// log(1 - exp(x)) for x < 0.
double log1mexp(double x);

/// log(exp(a) + exp(b)).
double log_add_exp(double a, double b);

/// log of the standard normal density.
double log_normal_pdf(double z);

/// log Q(z), Q the standard normal upper tail probability.
double log_normal_sf(double z);

/// log(Phi(hi) - Phi(lo)) for lo < hi.
double log_normal_interval(double lo, double hi);

/// Inverse of log_normal_sf: the z with log Q(z) = log_q. Requires log_q < 0.
double inverse_log_normal_sf(double log_q);

/// Mean of the density proportional to exp(-theta*y) on [0, hi].
/// Falls back to a series for theta*hi < 1e-3 (exactly hi/2 below 1e-8).
double truncated_exp_mean(double theta, double hi);

/// Second moment E[y^2] for the same density.
double truncated_exp_second_moment(double theta, double hi);

/// log of the integral of exp(a*x) over [lo, hi].
double log_integral_exp_linear(double a, double lo, double hi);

/// log of the integral of exp(-(x - mu)^2 / (2 sigma^2)) over [lo, hi].
double log_integral_gaussian(double mu, double sigma, double lo, double hi);

/// Normalizer and first two raw moments of one coordinate.
struct CoordinateMoments {
  /// log of the integral of exp(a x + b x^2) over [lo, hi]
  double log_integral = 0.0;
  double mean = 0.0;
  double second_moment = 0.0;
};

/// Closed-form moments for exp(a*x) on [lo, hi].
CoordinateMoments exponential_coordinate(double a, double lo, double hi);

/// Closed-form moments for exp(a*x + b*x^2) on [lo, hi], b < 0.
CoordinateMoments gaussian_coordinate(double a, double b, double lo, double hi);

/// Inverse CDF of exp(a*x) restricted to [lo, hi] at u in (0, 1).
double truncated_exp_quantile(double a, double lo, double hi, double u);

/// Inverse CDF of N(mu, sigma^2) restricted to [lo, hi] at u in (0, 1).
/// Tails beyond |z| > 6 go through the complementary error function in log space.
double truncated_normal_quantile(double mu, double sigma, double lo, double hi, double u);

}  // namespace maxent
