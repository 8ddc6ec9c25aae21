#include "maxent/truncated.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "maxent/error.hpp"

namespace maxent {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrtTwoPi = 0.91893853320467274178;  // log(sqrt(2*pi))

// Beyond this point erfc(z/sqrt(2)) comes close to underflow and the
// asymptotic expansion is accurate to ~1e-13.
constexpr double kAsymptoticTail = 35.0;

double series_mean(double u) {
  const double u2 = u * u;
  return 0.5 - u / 12.0 + u * u2 / 720.0 - u * u2 * u2 / 30240.0;
}

double series_second_moment(double u) {
  const double u2 = u * u;
  return 1.0 / 3.0 - u / 12.0 + u2 / 360.0 + u * u2 / 720.0 - u2 * u2 / 15120.0 -
         u * u2 * u2 / 30240.0;
}

}  // namespace

double log1mexp(double x) {
  if (x > -std::numbers::ln2) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_normal_pdf(double z) { return -0.5 * z * z - kLogSqrtTwoPi; }

double log_normal_sf(double z) {
  if (z < kAsymptoticTail) {
    return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
  }
  const double r = 1.0 / (z * z);
  const double series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
  return -0.5 * z * z - std::log(z) - kLogSqrtTwoPi + std::log(series);
}

double log_normal_interval(double lo, double hi) {
  if (!(lo < hi)) return -kInf;
  if (hi <= 0.0) return log_normal_interval(-hi, -lo);
  if (lo >= 0.0) {
    const double lq_lo = log_normal_sf(lo);
    const double lq_hi = log_normal_sf(hi);
    return lq_lo + log1mexp(lq_hi - lq_lo);
  }
  // lo < 0 < hi: both tails are below one half.
  return std::log1p(-(std::exp(log_normal_sf(hi)) + std::exp(log_normal_sf(-lo))));
}

double inverse_log_normal_sf(double log_q) {
  if (!(log_q < 0.0)) throw InvalidArgument("inverse_log_normal_sf: log_q must be negative");
  double z = 0.0;
  if (log_q > -700.0) {
    z = std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * std::exp(log_q));
  } else {
    const double t = -2.0 * log_q;
    z = std::sqrt(t - std::log(t * 2.0 * std::numbers::pi));
  }
  // Newton polish on log Q: d/dz log Q(z) = -pdf(z)/Q(z).
  for (int iter = 0; iter < 8; ++iter) {
    const double lq = log_normal_sf(z);
    const double step = (lq - log_q) * std::exp(lq - log_normal_pdf(z));
    z += step;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
  }
  return z;
}

double truncated_exp_mean(double theta, double hi) {
  const double u = theta * hi;
  if (u < 1e-8) return 0.5 * hi;
  if (u < 1e-3) return hi * series_mean(u);
  return 1.0 / theta - hi / std::expm1(u);
}

double truncated_exp_second_moment(double theta, double hi) {
  const double u = theta * hi;
  if (u < 1e-3) return hi * hi * series_second_moment(u);
  return 2.0 / (theta * theta) - (hi * hi + 2.0 * hi / theta) / std::expm1(u);
}

double log_integral_exp_linear(double a, double lo, double hi) {
  const double w = hi - lo;
  if (a == 0.0) return std::log(w);
  const double s = std::abs(a);
  const double top = a > 0.0 ? hi : lo;
  return a * top + std::log(-std::expm1(-s * w)) - std::log(s);
}

double log_integral_gaussian(double mu, double sigma, double lo, double hi) {
  return std::log(sigma) + kLogSqrtTwoPi +
         log_normal_interval((lo - mu) / sigma, (hi - mu) / sigma);
}

CoordinateMoments exponential_coordinate(double a, double lo, double hi) {
  const double w = hi - lo;
  CoordinateMoments out;
  out.log_integral = log_integral_exp_linear(a, lo, hi);
  const double theta = std::abs(a);
  const double ey = truncated_exp_mean(theta, w);
  const double ey2 = truncated_exp_second_moment(theta, w);
  if (a <= 0.0) {
    out.mean = lo + ey;
    out.second_moment = lo * lo + 2.0 * lo * ey + ey2;
  } else {
    out.mean = hi - ey;
    out.second_moment = hi * hi - 2.0 * hi * ey + ey2;
  }
  return out;
}

CoordinateMoments gaussian_coordinate(double a, double b, double lo, double hi) {
  if (!(b < 0.0)) throw InvalidArgument("gaussian_coordinate: quadratic coefficient must be negative");
  const double var = -0.5 / b;
  const double sigma = std::sqrt(var);
  const double mu = a * var;
  const double alpha = (lo - mu) / sigma;
  const double beta = (hi - mu) / sigma;
  const double lz = log_normal_interval(alpha, beta);
  const double r_alpha = std::exp(log_normal_pdf(alpha) - lz);
  const double r_beta = std::exp(log_normal_pdf(beta) - lz);
  const double ez = r_alpha - r_beta;
  const double ez2 = 1.0 + alpha * r_alpha - beta * r_beta;

  CoordinateMoments out;
  out.log_integral = 0.5 * a * mu + std::log(sigma) + kLogSqrtTwoPi + lz;
  out.mean = mu + sigma * ez;
  out.second_moment = var * ez2 + 2.0 * mu * sigma * ez + mu * mu;
  return out;
}

double truncated_exp_quantile(double a, double lo, double hi, double u) {
  const double w = hi - lo;
  const double theta = std::abs(a);
  if (theta * w < 1e-12) return lo + u * w;
  const double v = a < 0.0 ? u : 1.0 - u;
  const double y = -std::log1p(v * std::expm1(-theta * w)) / theta;
  const double x = a < 0.0 ? lo + y : hi - y;
  return std::clamp(x, lo, hi);
}

double truncated_normal_quantile(double mu, double sigma, double lo, double hi, double u) {
  const double alpha = (lo - mu) / sigma;
  const double beta = (hi - mu) / sigma;
  const double lz = log_normal_interval(alpha, beta);
  // Lower-tail probability p = Phi(alpha) + u Z and upper-tail q = Q(beta) + (1-u) Z,
  // both kept in log space; invert through whichever is below one half.
  const double log_p = log_add_exp(log_normal_sf(-alpha), std::log(u) + lz);
  double z = 0.0;
  if (log_p < -std::numbers::ln2) {
    z = -inverse_log_normal_sf(log_p);
  } else {
    const double log_q = log_add_exp(log_normal_sf(beta), std::log1p(-u) + lz);
    z = inverse_log_normal_sf(std::min(log_q, -1e-300));
  }
  return std::clamp(mu + sigma * z, lo, hi);
}

}  // namespace maxent
