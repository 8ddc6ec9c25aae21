#include <cmath>
#include <numbers>

#include "doctest.h"
#include "maxent/truncated.hpp"
#include "oracles.hpp"

using namespace maxent;
using doctest::Approx;

TEST_CASE("truncated_exp_mean matches quadrature") {
  const double oracle = test::quadrature_truncated_exp_mean(0.2, 100.0);
  CHECK(truncated_exp_mean(0.2, 100.0) == Approx(oracle).epsilon(1e-10));
  CHECK(std::abs(truncated_exp_mean(0.2, 100.0) - 5.0) < 1e-6);
  // correction term 100/(e^20 - 1)
  CHECK(5.0 - truncated_exp_mean(0.2, 100.0) == Approx(100.0 / std::expm1(20.0)).epsilon(1e-6));
}

TEST_CASE("truncated_exp_mean limits") {
  CHECK(truncated_exp_mean(1e-12, 100.0) == 50.0);
  CHECK(truncated_exp_mean(1e-9, 100.0) == Approx(100.0 * (0.5 - 1e-7 / 12.0)).epsilon(1e-14));
  CHECK(truncated_exp_mean(1.0, 1e6) == Approx(1.0).epsilon(1e-14));
  // series and closed form agree across the switch at theta*hi = 1e-3
  const double below = truncated_exp_mean(0.99999999e-5, 100.0);
  const double above = truncated_exp_mean(1.00000001e-5, 100.0);
  CHECK(std::abs(below - above) < 1e-9);
  CHECK(truncated_exp_mean(5e-6, 100.0) ==
        Approx(test::quadrature_truncated_exp_mean(5e-6, 100.0)).epsilon(1e-12));
}

TEST_CASE("truncated_exp_second_moment matches quadrature") {
  for (double theta : {1e-6, 5e-4, 0.03, 0.2, 3.0}) {
    const auto q = test::quadrature_moments(-theta, 0.0, 0.0, 100.0, 0.0);
    CHECK(truncated_exp_second_moment(theta, 100.0) == Approx(q.second_moment).epsilon(1e-9));
  }
}

TEST_CASE("log_normal_sf across the asymptotic switch") {
  CHECK(log_normal_sf(0.0) == Approx(std::log(0.5)));
  const double below = log_normal_sf(34.999999);
  const double above = log_normal_sf(35.000001);
  CHECK(std::abs(below - above) < 1e-4);  // derivative is about -35
  CHECK(std::isfinite(log_normal_sf(3e4)));
  CHECK(log_normal_sf(3e4) == Approx(-0.5 * 9e8 - std::log(3e4) - 0.5 * std::log(2 * std::numbers::pi)));
  CHECK(log_normal_sf(-40.0) == Approx(0.0));
}

TEST_CASE("inverse_log_normal_sf round trips in both regimes") {
  for (double z : {-5.0, -0.3, 0.0, 1.0, 6.5, 20.0, 40.0, 500.0, 2e4}) {
    CHECK(inverse_log_normal_sf(log_normal_sf(z)) == Approx(z).epsilon(1e-10));
  }
}

TEST_CASE("log_normal_interval") {
  CHECK(log_normal_interval(-1e9, 1e9) == Approx(0.0));
  CHECK(std::exp(log_normal_interval(-1.0, 1.0)) == Approx(std::erf(1.0 / std::numbers::sqrt2)));
  // far tail interval stays finite
  const double v = log_normal_interval(100.0, 100.001);
  CHECK(std::isfinite(v));
  CHECK(v == Approx(log_normal_sf(100.0) + std::log(-std::expm1(-100.0 * 0.001 - 0.5e-6))).epsilon(1e-6));
  CHECK(log_normal_interval(-3.0, -2.0) == Approx(log_normal_interval(2.0, 3.0)));
  CHECK(log_normal_interval(1.0, 1.0) == -INFINITY);
}

TEST_CASE("exponential_coordinate against quadrature") {
  for (double a : {-0.2, -1e-7, 0.0, 0.05}) {
    const auto m = exponential_coordinate(a, -30.0, 70.0);
    const double peak = a > 0 ? a * 70.0 : a * -30.0;
    const auto q = test::quadrature_moments(a, 0.0, -30.0, 70.0, peak);
    CHECK(m.log_integral == Approx(q.log_integral).epsilon(1e-11));
    CHECK(m.mean == Approx(q.mean).epsilon(1e-10));
    CHECK(m.second_moment == Approx(q.second_moment).epsilon(1e-10));
  }
}

TEST_CASE("gaussian_coordinate against quadrature") {
  struct Case {
    double a, b, lo, hi;
  };
  for (const Case c : {Case{0.0, -0.5, -100.0, 100.0}, Case{2.0, -0.5, -100.0, 100.0},
                       Case{3.0, -0.1, 0.0, 10.0}, Case{-40.0, -2.0, -5.0, 1.0}}) {
    const auto m = gaussian_coordinate(c.a, c.b, c.lo, c.hi);
    const double vertex = std::clamp(-c.a / (2 * c.b), c.lo, c.hi);
    const double peak = c.a * vertex + c.b * vertex * vertex;
    const auto q = test::quadrature_moments(c.a, c.b, c.lo, c.hi, peak);
    CHECK(m.log_integral == Approx(q.log_integral).epsilon(1e-10));
    CHECK(m.mean == Approx(q.mean).epsilon(1e-9).scale(1.0));
    CHECK(m.second_moment == Approx(q.second_moment).epsilon(1e-9));
  }
  const auto standard = gaussian_coordinate(0.0, -0.5, -100.0, 100.0);
  CHECK(standard.log_integral == Approx(0.5 * std::log(2 * std::numbers::pi)));
  CHECK(std::abs(standard.mean) < 1e-12);
  CHECK(standard.second_moment == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("truncated quantiles stay inside bounds and invert the CDF") {
  // exponential: CDF of exp(-0.2 x) on [0, 100]
  const double x = truncated_exp_quantile(-0.2, 0.0, 100.0, 0.5);
  CHECK(-std::expm1(-0.2 * x) / -std::expm1(-20.0) == Approx(0.5).epsilon(1e-12));
  const double y = truncated_exp_quantile(0.2, 0.0, 100.0, 0.5);
  CHECK(y == Approx(100.0 - x).epsilon(1e-12));
  CHECK(truncated_exp_quantile(0.0, 2.0, 4.0, 0.25) == Approx(2.5));

  // standard normal median and symmetric quartiles
  CHECK(std::abs(truncated_normal_quantile(0.0, 1.0, -100.0, 100.0, 0.5)) < 1e-12);
  CHECK(truncated_normal_quantile(0.0, 1.0, -100.0, 100.0, 0.975) == Approx(1.959963984540054));
  CHECK(truncated_normal_quantile(0.0, 1.0, -100.0, 100.0, 0.025) == Approx(-1.959963984540054));

  // extreme standardized bounds (sigma = e^-5, mu far from the box)
  const double sigma = std::exp(-5.0);
  for (double u : {1e-12, 0.3, 0.999999}) {
    const double v = truncated_normal_quantile(-100.0, sigma, 50.0, 100.0, u);
    CHECK(v >= 50.0);
    CHECK(v <= 50.0 + 1e-3);
    const double w = truncated_normal_quantile(100.0, sigma, -100.0, -50.0, u);
    CHECK(w <= -50.0);
    CHECK(w >= -50.0 - 1e-3);
  }
  // monotone in u in the far tail
  CHECK(truncated_normal_quantile(-100.0, sigma, 50.0, 100.0, 0.2) <
        truncated_normal_quantile(-100.0, sigma, 50.0, 100.0, 0.8));
}
