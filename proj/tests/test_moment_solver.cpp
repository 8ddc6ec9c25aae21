#include <cmath>
#include <numbers>

#include "doctest.h"
#include "maxent/error.hpp"
#include "maxent/moment_solver.hpp"
#include "oracles.hpp"

using namespace maxent;
using doctest::Approx;

namespace {

double exp_mean_oracle_rate(double mu, double hi) {
  return test::bisection([&](double t) { return test::quadrature_truncated_exp_mean(t, hi) - mu; },
                         1e-6, 1.0 / mu, 60);
}

void check_monotone(const SolveReport& r) {
  for (std::size_t i = 1; i < r.dual_trace.size(); ++i) {
    CHECK(r.dual_trace[i] <= r.dual_trace[i - 1]);
  }
}

}  // namespace

TEST_CASE("log_partition examples") {
  const auto box1 = BoxPrior::cube(1, 0.0, 100.0);
  CHECK(log_partition(CanonicalDistribution(box1, {Statistic::sum()}, {0.0})) == 0.0);

  const CanonicalDistribution d1(box1, {Statistic::sum()}, {-0.2});
  const double expected = std::log(-std::expm1(-20.0) / 0.2) - std::log(100.0);
  CHECK(log_partition(d1) == Approx(expected).epsilon(1e-14));
  const double quad =
      std::log(test::simpson([](double x) { return std::exp(-0.2 * x); }, 0.0, 100.0) / 100.0);
  CHECK(log_partition(d1) == Approx(quad).epsilon(1e-10));

  const CanonicalDistribution d2(BoxPrior::cube(2, 0.0, 100.0), {Statistic::sum()}, {-0.2});
  CHECK(log_partition(d2) == Approx(2.0 * expected).epsilon(1e-14));
}

TEST_CASE("closed forms agree with the quadrature backend on 1-D instances") {
  const auto box = BoxPrior::cube(1, -3.0, 7.0);
  struct Case {
    double a, b;
  };
  for (const Case c : {Case{-0.7, 0.0}, Case{0.3, 0.0}, Case{1.0, -0.25}, Case{0.0, -4.0},
                       Case{-2.0, -0.01}}) {
    const CanonicalDistribution d(box, {Statistic::sum(), Statistic::sum_of_squares()},
                                  {c.a, c.b});
    const double closed = log_partition(d);
    const double quad = log_partition(d, PartitionBackend::Quadrature);
    CHECK(std::abs(closed - quad) <= 1e-8 * std::max(1.0, std::abs(closed)));
  }
}

TEST_CASE("expected_statistics examples") {
  const auto wide = BoxPrior::cube(5, -100.0, 100.0);
  const auto [l1, l2] = link_gaussian(0.0, 1.0);
  const CanonicalDistribution g(wide, {Statistic::sum(), Statistic::sum_of_squares()}, {l1, l2});
  const auto m = expected_statistics(g);
  CHECK(std::abs(m[0]) < 1e-6);
  CHECK(std::abs(m[1] - 5.0) < 1e-6);

  const CanonicalDistribution flat(BoxPrior::cube(3, 0.0, 100.0), {Statistic::mean()}, {0.0});
  CHECK(expected_statistics(flat)[0] == Approx(50.0).epsilon(1e-14));

  // truncated normal with real truncation: compare to quadrature moments
  const auto box = BoxPrior::cube(2, 0.0, 3.0);
  const CanonicalDistribution t(box, {Statistic::sum(), Statistic::sum_of_squares()}, {1.0, -0.5});
  const auto q = test::quadrature_moments(1.0, -0.5, 0.0, 3.0, 0.5);
  const auto tm = expected_statistics(t);
  CHECK(tm[0] == Approx(2.0 * q.mean).epsilon(1e-10));
  CHECK(tm[1] == Approx(2.0 * q.second_moment).epsilon(1e-10));
}

TEST_CASE("finite differences on the quadrature backend match analytic moments") {
  const auto box = BoxPrior::cube(3, -2.0, 4.0);
  const CanonicalDistribution d(box, {Statistic::sum(), Statistic::sum_of_squares()}, {0.4, -0.3});
  const auto analytic = expected_statistics(d);
  const auto numeric = expected_statistics(d, PartitionBackend::Quadrature);
  CHECK(numeric[0] == Approx(analytic[0]).epsilon(1e-7));
  CHECK(numeric[1] == Approx(analytic[1]).epsilon(1e-7));
}

TEST_CASE("solve_multipliers: exponential constraint") {
  const double oracle = -exp_mean_oracle_rate(5.0, 100.0);
  CHECK(std::abs(oracle + 0.2) < 1e-6);

  for (std::size_t n : {1u, 100u}) {
    const auto r = solve_multipliers(BoxPrior::cube(n, 0.0, 100.0), {{Statistic::mean()}, {5.0}});
    // the Mean multiplier acts on (1/n) sum x, so the per-coordinate rate is lambda / n
    const double per_coordinate = r.multipliers[0] / static_cast<double>(n);
    CHECK(std::abs(per_coordinate - oracle) < 1e-6);
    CHECK(std::abs(per_coordinate - link_exponential(5.0, 100.0)) < 1e-6);
    CHECK(r.dual_gradient_norm <= 1e-9);
    CHECK(std::abs(r.achieved_moments[0] - 5.0) <= 1e-9);
    check_monotone(r);
  }
}

TEST_CASE("solve_multipliers: gaussian constraints") {
  const std::size_t n = 100;
  // oracle: N(0,1) truncated to [-100, 100] has moments (0, 1) up to e^-5000
  const auto q = test::quadrature_moments(0.0, -0.5, -100.0, 100.0, 0.0);
  CHECK(std::abs(q.mean) < 1e-12);
  CHECK(q.second_moment == Approx(1.0).epsilon(1e-10));

  const auto r = solve_multipliers(BoxPrior::cube(n, -100.0, 100.0),
                                   {{Statistic::sum(), Statistic::sum_of_squares()}, {0.0, 100.0}});
  CHECK(std::abs(r.multipliers[0]) < 1e-4);
  CHECK(std::abs(r.multipliers[1] + 0.5) < 1e-4);
  CHECK(r.dual_gradient_norm <= 1e-9);
  check_monotone(r);
  CHECK(r.dual_trace.size() == static_cast<std::size_t>(r.iterations) + 1);

  // shifted target
  const auto s = solve_multipliers(BoxPrior::cube(4, -100.0, 100.0),
                                   {{Statistic::sum(), Statistic::sum_of_squares()}, {8.0, 20.0}});
  const auto [mu, sigma] = unlink_gaussian(s.multipliers[0], s.multipliers[1]);
  CHECK(mu == Approx(2.0).epsilon(1e-8));
  CHECK(sigma == Approx(1.0).epsilon(1e-8));
}

TEST_CASE("solve_multipliers: prior already satisfies the constraints") {
  const auto box = BoxPrior::cube(10, -100.0, 100.0);
  const double uniform_sumsq = 10.0 * 200.0 * 200.0 / 12.0;
  const auto r = solve_multipliers(box, {{Statistic::sum(), Statistic::sum_of_squares()},
                                         {0.0, uniform_sumsq}});
  CHECK(r.iterations == 0);
  CHECK(std::abs(r.multipliers[0]) <= 1e-9);
  CHECK(std::abs(r.multipliers[1]) <= 1e-9);

  const auto m = solve_multipliers(BoxPrior::cube(3, 0.0, 100.0), {{Statistic::mean()}, {50.0}});
  CHECK(m.multipliers[0] == 0.0);
}

TEST_CASE("solve_multipliers: positive quadratic multiplier uses quadrature") {
  // second moment 0.5 on [0,1] exceeds the uniform 1/3, forcing lambda > 0
  const auto r =
      solve_multipliers(BoxPrior::cube(2, 0.0, 1.0), {{Statistic::sum_of_squares()}, {1.0}}, 1e-8);
  CHECK(r.multipliers[0] > 0.0);
  const auto q = test::quadrature_moments(0.0, r.multipliers[0], 0.0, 1.0, r.multipliers[0]);
  CHECK(q.second_moment == Approx(0.5).epsilon(1e-7));
  check_monotone(r);
}

TEST_CASE("solve_multipliers: errors") {
  const auto box = BoxPrior::cube(3, 0.0, 100.0);
  CHECK_THROWS_AS(solve_multipliers(box, {{Statistic::mean()}, {100.0}}), InfeasibleError);
  CHECK_THROWS_AS(solve_multipliers(box, {{Statistic::mean()}, {-1.0}}), InfeasibleError);
  CHECK_THROWS_AS(solve_multipliers(box, {{Statistic::sum(), Statistic::sum_of_squares()},
                                          {30.0, 300.0}}),
                  InfeasibleError);  // per-coordinate mean 10 needs second moment > 100
  CHECK_THROWS_AS(
      solve_multipliers(box, {{Statistic::tabulated({{{0.0, 0.0, 0.0}, 1.0}})}, {0.5}}),
      UnsupportedModel);
  CHECK_THROWS_AS(solve_multipliers(box, {{Statistic::mean(), Statistic::sum()}, {5.0, 15.0}}),
                  InvalidArgument);
  CHECK_THROWS_AS(solve_multipliers(box, {{Statistic::mean()}, {5.0}}, 1e-9, 1), ConvergenceError);
}

TEST_CASE("minimize_dual on a quadratic with an explicit Hessian") {
  DualObjective q;
  q.value = [](std::span<const double> x) {
    return 0.5 * (4 * x[0] * x[0] + x[1] * x[1]) - x[0] - x[1];
  };
  q.gradient = [](std::span<const double> x) {
    return std::vector<double>{4 * x[0] - 1, x[1] - 1};
  };
  q.hessian = [](std::span<const double>) { return std::vector<double>{4, 0, 0, 1}; };
  const auto r = minimize_dual(q, {0.0, 0.0}, {});
  CHECK(r.iterations == 1);
  CHECK(r.multipliers[0] == Approx(0.25));
  CHECK(r.multipliers[1] == Approx(1.0));
}
