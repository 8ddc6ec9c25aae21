#include <cmath>
#include <numbers>

#include <boost/math/distributions/gamma.hpp>

#include "doctest.h"
#include "maxent/error.hpp"
#include "maxent/moment_solver.hpp"
#include "maxent/verification.hpp"

using namespace maxent;
using doctest::Approx;

namespace {

State draw_exponential(std::size_t n, double mu, std::uint64_t seed) {
  const CanonicalDistribution d(BoxPrior::cube(n, 0.0, 1e4), {Statistic::mean()},
                                {-static_cast<double>(n) / mu});
  const auto x = sample_conditional(d, SeededStream{seed, 0}, 1);
  return {x.values.begin(), x.values.end()};
}

State draw_gaussian(const HierarchicalModel& m, std::uint64_t seed) {
  const auto x = sample_hierarchical(m, SeededStream{seed, 0}, 1);
  return {x.values.begin(), x.values.end()};
}

// Composite Simpson in log space over log mu in [-5, 5] on 10^6 panels.
double reference_exponential_marginal(const State& x, double hi) {
  const double n = static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += v;
  auto log_f = [&](double u) {
    const double mu = std::exp(u);
    return -s / mu - n * std::log(mu * -std::expm1(-hi / mu));
  };
  const std::size_t panels = 1000000;
  const double h = 10.0 / panels;
  double peak = -INFINITY;
  for (std::size_t i = 0; i <= panels; ++i) peak = std::max(peak, log_f(-5.0 + h * i));
  double acc = 0.0;
  for (std::size_t i = 0; i <= panels; ++i) {
    const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * std::exp(log_f(-5.0 + h * i) - peak);
  }
  return peak + std::log(acc * h / 3.0) - std::log(10.0);
}

}  // namespace

TEST_CASE("log_integrate on narrow and wide gaussians") {
  auto narrow = [](double x) { return -(x - 3.0) * (x - 3.0) / (2.0 * 1e-8); };
  CHECK(log_integrate(narrow, -100.0, 100.0, 1e-9, 50, std::vector<double>{3.0}) ==
        Approx(std::log(std::sqrt(2.0 * std::numbers::pi) * 1e-4)).epsilon(1e-9));
  // the scan alone still finds a peak of width 1e-2
  auto medium = [](double x) { return -(x - 0.123) * (x - 0.123) / (2.0 * 1e-4) + 1000.0; };
  CHECK(log_integrate(medium, -1.0, 1.0, 1e-9, 50) ==
        Approx(1000.0 + std::log(std::sqrt(2.0 * std::numbers::pi) * 1e-2)).epsilon(1e-12));
  auto flat = [](double) { return -3.0; };
  CHECK(log_integrate(flat, 0.0, 2.0, 1e-9, 50) == Approx(-3.0 + std::log(2.0)));
  auto empty = [](double) { return -INFINITY; };
  CHECK(log_integrate(empty, 0.0, 1.0, 1e-6, 20) == -INFINITY);
  auto rough = [](double x) { return std::log(std::abs(std::sin(1e4 * x)) + 1e-300); };
  CHECK_THROWS_AS(log_integrate(rough, 0.0, 1.0, 1e-12, 5), ConvergenceError);
}

TEST_CASE("conditional_log_density agrees with the generic path") {
  const BoxPrior box = BoxPrior::cube(4, -3.0, 5.0);
  const State x{0.5, -2.0, 4.9, 1.0};
  const CanonicalDistribution expo(box, {Statistic::mean()}, {-1.3});
  CHECK(conditional_log_density(expo, x) ==
        Approx(log_density_unnormalized(expo, x) - log_partition(expo)).epsilon(1e-12));
  const CanonicalDistribution gauss(box, {Statistic::sum(), Statistic::sum_of_squares()}, {0.7, -0.4});
  CHECK(conditional_log_density(gauss, x) ==
        Approx(log_density_unnormalized(gauss, x) - log_partition(gauss)).epsilon(1e-12));
  const CanonicalDistribution bowl(box, {Statistic::sum_of_squares()}, {0.1});
  CHECK(conditional_log_density(bowl, x) ==
        Approx(log_density_unnormalized(bowl, x) - log_partition(bowl)).epsilon(1e-12));
  CHECK(conditional_log_density(expo, State{0.0, 0.0, 0.0, 6.0}) == -INFINITY);

  const BoxPrior mixed({0.0, -1.0}, {2.0, 1.0});
  const CanonicalDistribution m(mixed, {Statistic::sum(), Statistic::sum_of_squares()}, {0.2, -1.5});
  const State y{1.5, -0.25};
  CHECK(conditional_log_density(m, y) ==
        Approx(log_density_unnormalized(m, y) - log_partition(m)).epsilon(1e-12));
}

TEST_CASE("point hyperprior gives the conditional density") {
  const auto model = HierarchicalModel::exponential(50, 1e4, 1.2, 1.2);
  const auto x = draw_exponential(50, 3.0, 4);
  const double mu[] = {std::exp(1.2)};
  CHECK(marginal_log_density(model, x) == conditional_log_density(model.conditional(mu), x));

  const auto g = HierarchicalModel::gaussian(10, -100, 100, 3.0, 3.0, 0.5, 0.5);
  const auto y = draw_gaussian(g, 2);
  const double h[] = {3.0, std::exp(0.5)};
  CHECK(marginal_log_density(g, y) == conditional_log_density(g.conditional(h), y));
}

TEST_CASE("exponential marginal matches a 10^6-node reference grid") {
  const auto model = HierarchicalModel::exponential(100, 1e4, -5.0, 5.0);
  for (double mu : {0.01, 1.0, 5.0, 120.0}) {
    const auto x = draw_exponential(100, mu, 17);
    const double got = marginal_log_density(model, x);
    const double ref = reference_exponential_marginal(x, 1e4);
    CHECK(std::abs(got - ref) < 1e-6);
  }
  CHECK(marginal_log_density(model, State(100, -1.0)) == -INFINITY);
}

TEST_CASE("halving relTol moves the marginal by less than relTol") {
  const auto expo = HierarchicalModel::exponential(100, 1e4, -5.0, 5.0);
  const auto gauss = HierarchicalModel::gaussian(100, -100, 100, -100, 100, -5, 5);
  QuadratureSpec coarse;
  QuadratureSpec fine;
  fine.rel_tol = coarse.rel_tol / 2;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto x = draw_exponential(100, 2.0 * seed, seed);
    CHECK(std::abs(marginal_log_density(expo, x, coarse) - marginal_log_density(expo, x, fine)) <
          coarse.rel_tol);
    const auto y = draw_gaussian(gauss, seed);
    CHECK(std::abs(marginal_log_density(gauss, y, coarse) - marginal_log_density(gauss, y, fine)) <
          coarse.rel_tol);
  }
}

TEST_CASE("tensor grid agrees with adaptive Simpson on a smooth case") {
  // a short, widely spread x keeps the posterior broad enough for a fixed grid
  const auto model = HierarchicalModel::gaussian(3, -100, 100, -100, 100, 2.0, 5.0);
  const State x{-30.0, 10.0, 45.0};
  QuadratureSpec grid{QuadratureSpec::Rule::TensorGrid, 1e-6, 10};
  CHECK(marginal_log_density(model, x, grid) == Approx(marginal_log_density(model, x)).epsilon(1e-6));
  const auto expo = HierarchicalModel::exponential(5, 1e4, -5, 5);
  CHECK_THROWS_AS(marginal_log_density(expo, State(5, 1.0), grid), InvalidArgument);
  CHECK_THROWS_AS((QuadratureSpec{QuadratureSpec::Rule::TensorGrid, 1e-6, 20}.validate()),
                  InvalidArgument);
  CHECK_THROWS_AS((QuadratureSpec{QuadratureSpec::Rule::AdaptiveSimpson, 0.0, 20}.validate()),
                  InvalidArgument);
}

TEST_CASE("pair constructors keep the statistics") {
  const State x{1.0, 2.5, -3.0, 7.0, 0.25};
  const auto perm = permutation_pair(x, 9);
  CHECK(perm.y != x);
  CHECK(std::is_permutation(x.begin(), x.end(), perm.y.begin()));

  const auto rot = rotation_pair(x, 0, 2, 4, 0.9);
  CHECK(Statistic::sum()(rot.y) == Approx(Statistic::sum()(x)).epsilon(1e-15));
  CHECK(Statistic::sum_of_squares()(rot.y) == Approx(Statistic::sum_of_squares()(x)).epsilon(1e-14));
  CHECK(rot.y[1] == x[1]);
  CHECK(rot.y[0] != x[0]);
  CHECK_THROWS_AS(rotation_pair(x, 0, 0, 1, 0.5), InvalidArgument);

  const BoxPrior box = BoxPrior::cube(5, -10.0, 10.0);
  const auto r = random_rotation_pair(x, box, 3);
  CHECK(box.contains(r.y));
  CHECK(!std::is_permutation(x.begin(), x.end(), r.y.begin()));
}

TEST_CASE("sufficiency holds for permutations and rotations") {
  const auto expo = HierarchicalModel::exponential(100, 1e4, -5.0, 5.0);
  const auto gauss = HierarchicalModel::gaussian(100, -100, 100, -100, 100, -5, 5);
  std::vector<StatePair> expo_pairs, gauss_pairs;
  for (std::uint64_t s = 0; s < 4; ++s) {
    expo_pairs.push_back(permutation_pair(draw_exponential(100, 0.5 + 10.0 * s, s), s));
    const auto y = draw_gaussian(gauss, 100 + s);
    gauss_pairs.push_back(permutation_pair(y, s));
    gauss_pairs.push_back(random_rotation_pair(y, gauss.base(), s));
  }
  const auto re = sufficiency_check(expo, expo_pairs);
  CHECK(re.passed());
  CHECK(re.differences.size() == 4);
  const auto rg = sufficiency_check(gauss, gauss_pairs);
  CHECK(rg.passed());
  CHECK(rg.max_difference <= 2e-6);
}

TEST_CASE("negative controls are detected") {
  const auto expo = HierarchicalModel::exponential(100, 1e4, -5.0, 5.0);
  auto x = draw_exponential(100, 5.0, 8);
  State shifted = x;
  for (double& v : shifted) v += 0.1;
  const auto r = log_density_differences(expo, {{x, shifted}});
  CHECK(r.max_difference >= 1.0);
  CHECK_THROWS_AS(sufficiency_check(expo, {{x, shifted}}), InvalidArgument);

  const auto gauss = HierarchicalModel::gaussian(100, -100, 100, -100, 100, -5, 5);
  const auto y = draw_gaussian(gauss, 12);
  double mean = 0.0;
  for (double v : y) mean += v / 100.0;
  State scaled = y;
  for (double& v : scaled) v = std::clamp(mean + 1.5 * (v - mean), -100.0, 100.0);
  CHECK(log_density_differences(gauss, {{y, scaled}}).max_difference >= 1.0);
}

TEST_CASE("implied marginal with a point hyperprior is the gamma law") {
  const auto model = HierarchicalModel::exponential(100, 1e4, std::log(5.0), std::log(5.0));
  std::vector<double> grid;
  for (int i = 0; i <= 1000; ++i) grid.push_back(1.0 + 0.01 * i);
  const auto density = implied_marginal_density(model, Statistic::mean(), Transform::Identity, grid);
  const boost::math::gamma_distribution<> oracle(100.0, 5.0 / 100.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(density[i] == Approx(boost::math::pdf(oracle, grid[i])).epsilon(1e-8));
  }
  const auto normalized = implied_marginal_quadrature(model, Statistic::mean(), Transform::Identity, grid);
  for (std::size_t i = 200; i < 700; i += 50) {
    CHECK(normalized[i] == Approx(boost::math::pdf(oracle, grid[i])).epsilon(1e-8));
  }
  const double one[] = {5.0};
  CHECK(implied_marginal_quadrature(model, Statistic::mean(), Transform::Identity, one) ==
        std::vector<double>{1.0});
}

TEST_CASE("implied marginal of log Mean is near log-uniform") {
  const auto model = HierarchicalModel::exponential(100, 1e4, -5.0, 5.0);
  std::vector<double> grid;
  for (int i = 0; i <= 80; ++i) grid.push_back(-4.0 + 0.1 * i);
  const auto density = implied_marginal_density(model, Statistic::mean(), Transform::Log, grid);
  for (double d : density) CHECK(d == Approx(0.1).epsilon(1e-3));

  std::vector<double> edges;
  for (int i = 0; i <= 140; ++i) edges.push_back(-7.0 + 0.1 * i);
  const auto probs = implied_bin_probabilities(model, Statistic::mean(), Transform::Log, edges);
  double total = 0.0;
  for (double p : probs) total += p;
  CHECK(total == Approx(1.0).epsilon(1e-8));
  CHECK(probs[70] == Approx(0.01).epsilon(1e-3));
}

TEST_CASE("gaussian implied marginals integrate to one") {
  const auto model = HierarchicalModel::gaussian(100, -100, 100, -100, 100, -5, 5);
  std::vector<double> edges;
  for (int i = 0; i <= 50; ++i) edges.push_back(-12000.0 + 480.0 * i);
  const auto probs = implied_bin_probabilities(model, Statistic::sum(), Transform::Identity, edges);
  double total = 0.0;
  for (double p : probs) total += p;
  CHECK(total == Approx(1.0).epsilon(1e-6));
  // truncation pulls wide conditionals toward 0, so check the central bin
  // against sampled frequencies rather than the flat 4.8/200
  const std::size_t count = 100000;
  const auto t = sample_statistics(model, {Statistic::sum()}, {Transform::Identity},
                                   SeededStream{77, 0}, count);
  double hits = 0.0;
  for (double v : t.values) hits += (v >= edges[25] && v <= edges[26]) ? 1.0 : 0.0;
  const double se = std::sqrt(probs[25] * (1.0 - probs[25]) / count);
  CHECK(std::abs(hits / count - probs[25]) < 4.0 * se);
}

TEST_CASE("unsupported implied marginals") {
  const auto truncated = HierarchicalModel::exponential(100, 100.0, -5.0, 5.0);
  const double grid[] = {1.0};
  CHECK_THROWS_AS(implied_marginal_density(truncated, Statistic::mean(), Transform::Identity, grid),
                  UnsupportedModel);
  const auto expo = HierarchicalModel::exponential(100, 1e4, -5.0, 5.0);
  CHECK_THROWS_AS(implied_marginal_density(expo, Statistic::sum_of_squares(), Transform::Identity, grid),
                  UnsupportedModel);
}
