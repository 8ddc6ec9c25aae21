#include <cmath>
#include <numeric>

#include "doctest.h"
#include "maxent/error.hpp"
#include "maxent/indicator.hpp"
#include "maxent/rng.hpp"

using namespace maxent;
using doctest::Approx;

namespace {

struct Instance {
  WeightedDiscreteModel model;
  BinConstraintSet constraints;
};

// Random prior over a 1-D state space, statistic = the coordinate, random
// edges and Dirichlet-ish targets. Some bins may get zero target.
Instance random_instance(std::uint64_t seed) {
  CounterRng rng(SeededStream{seed, 99});
  const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 9999.0);
  const std::size_t bins = 1 + static_cast<std::size_t>(rng.uniform() * std::min<double>(20, n));
  std::vector<State> states;
  std::vector<double> prior(n);
  for (std::size_t k = 0; k < n; ++k) {
    states.push_back({static_cast<double>(k)});
    prior[k] = rng.uniform() < 0.1 ? 0.0 : -std::log(rng.uniform());
  }
  prior[0] += 1.0;
  const double total = std::accumulate(prior.begin(), prior.end(), 0.0);
  for (double& p : prior) p /= total;

  std::vector<double> edges{0.0};
  for (std::size_t b = 1; b < bins; ++b) edges.push_back(static_cast<double>(b * n / bins) - 0.5);
  edges.push_back(static_cast<double>(n - 1));
  WeightedDiscreteModel model(std::move(states), prior, Statistic::mean());

  BinConstraintSet c{Statistic::mean(), edges, {}, false};
  const auto mass = bin_prior_mass(model, BinConstraintSet{Statistic::mean(), edges,
                                                           std::vector<double>(bins, 1.0 / bins)});
  std::vector<double> target(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    target[b] = mass[b] > 0.0 && rng.uniform() > 0.1 ? -std::log(rng.uniform()) : 0.0;
  }
  std::size_t heaviest = std::max_element(mass.begin(), mass.end()) - mass.begin();
  target[heaviest] += 0.5;
  const double t = std::accumulate(target.begin(), target.end(), 0.0);
  for (double& v : target) v /= t;
  c.target_probs = target;
  return {std::move(model), std::move(c)};
}

std::vector<double> summed_marginals(const WeightedDiscreteModel& m, const BinConstraintSet& c,
                                     const DiscreteDistribution& p) {
  std::vector<double> out(c.bin_count(), 0.0);
  const auto features = bin_indicator_features(c.statistic, c.bin_edges);
  for (std::size_t k = 0; k < m.size(); ++k) {
    for (std::size_t b = 0; b < features.size(); ++b) out[b] += p[k] * features[b](m.states()[k]);
  }
  return out;
}

}  // namespace

TEST_CASE("bin_indicator_features on T in {1,2,3}") {
  const auto f = bin_indicator_features(Statistic::sum(), {0.5, 1.5, 2.5, 3.5});
  REQUIRE(f.size() == 3);
  for (double t : {1.0, 2.0, 3.0}) {
    const State x{t};
    for (std::size_t b = 0; b < 3; ++b) CHECK(f[b](x) == (b + 1 == t ? 1.0 : 0.0));
  }
  const auto single = bin_indicator_features(Statistic::mean(), {-1.0, 1.0});
  CHECK(single[0](State{1.0}) == 1.0);
  CHECK(single[0](State{-1.0}) == 1.0);
  const auto halves = bin_indicator_features(Statistic::mean(), {0.0, 0.5, 1.0});
  for (double x = 0.0; x <= 1.0; x += 0.125) {
    CHECK(halves[0](State{x}) + halves[1](State{x}) == 1.0);
  }
  CHECK_THROWS_AS(bin_indicator_features(Statistic::mean(), {1.0}), InvalidArgument);
  CHECK_THROWS_AS(bin_indicator_features(Statistic::mean(), {1.0, 0.0}), InvalidArgument);
}

TEST_CASE("three states with targets (1/2, 1/4, 1/4)") {
  WeightedDiscreteModel m({{1.0}, {2.0}, {3.0}}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, Statistic::sum());
  BinConstraintSet c{Statistic::sum(), {1.0, 2.0, 3.0}, {0.5, 0.25, 0.25}, true};
  const auto lambda = solve_bin_multipliers(m, c);
  CHECK(lambda[0] == Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(lambda[1] == 0.0);
  CHECK(lambda[2] == 0.0);
  const auto p = reweight(m, exp_multipliers(lambda), c);
  CHECK(p[0] == Approx(0.5).epsilon(1e-15));
  CHECK(p[1] == Approx(0.25).epsilon(1e-15));

  const auto iterative = solve_bin_multipliers_iterative(m, c);
  for (std::size_t b = 0; b < 3; ++b) CHECK(iterative[b] == Approx(lambda[b]).epsilon(1e-9));
}

TEST_CASE("targets equal to prior masses give zero multipliers") {
  auto m = WeightedDiscreteModel::grid({{0, 1, 2, 3}, {0, 1, 2}}, Statistic::sum());
  BinConstraintSet c{Statistic::sum(), {0.0, 2.0, 5.0}, {0.5, 0.5}};
  c.target_probs = bin_prior_mass(m, c);
  for (double l : solve_bin_multipliers(m, c)) CHECK(std::abs(l) < 1e-15);
}

TEST_CASE("100-state grid with T = mean in 10 bins") {
  std::vector<double> axis(100);
  std::iota(axis.begin(), axis.end(), 0.0);
  auto m = WeightedDiscreteModel::grid({axis}, Statistic::mean());
  std::vector<double> edges;
  for (int b = 0; b <= 10; ++b) edges.push_back(b * 9.9);
  std::vector<double> target{0.02, 0.05, 0.1, 0.2, 0.13, 0.1, 0.1, 0.15, 0.1, 0.05};
  BinConstraintSet c{Statistic::mean(), edges, target};
  const auto p = reweight(m, exp_multipliers(solve_bin_multipliers(m, c)), c);
  const auto achieved = summed_marginals(m, c, p);
  for (std::size_t b = 0; b < 10; ++b) CHECK(std::abs(achieved[b] - target[b]) < 1e-12);
  CHECK(std::accumulate(achieved.begin(), achieved.end(), 0.0) == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("partition function is sum of exp(lambda) times prior mass") {
  const auto inst = random_instance(5);
  const auto lambda = solve_bin_multipliers(inst.model, inst.constraints);
  const auto mass = bin_prior_mass(inst.model, inst.constraints);
  double z = 0.0;
  for (std::size_t b = 0; b < mass.size(); ++b) z += std::exp(lambda[b]) * mass[b];
  double direct = 0.0;
  const auto bins = assign_bins(inst.model, inst.constraints);
  for (std::size_t k = 0; k < inst.model.size(); ++k) {
    direct += inst.model.base_prior()[k] * std::exp(lambda[bins[k]]);
  }
  CHECK(z == Approx(direct).epsilon(1e-13));
}

TEST_CASE("gauge invariance") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto inst = random_instance(seed);
    const auto lambda = solve_bin_multipliers(inst.model, inst.constraints);
    const auto p = reweight(inst.model, exp_multipliers(lambda), inst.constraints);
    for (double shift : {-3.0, 0.7, 12.0}) {
      auto moved = lambda;
      for (double& l : moved) l += shift;
      const auto q = reweight(inst.model, exp_multipliers(moved), inst.constraints);
      double worst = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) worst = std::max(worst, std::abs(p[k] - q[k]));
      CHECK(worst <= 1e-14);
    }
  }
}

TEST_CASE("solver matches the projection oracle on random instances") {
  for (std::uint64_t seed = 10; seed < 40; ++seed) {
    const auto inst = random_instance(seed);
    const auto& m = inst.model;
    const auto& c = inst.constraints;
    const auto p = reweight(m, exp_multipliers(solve_bin_multipliers(m, c)), c);
    const auto oracle = brute_force_maxent(m, c);
    CHECK(total_variation(p, oracle) <= 1e-12);
    const auto achieved = summed_marginals(m, c, p);
    for (std::size_t b = 0; b < achieved.size(); ++b) {
      CHECK(std::abs(achieved[b] - c.target_probs[b]) <= 1e-12);
    }
  }
}

TEST_CASE("iterative dual agrees with the closed form") {
  for (std::uint64_t seed : {41u, 42u, 43u}) {
    const auto inst = random_instance(seed);
    const auto closed = solve_bin_multipliers(inst.model, inst.constraints);
    const auto iterative = solve_bin_multipliers_iterative(inst.model, inst.constraints);
    const auto p = reweight(inst.model, exp_multipliers(closed), inst.constraints);
    const auto q = reweight(inst.model, exp_multipliers(iterative), inst.constraints);
    CHECK(total_variation(p, q) < 1e-9);
  }
}

TEST_CASE("solver output dominates perturbed feasible alternatives") {
  for (std::uint64_t seed : {50u, 51u, 52u, 53u}) {
    const auto inst = random_instance(seed);
    const auto& m = inst.model;
    const auto& c = inst.constraints;
    const auto p = reweight(m, exp_multipliers(solve_bin_multipliers(m, c)), c);
    const auto prior = m.prior_distribution();
    const double best = entropy(p, prior);
    for (const auto& q : perturbed_feasible(m, c, p, seed, 100)) {
      const auto marg = summed_marginals(m, c, q);
      for (std::size_t b = 0; b < marg.size(); ++b) CHECK(std::abs(marg[b] - c.target_probs[b]) < 1e-12);
      if (total_variation(p, q) > 1e-6) CHECK(entropy(q, prior) < best);
    }
  }
}

TEST_CASE("single bin and concentrated targets") {
  auto m = WeightedDiscreteModel::grid({{0, 1, 2, 3, 4}}, Statistic::mean());
  BinConstraintSet whole{Statistic::mean(), {0.0, 4.0}, {1.0}};
  CHECK(total_variation(brute_force_maxent(m, whole), m.prior_distribution()) == 0.0);

  BinConstraintSet top{Statistic::mean(), {0.0, 2.5, 4.0}, {0.0, 1.0}};
  const auto lambda = solve_bin_multipliers(m, top);
  CHECK(lambda[0] == -INFINITY);
  CHECK(lambda[1] == 0.0);
  const auto p = reweight(m, exp_multipliers(lambda), top);
  CHECK(p[0] == 0.0);
  CHECK(p[3] == Approx(0.5));

  // conditioning via an indicator g
  const auto cond = reweight(m, {1.0, 0.0}, top);
  CHECK(cond[1] == Approx(1.0 / 3.0));
  CHECK(cond[4] == 0.0);
}

TEST_CASE("entropy examples") {
  auto m = WeightedDiscreteModel::grid({{0, 1, 2, 3}}, Statistic::mean());
  const auto prior = m.prior_distribution();
  CHECK(entropy(prior, prior) == 0.0);
  const DiscreteDistribution point(m.shared_states(), {0.0, 1.0, 0.0, 0.0});
  CHECK(entropy(point, prior) == Approx(-std::log(4.0)));
  CHECK_THROWS_AS(entropy(prior, point), InvalidArgument);
}

TEST_CASE("error paths") {
  WeightedDiscreteModel m({{0.0}, {1.0}, {2.0}}, {0.5, 0.5, 0.0}, Statistic::mean());
  BinConstraintSet empty{Statistic::mean(), {0.0, 1.5, 2.0}, {0.5, 0.5}};
  CHECK_THROWS_AS(solve_bin_multipliers(m, empty), InfeasibleError);
  CHECK_THROWS_AS(brute_force_maxent(m, empty), InfeasibleError);
  BinConstraintSet gap{Statistic::mean(), {0.0, 1.5}, {1.0}};
  CHECK_THROWS_AS(assign_bins(m, gap), InvalidArgument);
  BinConstraintSet bad_sum{Statistic::mean(), {0.0, 2.0}, {0.9}};
  CHECK_THROWS_AS(solve_bin_multipliers(m, bad_sum), InvalidArgument);
  BinConstraintSet ok{Statistic::mean(), {0.0, 2.0}, {1.0}};
  CHECK_THROWS_AS(reweight(m, {0.0}, ok), InvalidArgument);
  CHECK_THROWS_AS(WeightedDiscreteModel({{0.0}}, {0.5}, Statistic::mean()), InvalidArgument);
}

TEST_CASE("moment solution dominates random feasible alternatives") {
  std::vector<double> axis;
  for (int i = 0; i <= 8; ++i) axis.push_back(i * 0.25);
  auto m = WeightedDiscreteModel::grid({axis, axis}, Statistic::mean());
  std::vector<std::vector<double>> features;
  for (const auto& s : m.states()) {
    features.push_back({statistic_eval(Statistic::sum(), s), statistic_eval(Statistic::sum_of_squares(), s)});
  }
  const std::vector<double> targets{1.4, 1.6};
  const auto sol = solve_discrete_moments(m, features, targets);
  CHECK(sol.dual_gradient_norm < 1e-12);

  const auto prior = m.prior_distribution();
  const double best = entropy(sol.distribution, prior);
  const auto alternatives = random_feasible_alternatives(m, features, sol.distribution, 7, 100);
  REQUIRE(alternatives.size() == 100);
  for (const auto& q : alternatives) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      s1 += q[k] * features[k][0];
      s2 += q[k] * features[k][1];
    }
    CHECK(s1 == Approx(targets[0]).epsilon(1e-10));
    CHECK(s2 == Approx(targets[1]).epsilon(1e-10));
    CHECK(total_variation(q, sol.distribution) > 1e-6);
    CHECK(entropy(q, prior) < best);
  }
}
