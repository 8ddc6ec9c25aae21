#include <cmath>
#include <numeric>

#include "doctest.h"
#include "maxent/error.hpp"
#include "maxent/sampler.hpp"

using namespace maxent;
using doctest::Approx;

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("hyperprior draws") {
  const HyperPrior h({HyperComponent::log_uniform(-5, 5), HyperComponent::uniform(-100, 100)});
  const std::size_t count = 20000;
  const auto draws = sample_hyper(h, SeededStream{3, 0}, count);
  std::vector<double> log_mu(count);
  for (std::size_t r = 0; r < count; ++r) {
    log_mu[r] = std::log(draws.row(r)[0]);
    CHECK(draws.row(r)[1] >= -100.0);
    CHECK(draws.row(r)[1] <= 100.0);
  }
  CHECK(std::abs(mean_of(log_mu)) < 3.0 * (10.0 / std::sqrt(12.0)) / std::sqrt(count));

  const auto again = sample_hyper(h, SeededStream{3, 0}, count);
  CHECK(again.values == draws.values);
}

TEST_CASE("uniform conditional draws") {
  const CanonicalDistribution d(BoxPrior::cube(3, -2.0, 6.0));
  const std::size_t count = 30000;
  const auto x = sample_conditional(d, SeededStream{1, 0}, count);
  for (std::size_t j = 0; j < 3; ++j) {
    const auto c = column(x, j);
    CHECK(std::abs(mean_of(c) - 2.0) < 4.0 * (8.0 / std::sqrt(12.0)) / std::sqrt(count));
    CHECK(*std::min_element(c.begin(), c.end()) >= -2.0);
    CHECK(*std::max_element(c.begin(), c.end()) <= 6.0);
  }
}

TEST_CASE("exponential conditional at mu = 5") {
  const CanonicalDistribution d(BoxPrior::cube(100, 0.0, 100.0), {Statistic::mean()}, {-100.0 / 5.0});
  const auto x = sample_conditional(d, SeededStream{7, 2}, 10000);
  std::vector<double> t(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) t[r] = Statistic::mean()(x.row(r));
  CHECK(std::abs(mean_of(t) - 5.0) < 0.015);
}

TEST_CASE("gaussian conditional second moment") {
  const auto [l1, l2] = link_gaussian(0.0, 1.0);
  const CanonicalDistribution d(BoxPrior::cube(10, -100.0, 100.0),
                                {Statistic::sum(), Statistic::sum_of_squares()}, {l1, l2});
  const std::size_t count = 20000;
  const auto x = sample_conditional(d, SeededStream{9, 0}, count);
  std::vector<double> s2(count);
  for (std::size_t r = 0; r < count; ++r) s2[r] = Statistic::sum_of_squares()(x.row(r)) / 10.0;
  // chi-square with 10 dof scaled by 1/10 has sd sqrt(2/10)
  CHECK(std::abs(mean_of(s2) - 1.0) < 4.0 * std::sqrt(0.2) / std::sqrt(count));
}

TEST_CASE("unsupported conditionals") {
  const BoxPrior box = BoxPrior::cube(2, 0.0, 1.0);
  CHECK_THROWS_AS(sample_conditional(CanonicalDistribution(box, {Statistic::sum_of_squares()}, {1.0}),
                                     SeededStream{}, 10),
                  UnsupportedModel);
  CHECK_THROWS_AS(sample_conditional(CanonicalDistribution(box, {Statistic::tabulated({{State{0.0, 0.0}, 1.0}})}, {1.0}),
                                     SeededStream{}, 10),
                  UnsupportedModel);
  CHECK_THROWS_AS(sample_conditional(CanonicalDistribution(box), SeededStream{}, 0), InvalidArgument);
}

TEST_CASE("point hyperprior reduces to the conditional") {
  const auto model = HierarchicalModel::exponential(20, 1e4, 1.0, 1.0);
  const SeededStream s{11, 4};
  const auto hier = sample_hierarchical(model, s, 5000);
  const double mu[] = {std::exp(1.0)};
  const auto cond = sample_conditional(model.conditional(mu), s.substream(1), 5000);
  CHECK(hier.values == cond.values);
}

TEST_CASE("determinism across thread counts") {
  const auto model = HierarchicalModel::gaussian(10, -100, 100, -100, 100, -5, 5);
  const SeededStream s{42, 0};
  const auto one = sample_hierarchical(model, s, 9000, 1);
  const auto many = sample_hierarchical(model, s, 9000, 7);
  CHECK(one.values == many.values);

  const auto stats = sample_statistics(model, {Statistic::sum(), Statistic::sum_of_squares()},
                                       {Transform::Identity, Transform::Identity}, s, 9000, 3);
  bool same = true;
  for (std::size_t r = 0; r < one.rows; ++r) {
    same = same && stats.row(r)[0] == Statistic::sum()(one.row(r)) &&
           stats.row(r)[1] == Statistic::sum_of_squares()(one.row(r));
  }
  CHECK(same);
}

TEST_CASE("distinct streams are uncorrelated") {
  const std::size_t count = 50000;
  const CanonicalDistribution d(BoxPrior::cube(1, 0.0, 1.0));
  for (std::uint64_t a = 0; a < 3; ++a) {
    const auto x = column(sample_conditional(d, SeededStream{5, a}, count), 0);
    const auto y = column(sample_conditional(d, SeededStream{5, a + 1}, count), 0);
    const double mx = mean_of(x), my = mean_of(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < count; ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
    }
    CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 4.0 / std::sqrt(count));
  }
  const SeededStream base{5, 0};
  CHECK(base.substream(0).stream_index != base.substream(1).stream_index);
}

TEST_CASE("CLT width of the mean under the uniform box") {
  for (std::size_t n : {25u, 100u, 400u}) {
    const auto t = sample_statistics(BoxPrior::cube(n, 0.0, 100.0), {Statistic::mean()},
                                     {Transform::Identity}, SeededStream{13, n}, 100000);
    const auto m = sample_moments(t.values);
    const double expected = 100.0 / std::sqrt(12.0 * static_cast<double>(n));
    CHECK(std::abs(m.sd / expected - 1.0) < 0.03);
    CHECK(std::abs(m.mean - 50.0) < 4.0 * expected / std::sqrt(100000.0));
  }
}

TEST_CASE("implied histogram of the mean under [0,100]^100") {
  const BoxPrior box = BoxPrior::cube(100, 0.0, 100.0);
  const auto h = implied_statistic_histogram(box, Statistic::mean(), Transform::Identity,
                                             SeededStream{1, 0}, 10000);
  CHECK(h.bins() == 100);
  CHECK(std::accumulate(h.counts.begin(), h.counts.end(), std::uint64_t{0}) == h.total);
  double integral = 0.0, mean = 0.0, second = 0.0;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double w = h.edges[i + 1] - h.edges[i];
    const double c = 0.5 * (h.edges[i] + h.edges[i + 1]);
    integral += h.density(i) * w;
    mean += h.density(i) * w * c;
    second += h.density(i) * w * c * c;
  }
  CHECK(integral == Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(mean - 50.0) < 0.09);
  CHECK(std::abs(std::sqrt(second - mean * mean) / 2.89 - 1.0) < 0.02);
}

TEST_CASE("log mean under the hierarchical exponential model is near log-uniform") {
  const auto model = HierarchicalModel::exponential(100, 1e4, -5.0, 5.0);
  const auto t = sample_statistics(model, {Statistic::mean()}, {Transform::Log},
                                   SeededStream{1, 0}, 100000);
  CHECK(ks_statistic(t.values, ReferenceCdf::uniform(-5.0, 5.0)) <= 0.05);
  const auto h = HistogramSummary::fixed(t.values, -4.5, 4.5, 18);
  for (std::size_t i = 0; i < h.bins(); ++i) CHECK(h.density(i) == Approx(0.1).epsilon(0.1));
}

TEST_CASE("log transform rejects nonpositive values") {
  CHECK_THROWS_AS(implied_statistic_histogram(BoxPrior::cube(2, -1.0, 1.0), Statistic::mean(),
                                              Transform::Log, SeededStream{}, 100),
                  InvalidArgument);
  CHECK_THROWS_AS(implied_statistic_histogram(BoxPrior::cube(2, 0.0, 1.0), Statistic::mean(),
                                              Transform::Identity, SeededStream{}, 10, 20),
                  InvalidArgument);
}

TEST_CASE("ks_statistic") {
  const auto u = column(sample_conditional(CanonicalDistribution(BoxPrior::cube(1, 0.0, 1.0)),
                                           SeededStream{21, 0}, 100000),
                        0);
  CHECK(ks_statistic(u, ReferenceCdf::uniform(0.0, 1.0)) < 1.63 / std::sqrt(1e5));
  const std::vector<double> constant(50, 0.3);
  CHECK(ks_statistic(constant, ReferenceCdf::uniform(0.0, 1.0)) == Approx(0.7));
  const std::vector<double> zero{0.0};
  CHECK(ks_statistic(zero, ReferenceCdf::normal(0.0, 1.0)) == Approx(0.5));
  CHECK_THROWS_AS(ks_statistic(std::vector<double>{}, ReferenceCdf{}), InvalidArgument);
}

TEST_CASE("default bins and serialization") {
  CHECK(default_bins(100000) == 200);
  CHECK(default_bins(10000) == 100);
  CHECK(default_bins(10001) == 101);
  const std::vector<double> v{0.0, 0.5, 1.0, 1.0};
  const auto h = HistogramSummary::from_values(v, 2);
  CHECK(h.counts == std::vector<std::uint64_t>{1, 3});
  CHECK(h.to_csv() == "bin_lo,bin_hi,count,density\n0,0.5,1,0.5\n0.5,1,3,1.5\n");
  const auto h2 = Histogram2D::from_values(v, v, 2, 2);
  CHECK(h2.to_csv().rfind("bin_lo,bin_hi,count,density,bin2_lo,bin2_hi\n", 0) == 0);
  CHECK(h2.counts == std::vector<std::uint64_t>{1, 0, 0, 3});
}
