#pragma once

// Quadrature over the hyperprior for hierarchical models with at most two
// hyperparameters, and checks that the resulting marginal depends on x only
// through the model's features.

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "maxent/model.hpp"
#include "maxent/sampler.hpp"

namespace maxent {

struct QuadratureSpec {
  enum class Rule { AdaptiveSimpson, TensorGrid };

  Rule rule = Rule::AdaptiveSimpson;
  double rel_tol = 1e-6;
  /// Recursion limit for adaptive Simpson; the tensor grid uses
  /// 2^max_depth + 1 nodes per axis.
  int max_depth = 40;

  void validate() const;
};

std::string to_string(QuadratureSpec::Rule rule);

/// log of the integral of exp(log_f) over [lo, hi], relative error about
/// rel_tol. The integrand is shifted by its maximum, located by a grid scan
/// (plus optional hint points) and golden-section refinement; Simpson
/// panels are split at peak +- w 2^k for the curvature width w.
/// Throws ConvergenceError when a panel needs more than max_depth halvings.
/// When the peak plus log(hi - lo) is below `negligible`, that upper bound
/// is returned without integrating.
double log_integrate(const std::function<double(double)>& log_f, double lo, double hi,
                     double rel_tol, int max_depth, std::span<const double> hints = {},
                     double negligible = -std::numeric_limits<double>::infinity());

/// log p(x | conditional), closed form for coordinate-wise exponents with a
/// non-positive quadratic part and log_partition otherwise. -inf outside the box.
double conditional_log_density(const CanonicalDistribution& d, std::span<const double> x);

/// log of the hierarchical marginal p(x) = int p(u) p(x | u) du, with u the
/// uniform coordinate of each hyper component. Point components are not
/// integrated. Throws UnsupportedModel for more than two free components.
double marginal_log_density(const HierarchicalModel& m, std::span<const double> x,
                            const QuadratureSpec& q = {});

struct StatePair {
  State x;
  State y;
};

/// Largest |f(x) - f(y)| / max(1, |f(x)|) over the model's features.
double statistic_gap(const HierarchicalModel& m, const StatePair& p);

struct SufficiencyReport {
  std::vector<double> log_density_x;
  std::vector<double> log_density_y;
  std::vector<double> differences;
  double max_difference = 0.0;
  double tolerance = 0.0;  ///< 2 rel_tol

  bool passed() const { return max_difference <= tolerance; }
};

/// Marginal log-density differences over pairs with equal features.
/// Throws InvalidArgument if a pair's relative statistic gap exceeds 1e-12
/// or a point lies outside the box. Pairs are evaluated on up to `threads`
/// workers (0 = hardware concurrency); the result does not depend on it.
SufficiencyReport sufficiency_check(const HierarchicalModel& m, const std::vector<StatePair>& pairs,
                                    const QuadratureSpec& q = {}, unsigned threads = 0);

/// Same evaluation without the equal-statistic precondition (negative controls).
SufficiencyReport log_density_differences(const HierarchicalModel& m,
                                          const std::vector<StatePair>& pairs,
                                          const QuadratureSpec& q = {}, unsigned threads = 0);

/// y is a pseudo-random permutation of x.
StatePair permutation_pair(const State& x, std::uint64_t seed);

/// Rotates coordinates (i, j, k) about the axis (1,1,1) through their
/// centroid by `angle`, which keeps their sum and sum of squares.
StatePair rotation_pair(const State& x, std::size_t i, std::size_t j, std::size_t k, double angle);

/// Rotation pairs whose image stays inside the box; coordinates and angles
/// are drawn from the seed. Throws ConvergenceError if none is found.
StatePair random_rotation_pair(const State& x, const BoxPrior& box, std::uint64_t seed);

/// Density of T = f(x) (after the transform) at each grid point, integrated
/// over the hyperprior, using the conditional law of T:
///   exponential links, f = Mean: Gamma(n, mu / n) (untruncated; requires
///     n exp(-hi / mu_max) <= 1e-6 and lower bound 0);
///   Gaussian link, f = Sum: normal with the truncated per-coordinate moments;
///   Gaussian link, f = SumOfSquares: sigma^2 times noncentral chi-square
///     (untruncated).
/// Throws UnsupportedModel for other combinations.
std::vector<double> implied_marginal_density(const HierarchicalModel& m, const Statistic& f,
                                             Transform transform, std::span<const double> grid,
                                             const QuadratureSpec& q = {});

/// implied_marginal_density normalized by the trapezoid rule over the grid
/// (a single grid point gets density 1).
std::vector<double> implied_marginal_quadrature(const HierarchicalModel& m, const Statistic& f,
                                                Transform transform,
                                                std::span<const double> grid,
                                                const QuadratureSpec& q = {});

/// Probability of each bin [edge_i, edge_{i+1}] under the same conditional law.
std::vector<double> implied_bin_probabilities(const HierarchicalModel& m, const Statistic& f,
                                              Transform transform,
                                              std::span<const double> edges,
                                              const QuadratureSpec& q = {});

}  // namespace maxent
