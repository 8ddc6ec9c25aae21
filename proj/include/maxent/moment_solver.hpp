#pragma once

#include <functional>
#include <span>
#include <vector>

#include "maxent/model.hpp"
#include "maxent/truncated.hpp"

namespace maxent {

/// Expected-value constraints <f_i> = c_i.
struct MomentConstraintSet {
  std::vector<Statistic> features;
  std::vector<double> targets;
};

struct SolveReport {
  std::vector<double> multipliers;
  double log_partition = 0.0;
  std::vector<double> achieved_moments;
  int iterations = 0;
  /// max_i |achieved_i - target_i|
  double dual_gradient_norm = 0.0;
  /// Dual objective at the start and after every accepted step.
  std::vector<double> dual_trace;
};

enum class PartitionBackend {
  /// Closed form where available, per-coordinate quadrature otherwise.
  Automatic,
  /// Per-coordinate adaptive quadrature regardless of the exponent.
  Quadrature,
};

/// log Z(lambda) = log of the integral of pi(x) exp(sum lambda_i f_i(x)).
///
/// Requires coordinate-wise features. Uses the truncated-exponential closed
/// form when the per-coordinate exponent is linear, the truncated-Gaussian
/// closed form when its quadratic coefficient is negative, and adaptive
/// quadrature otherwise. Throws UnsupportedModel for other features.
double log_partition(const CanonicalDistribution& d,
                     PartitionBackend backend = PartitionBackend::Automatic);

/// <f_i> under d, the gradient of log_partition. Analytic for the closed-form
/// backends; central differences with step 1e-6 max(1, |lambda_i|) otherwise.
std::vector<double> expected_statistics(const CanonicalDistribution& d,
                                        PartitionBackend backend = PartitionBackend::Automatic);

/// Attainable range of a coordinate-wise feature over the box.
std::pair<double, double> feature_range(const Statistic& f, const BoxPrior& box);

/// A smooth convex objective for the Newton minimizer.
struct DualObjective {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
  /// Row-major Hessian; when empty the minimizer differentiates the gradient.
  std::function<std::vector<double>(std::span<const double>)> hessian;
};

struct NewtonOptions {
  double tolerance = 1e-9;
  int max_iterations = 200;
};

/// Damped Newton with Armijo backtracking from `start`. Fills every field of
/// SolveReport except log_partition and achieved_moments. Throws
/// ConvergenceError when the gradient norm stays above tolerance.
SolveReport minimize_dual(const DualObjective& objective, std::vector<double> start,
                          const NewtonOptions& options);

/// Multipliers for a canonical distribution on `base` matching the targets.
///
/// Minimizes log Z(lambda) - sum lambda_i c_i from lambda = 0. Throws
/// InfeasibleError when a target sits on or outside its feature's attainable
/// range and ConvergenceError after max_iterations.
SolveReport solve_multipliers(const BoxPrior& base, const MomentConstraintSet& constraints,
                              double tol = 1e-9, int max_iterations = 200);

}  // namespace maxent
