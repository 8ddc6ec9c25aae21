#pragma once

// Maximum entropy on a finite state space with the whole marginal of a
// statistic T = f(x) constrained. Each bin probability P(T in bin) is the
// expectation of an indicator, so the solution is the prior reweighted by a
// per-bin factor g(bin(T)).

#include <cstdint>
#include <memory>
#include <vector>

#include "maxent/model.hpp"

namespace maxent {

/// Target marginal for a statistic over bins.
///
/// With `discrete_values` unset, `bin_edges` are sorted edges and bin k is
/// [edge_k, edge_{k+1}) with the last bin closed. With `discrete_values` set,
/// `bin_edges` lists the attainable values and bin k is {T == value_k}.
struct BinConstraintSet {
  Statistic statistic;
  std::vector<double> bin_edges;
  std::vector<double> target_probs;
  bool discrete_values = false;

  std::size_t bin_count() const {
    return discrete_values ? bin_edges.size() : bin_edges.size() - 1;
  }
};

/// A finite state space with a prior and the statistic evaluated per state.
class WeightedDiscreteModel {
 public:
  WeightedDiscreteModel(std::vector<State> states, std::vector<double> base_prior,
                        const Statistic& statistic);
  WeightedDiscreteModel(std::shared_ptr<const std::vector<State>> states,
                        std::vector<double> base_prior, std::vector<double> statistic_values);

  /// Uniform prior over the cartesian product of the given axes.
  static WeightedDiscreteModel grid(const std::vector<std::vector<double>>& axes,
                                    const Statistic& statistic);

  std::size_t size() const { return prior_.size(); }
  const std::vector<State>& states() const { return *states_; }
  const std::shared_ptr<const std::vector<State>>& shared_states() const { return states_; }
  const std::vector<double>& base_prior() const { return prior_; }
  const std::vector<double>& statistic_values() const { return values_; }
  DiscreteDistribution prior_distribution() const;

 private:
  std::shared_ptr<const std::vector<State>> states_;
  std::vector<double> prior_;
  std::vector<double> values_;
};

/// One indicator feature per bin; the last edge-bin is closed on the right.
/// Throws InvalidArgument for unsorted edges or fewer than two edges.
std::vector<Statistic> bin_indicator_features(const Statistic& s,
                                              const std::vector<double>& edges);

/// Equality indicators 1(f(x) == v) for each listed value.
std::vector<Statistic> value_indicator_features(const Statistic& s,
                                                const std::vector<double>& values);

/// Bin index of every state. Throws InvalidArgument if a state falls outside
/// every bin.
std::vector<std::size_t> assign_bins(const WeightedDiscreteModel& m, const BinConstraintSet& c);

/// Prior mass of every bin.
std::vector<double> bin_prior_mass(const WeightedDiscreteModel& m, const BinConstraintSet& c);

/// Bin marginals of `p` under the constraint set's binning.
std::vector<double> bin_marginals(const WeightedDiscreteModel& m, const BinConstraintSet& c,
                                  const DiscreteDistribution& p);

/// Per-bin multipliers: exp(lambda_b) = target_b / prior_mass_b, gauge-fixed
/// so the last bin with positive target has lambda = 0. Bins with zero
/// target get -infinity; bins with no prior mass and no target get 0.
/// Verifies the reweighted marginals by direct summation and throws
/// ConvergenceError if they miss the targets by more than `tol`.
std::vector<double> solve_bin_multipliers(const WeightedDiscreteModel& m,
                                          const BinConstraintSet& c, double tol = 1e-12);

/// Normalized distribution with state weight prior_k * g[bin(k)].
DiscreteDistribution reweight(const WeightedDiscreteModel& m, const std::vector<double>& g,
                              const BinConstraintSet& c);

/// exp(lambda) per bin, mapping -infinity to 0.
std::vector<double> exp_multipliers(const std::vector<double>& lambda);

/// Relative-entropy projection of the prior onto the constraint set: within
/// each bin p is proportional to the prior, scaled to the bin's target.
DiscreteDistribution brute_force_maxent(const WeightedDiscreteModel& m, const BinConstraintSet& c);

/// -sum_k p_k log(p_k / ref_k), with 0 log 0 = 0. Throws InvalidArgument when
/// p puts mass where the reference has none.
double entropy(const DiscreteDistribution& d, const DiscreteDistribution& reference);

/// Feasible alternatives to `p`: each state probability is multiplied by
/// exp(scale * N(0,1)) and every bin is rescaled back to its target.
std::vector<DiscreteDistribution> perturbed_feasible(const WeightedDiscreteModel& m,
                                                     const BinConstraintSet& c,
                                                     const DiscreteDistribution& p,
                                                     std::uint64_t seed, std::size_t count,
                                                     double scale = 0.5);

/// Maximum entropy under expected-value constraints on a finite state space:
/// p_k proportional to prior_k exp(sum_i lambda_i F[k][i]) with E_p[F_i] = targets_i.
struct DiscreteMomentSolution {
  std::vector<double> multipliers;
  DiscreteDistribution distribution;
  int iterations = 0;
  double dual_gradient_norm = 0.0;
};

DiscreteMomentSolution solve_discrete_moments(const WeightedDiscreteModel& m,
                                              const std::vector<std::vector<double>>& features,
                                              const std::vector<double>& targets,
                                              double tol = 1e-12, int max_iterations = 200);

/// Bin multipliers by Newton on the dual over the first B-1 indicators (the
/// last multiplier is the gauge). A cross-check for the closed form.
std::vector<double> solve_bin_multipliers_iterative(const WeightedDiscreteModel& m,
                                                    const BinConstraintSet& c,
                                                    double tol = 1e-10);

/// Random distributions with exactly the moments of `p` for the given
/// features: null-space perturbations of p scaled to stay nonnegative.
std::vector<DiscreteDistribution> random_feasible_alternatives(
    const WeightedDiscreteModel& m, const std::vector<std::vector<double>>& features,
    const DiscreteDistribution& p, std::uint64_t seed, std::size_t count);

}  // namespace maxent
