#include "maxent/indicator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "maxent/error.hpp"
#include "maxent/moment_solver.hpp"
#include "maxent/rng.hpp"

namespace maxent {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_prior(const std::vector<double>& prior) {
  double total = 0.0;
  for (double p : prior) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw InvalidArgument("WeightedDiscreteModel: prior must be nonnegative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("WeightedDiscreteModel: prior must sum to 1");
  }
}

void check_targets(const BinConstraintSet& c) {
  if (c.discrete_values ? c.bin_edges.empty() : c.bin_edges.size() < 2) {
    throw InvalidArgument("BinConstraintSet: need at least one bin");
  }
  if (!std::is_sorted(c.bin_edges.begin(), c.bin_edges.end()) ||
      std::adjacent_find(c.bin_edges.begin(), c.bin_edges.end()) != c.bin_edges.end()) {
    throw InvalidArgument("BinConstraintSet: edges must be strictly increasing");
  }
  if (c.target_probs.size() != c.bin_count()) {
    throw InvalidArgument("BinConstraintSet: one target probability per bin required");
  }
  double total = 0.0;
  for (double t : c.target_probs) {
    if (!(t >= 0.0)) throw InvalidArgument("BinConstraintSet: targets must be nonnegative");
    total += t;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("BinConstraintSet: targets must sum to 1");
  }
}

DiscreteDistribution normalized(const WeightedDiscreteModel& m, std::vector<double> w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw InvalidArgument("reweight: total mass is zero");
  }
  for (double& v : w) v /= total;
  return DiscreteDistribution(m.shared_states(), std::move(w));
}

}  // namespace

// ---------------------------------------------------------------------------
// WeightedDiscreteModel

WeightedDiscreteModel::WeightedDiscreteModel(std::vector<State> states,
                                             std::vector<double> base_prior,
                                             const Statistic& statistic)
    : states_(std::make_shared<const std::vector<State>>(std::move(states))),
      prior_(std::move(base_prior)) {
  if (states_->size() != prior_.size() || prior_.empty()) {
    throw InvalidArgument("WeightedDiscreteModel: one prior weight per state required");
  }
  check_prior(prior_);
  values_.reserve(states_->size());
  for (const auto& s : *states_) values_.push_back(statistic_eval(statistic, s));
}

WeightedDiscreteModel::WeightedDiscreteModel(std::shared_ptr<const std::vector<State>> states,
                                             std::vector<double> base_prior,
                                             std::vector<double> statistic_values)
    : states_(std::move(states)), prior_(std::move(base_prior)), values_(std::move(statistic_values)) {
  if (!states_ || states_->size() != prior_.size() || prior_.size() != values_.size() ||
      prior_.empty()) {
    throw InvalidArgument("WeightedDiscreteModel: states, prior and values differ in length");
  }
  check_prior(prior_);
}

WeightedDiscreteModel WeightedDiscreteModel::grid(const std::vector<std::vector<double>>& axes,
                                                  const Statistic& statistic) {
  if (axes.empty()) throw InvalidArgument("WeightedDiscreteModel::grid: no axes");
  std::vector<State> states{State{}};
  for (const auto& axis : axes) {
    if (axis.empty()) throw InvalidArgument("WeightedDiscreteModel::grid: empty axis");
    std::vector<State> next;
    next.reserve(states.size() * axis.size());
    for (const auto& s : states) {
      for (double v : axis) {
        next.push_back(s);
        next.back().push_back(v);
      }
    }
    states = std::move(next);
  }
  const std::size_t k = states.size();
  return WeightedDiscreteModel(std::move(states),
                               std::vector<double>(k, 1.0 / static_cast<double>(k)), statistic);
}

DiscreteDistribution WeightedDiscreteModel::prior_distribution() const {
  return DiscreteDistribution(states_, prior_);
}

// ---------------------------------------------------------------------------
// Features and binning

std::vector<Statistic> bin_indicator_features(const Statistic& s,
                                              const std::vector<double>& edges) {
  if (edges.size() < 2) throw InvalidArgument("bin_indicator_features: need at least 2 edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i - 1] < edges[i])) {
      throw InvalidArgument("bin_indicator_features: edges must be strictly increasing");
    }
  }
  std::vector<Statistic> out;
  out.reserve(edges.size() - 1);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    out.push_back(Statistic::bin_indicator(s, edges[i], edges[i + 1], i + 2 == edges.size()));
  }
  return out;
}

std::vector<Statistic> value_indicator_features(const Statistic& s,
                                                const std::vector<double>& values) {
  std::vector<Statistic> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(Statistic::bin_indicator(s, v, v, true));
  return out;
}

std::vector<std::size_t> assign_bins(const WeightedDiscreteModel& m, const BinConstraintSet& c) {
  check_targets(c);
  const auto& edges = c.bin_edges;
  std::vector<std::size_t> bins(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) {
    const double v = m.statistic_values()[k];
    std::size_t b = 0;
    bool found = false;
    if (c.discrete_values) {
      const auto it = std::lower_bound(edges.begin(), edges.end(), v);
      found = it != edges.end() && *it == v;
      b = static_cast<std::size_t>(it - edges.begin());
    } else if (v >= edges.front() && v <= edges.back()) {
      const auto it = std::upper_bound(edges.begin(), edges.end(), v);
      b = std::min(static_cast<std::size_t>(it - edges.begin()) - 1, edges.size() - 2);
      found = true;
    }
    if (!found) {
      std::ostringstream msg;
      msg << "bins do not cover statistic value " << v << " of state " << k;
      throw InvalidArgument(msg.str());
    }
    bins[k] = b;
  }
  return bins;
}

std::vector<double> bin_prior_mass(const WeightedDiscreteModel& m, const BinConstraintSet& c) {
  const auto bins = assign_bins(m, c);
  std::vector<double> mass(c.bin_count(), 0.0);
  for (std::size_t k = 0; k < m.size(); ++k) mass[bins[k]] += m.base_prior()[k];
  return mass;
}

std::vector<double> bin_marginals(const WeightedDiscreteModel& m, const BinConstraintSet& c,
                                  const DiscreteDistribution& p) {
  if (p.size() != m.size()) throw InvalidArgument("bin_marginals: size mismatch");
  const auto bins = assign_bins(m, c);
  std::vector<double> out(c.bin_count(), 0.0);
  for (std::size_t k = 0; k < m.size(); ++k) out[bins[k]] += p[k];
  return out;
}

// ---------------------------------------------------------------------------
// Closed-form solve, reweighting and the projection oracle

std::vector<double> solve_bin_multipliers(const WeightedDiscreteModel& m,
                                          const BinConstraintSet& c, double tol) {
  const auto mass = bin_prior_mass(m, c);
  const auto& target = c.target_probs;
  const std::size_t nb = mass.size();

  std::size_t gauge = nb;
  for (std::size_t b = 0; b < nb; ++b) {
    if (target[b] > 0.0 && !(mass[b] > 0.0)) {
      std::ostringstream msg;
      msg << "solve_bin_multipliers: bin " << b << " has target " << target[b]
          << " but no prior mass";
      throw InfeasibleError(msg.str());
    }
    if (target[b] > 0.0) gauge = b;
  }
  const double reference = std::log(target[gauge]) - std::log(mass[gauge]);
  std::vector<double> lambda(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    if (target[b] > 0.0) {
      lambda[b] = b == gauge ? 0.0 : std::log(target[b]) - std::log(mass[b]) - reference;
    } else if (mass[b] > 0.0) {
      lambda[b] = -kInf;
    }
  }

  const auto achieved = bin_marginals(m, c, reweight(m, exp_multipliers(lambda), c));
  for (std::size_t b = 0; b < nb; ++b) {
    if (std::abs(achieved[b] - target[b]) > tol) {
      std::ostringstream msg;
      msg << "solve_bin_multipliers: bin " << b << " marginal " << achieved[b]
          << " misses target " << target[b];
      throw ConvergenceError(msg.str());
    }
  }
  return lambda;
}

std::vector<double> exp_multipliers(const std::vector<double>& lambda) {
  std::vector<double> g(lambda.size());
  std::transform(lambda.begin(), lambda.end(), g.begin(),
                 [](double l) { return l == -kInf ? 0.0 : std::exp(l); });
  return g;
}

DiscreteDistribution reweight(const WeightedDiscreteModel& m, const std::vector<double>& g,
                              const BinConstraintSet& c) {
  if (g.size() != c.bin_count()) throw InvalidArgument("reweight: one factor per bin required");
  for (double v : g) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("reweight: factors must be nonnegative");
  }
  const auto bins = assign_bins(m, c);
  std::vector<double> w(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) w[k] = m.base_prior()[k] * g[bins[k]];
  return normalized(m, std::move(w));
}

DiscreteDistribution brute_force_maxent(const WeightedDiscreteModel& m,
                                        const BinConstraintSet& c) {
  const auto bins = assign_bins(m, c);
  std::vector<double> within(c.bin_count(), 0.0);
  for (std::size_t k = 0; k < m.size(); ++k) within[bins[k]] += m.base_prior()[k];
  for (std::size_t b = 0; b < within.size(); ++b) {
    if (c.target_probs[b] > 0.0 && !(within[b] > 0.0)) {
      throw InfeasibleError("brute_force_maxent: positive target on a bin without prior mass");
    }
  }
  std::vector<double> p(m.size(), 0.0);
  for (std::size_t k = 0; k < m.size(); ++k) {
    const std::size_t b = bins[k];
    if (c.target_probs[b] > 0.0) p[k] = c.target_probs[b] * (m.base_prior()[k] / within[b]);
  }
  return DiscreteDistribution(m.shared_states(), std::move(p));
}

double entropy(const DiscreteDistribution& d, const DiscreteDistribution& reference) {
  if (d.size() != reference.size()) throw InvalidArgument("entropy: size mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double p = d[k];
    if (p == 0.0) continue;
    if (!(reference[k] > 0.0)) {
      throw InvalidArgument("entropy: distribution is not absolutely continuous w.r.t. reference");
    }
    acc -= p * std::log(p / reference[k]);
  }
  return acc;
}

std::vector<DiscreteDistribution> perturbed_feasible(const WeightedDiscreteModel& m,
                                                     const BinConstraintSet& c,
                                                     const DiscreteDistribution& p,
                                                     std::uint64_t seed, std::size_t count,
                                                     double scale) {
  const auto bins = assign_bins(m, c);
  std::vector<DiscreteDistribution> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    CounterRng rng(SeededStream{seed, 0}, i);
    std::vector<double> q(m.size());
    std::vector<double> within(c.bin_count(), 0.0);
    for (std::size_t k = 0; k < m.size(); ++k) {
      q[k] = p[k] * std::exp(scale * rng.normal());
      within[bins[k]] += q[k];
    }
    for (std::size_t k = 0; k < m.size(); ++k) {
      const std::size_t b = bins[k];
      q[k] = within[b] > 0.0 ? c.target_probs[b] * (q[k] / within[b]) : 0.0;
    }
    out.push_back(normalized(m, std::move(q)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Iterative cross-check path

DiscreteMomentSolution solve_discrete_moments(const WeightedDiscreteModel& m,
                                              const std::vector<std::vector<double>>& features,
                                              const std::vector<double>& targets, double tol,
                                              int max_iterations) {
  if (features.size() != m.size()) {
    throw InvalidArgument("solve_discrete_moments: one feature row per state required");
  }
  const std::size_t nf = targets.size();
  for (const auto& row : features) {
    if (row.size() != nf) throw InvalidArgument("solve_discrete_moments: ragged feature rows");
  }
  const auto& prior = m.base_prior();

  // Tilted weights with a max shift; returns log Z and fills the normalized weights.
  auto tilt = [&](std::span<const double> lambda, std::vector<double>& w) {
    w.assign(m.size(), 0.0);
    double peak = -kInf;
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (!(prior[k] > 0.0)) continue;
      double e = std::log(prior[k]);
      for (std::size_t i = 0; i < nf; ++i) e += lambda[i] * features[k][i];
      w[k] = e;
      peak = std::max(peak, e);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      w[k] = prior[k] > 0.0 ? std::exp(w[k] - peak) : 0.0;
      total += w[k];
    }
    for (double& v : w) v /= total;
    return peak + std::log(total);
  };
  auto moments = [&](const std::vector<double>& w) {
    std::vector<double> e(nf, 0.0);
    for (std::size_t k = 0; k < m.size(); ++k) {
      for (std::size_t i = 0; i < nf; ++i) e[i] += w[k] * features[k][i];
    }
    return e;
  };

  DualObjective objective;
  objective.value = [&](std::span<const double> lambda) {
    std::vector<double> w;
    double v = tilt(lambda, w);
    for (std::size_t i = 0; i < nf; ++i) v -= lambda[i] * targets[i];
    return v;
  };
  objective.gradient = [&](std::span<const double> lambda) {
    std::vector<double> w;
    tilt(lambda, w);
    auto g = moments(w);
    for (std::size_t i = 0; i < nf; ++i) g[i] -= targets[i];
    return g;
  };
  objective.hessian = [&](std::span<const double> lambda) {
    std::vector<double> w;
    tilt(lambda, w);
    const auto e = moments(w);
    std::vector<double> h(nf * nf, 0.0);
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (w[k] == 0.0) continue;
      for (std::size_t i = 0; i < nf; ++i) {
        const double di = features[k][i] - e[i];
        for (std::size_t j = 0; j < nf; ++j) h[i * nf + j] += w[k] * di * (features[k][j] - e[j]);
      }
    }
    return h;
  };

  NewtonOptions options;
  options.tolerance = tol;
  options.max_iterations = max_iterations;
  const auto report = minimize_dual(objective, std::vector<double>(nf, 0.0), options);
  std::vector<double> w;
  tilt(report.multipliers, w);
  return {report.multipliers, normalized(m, std::move(w)), report.iterations,
          report.dual_gradient_norm};
}

std::vector<double> solve_bin_multipliers_iterative(const WeightedDiscreteModel& m,
                                                    const BinConstraintSet& c, double tol) {
  const auto bins = assign_bins(m, c);
  const auto mass = bin_prior_mass(m, c);
  const auto& target = c.target_probs;
  const std::size_t nb = c.bin_count();

  std::vector<std::size_t> active;
  for (std::size_t b = 0; b < nb; ++b) {
    if (target[b] > 0.0 && !(mass[b] > 0.0)) {
      throw InfeasibleError("solve_bin_multipliers_iterative: positive target on an empty bin");
    }
    if (target[b] > 0.0) active.push_back(b);
  }
  const std::size_t gauge = active.back();
  active.pop_back();

  // States in zero-target bins carry no mass at the solution.
  std::vector<double> prior(m.size(), 0.0);
  double kept = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (target[bins[k]] > 0.0) {
      prior[k] = m.base_prior()[k];
      kept += prior[k];
    }
  }
  for (double& v : prior) v /= kept;
  const WeightedDiscreteModel restricted(m.shared_states(), std::move(prior), m.statistic_values());

  std::vector<std::vector<double>> features(m.size(), std::vector<double>(active.size(), 0.0));
  std::vector<double> targets(active.size());
  for (std::size_t i = 0; i < active.size(); ++i) {
    targets[i] = target[active[i]];
    for (std::size_t k = 0; k < m.size(); ++k) features[k][i] = bins[k] == active[i] ? 1.0 : 0.0;
  }

  std::vector<double> lambda(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    if (!(target[b] > 0.0) && mass[b] > 0.0) lambda[b] = -kInf;
  }
  lambda[gauge] = 0.0;
  if (!active.empty()) {
    const auto solution = solve_discrete_moments(restricted, features, targets, tol);
    for (std::size_t i = 0; i < active.size(); ++i) lambda[active[i]] = solution.multipliers[i];
  }
  return lambda;
}

std::vector<DiscreteDistribution> random_feasible_alternatives(
    const WeightedDiscreteModel& m, const std::vector<std::vector<double>>& features,
    const DiscreteDistribution& p, std::uint64_t seed, std::size_t count) {
  if (features.size() != m.size() || p.size() != m.size()) {
    throw InvalidArgument("random_feasible_alternatives: size mismatch");
  }
  std::vector<std::size_t> support;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0) support.push_back(k);
  }
  const auto s = static_cast<Eigen::Index>(support.size());
  const auto nf = static_cast<Eigen::Index>(features.front().size());

  // Constraint rows: total mass and every feature, restricted to the support.
  Eigen::MatrixXd a(nf + 1, s);
  for (Eigen::Index j = 0; j < s; ++j) {
    a(0, j) = 1.0;
    for (Eigen::Index i = 0; i < nf; ++i) a(i + 1, j) = features[support[j]][i];
  }
  const Eigen::MatrixXd gram = a * a.transpose();
  const auto decomposition = gram.completeOrthogonalDecomposition();

  std::vector<DiscreteDistribution> out;
  out.reserve(count);
  for (std::size_t draw = 0; out.size() < count; ++draw) {
    if (draw > 10 * count + 100) {
      throw ConvergenceError("random_feasible_alternatives: constraints leave no free direction");
    }
    CounterRng rng(SeededStream{seed, 1}, draw);
    Eigen::VectorXd delta(s);
    for (Eigen::Index j = 0; j < s; ++j) delta(j) = rng.normal() * p[support[j]];
    delta -= a.transpose() * decomposition.solve(a * delta);

    double reach = kInf;
    for (Eigen::Index j = 0; j < s; ++j) {
      if (delta(j) < 0.0) reach = std::min(reach, p[support[j]] / -delta(j));
    }
    if (!std::isfinite(reach) || delta.cwiseAbs().maxCoeff() < 1e-14) continue;
    const double t = reach * rng.uniform(0.05, 0.95);

    std::vector<double> q(p.probs());
    for (Eigen::Index j = 0; j < s; ++j) {
      q[support[j]] = std::max(0.0, q[support[j]] + t * delta(j));
    }
    out.push_back(normalized(m, std::move(q)));
  }
  return out;
}

}  // namespace maxent
