#include "maxent/moment_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "maxent/error.hpp"

namespace maxent {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Below this value of |b| * max(lo^2, hi^2) the truncated-Gaussian closed form
// loses digits to cancellation and the coordinate is integrated numerically.
constexpr double kNearFlatQuadratic = 1e-6;

struct CoordinateResult {
  double log_integral = 0.0;
  double mean = 0.0;
  double second_moment = 0.0;
  bool analytic = true;
};

double log_integral_quadrature(double a, double b, double lo, double hi) {
  auto phi = [&](double x) { return a * x + b * x * x; };
  double peak = std::max(phi(lo), phi(hi));
  if (b < 0.0) {
    const double vertex = std::clamp(-a / (2.0 * b), lo, hi);
    peak = std::max(peak, phi(vertex));
  }
  auto integrand = [&](double x) { return std::exp(phi(x) - peak); };
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, lo, hi, 30, 1e-14, &error);
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ConvergenceError("log_partition: coordinate quadrature failed");
  }
  return peak + std::log(value);
}

CoordinateResult coordinate(const CoordinateExponent& e, double lo, double hi,
                            PartitionBackend backend) {
  const double a = e.linear;
  const double b = e.quadratic;
  const double reach = std::max(lo * lo, hi * hi);
  if (backend == PartitionBackend::Automatic) {
    if (b == 0.0) {
      const auto m = exponential_coordinate(a, lo, hi);
      return {m.log_integral, m.mean, m.second_moment, true};
    }
    if (b < 0.0 && -b * reach >= kNearFlatQuadratic) {
      const auto m = gaussian_coordinate(a, b, lo, hi);
      return {m.log_integral, m.mean, m.second_moment, true};
    }
  }
  CoordinateResult r;
  r.log_integral = log_integral_quadrature(a, b, lo, hi);
  r.analytic = false;
  return r;
}

struct PartitionEvaluation {
  double log_partition = 0.0;
  double sum_mean = 0.0;
  double sum_second_moment = 0.0;
  bool analytic = true;
};

CoordinateExponent require_exponent(const CanonicalDistribution& d) {
  const auto e = d.coordinate_exponent();
  if (!e) {
    throw UnsupportedModel(
        "log_partition: features do not separate coordinate-wise and have no closed form");
  }
  return *e;
}

PartitionEvaluation evaluate(const CanonicalDistribution& d, PartitionBackend backend) {
  const auto e = require_exponent(d);
  const BoxPrior& box = d.base();
  PartitionEvaluation out;
  // Coordinates sharing an interval share the per-coordinate integral.
  std::map<std::pair<double, double>, std::pair<CoordinateResult, std::size_t>> groups;
  for (std::size_t i = 0; i < box.dimension(); ++i) {
    auto key = std::make_pair(box.lower(i), box.upper(i));
    auto it = groups.find(key);
    if (it == groups.end()) {
      groups.emplace(key, std::make_pair(coordinate(e, key.first, key.second, backend), 1));
    } else {
      ++it->second.second;
    }
  }
  for (const auto& [bounds, entry] : groups) {
    const auto& [r, count] = entry;
    const double k = static_cast<double>(count);
    out.log_partition += k * (r.log_integral - std::log(bounds.second - bounds.first));
    out.sum_mean += k * r.mean;
    out.sum_second_moment += k * r.second_moment;
    out.analytic = out.analytic && r.analytic;
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::vector<double> finite_difference_hessian(const DualObjective& objective,
                                              std::span<const double> x) {
  const std::size_t m = x.size();
  std::vector<double> h(m * m, 0.0);
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t j = 0; j < m; ++j) {
    const double step = 1e-4 * std::max(1.0, std::abs(x[j]));
    probe[j] = x[j] + step;
    const auto gp = objective.gradient(probe);
    probe[j] = x[j] - step;
    const auto gm = objective.gradient(probe);
    probe[j] = x[j];
    for (std::size_t i = 0; i < m; ++i) h[i * m + j] = (gp[i] - gm[i]) / (2.0 * step);
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double s = 0.5 * (h[i * m + j] + h[j * m + i]);
      h[i * m + j] = s;
      h[j * m + i] = s;
    }
  }
  return h;
}

std::vector<double> newton_direction(std::span<const double> hessian,
                                     std::span<const double> gradient) {
  const auto m = static_cast<Eigen::Index>(gradient.size());
  const Eigen::Map<const Eigen::MatrixXd> h(hessian.data(), m, m);
  const Eigen::Map<const Eigen::VectorXd> g(gradient.data(), m);
  const double scale = std::max(1e-300, h.diagonal().cwiseAbs().maxCoeff());
  for (double shift = 0.0; shift < 1e6 * scale; shift = shift == 0.0 ? 1e-10 * scale : shift * 100) {
    Eigen::MatrixXd reg = h;
    reg.diagonal().array() += shift;
    Eigen::LLT<Eigen::MatrixXd> llt(reg);
    if (llt.info() != Eigen::Success) continue;
    Eigen::VectorXd p = llt.solve(-g);
    if (p.allFinite()) return {p.data(), p.data() + m};
  }
  std::vector<double> p(gradient.begin(), gradient.end());
  for (double& v : p) v = -v;
  return p;
}

}  // namespace

double log_partition(const CanonicalDistribution& d, PartitionBackend backend) {
  return evaluate(d, backend).log_partition;
}

std::vector<double> expected_statistics(const CanonicalDistribution& d,
                                        PartitionBackend backend) {
  const auto eval = evaluate(d, backend);
  const auto& features = d.features();
  std::vector<double> out(features.size(), 0.0);
  if (eval.analytic) {
    const double n = static_cast<double>(d.dimension());
    for (std::size_t i = 0; i < features.size(); ++i) {
      switch (features[i].kind()) {
        case StatisticKind::Mean: out[i] = eval.sum_mean / n; break;
        case StatisticKind::Sum: out[i] = eval.sum_mean; break;
        case StatisticKind::SumOfSquares: out[i] = eval.sum_second_moment; break;
        default: break;
      }
    }
    return out;
  }
  std::vector<double> lambda = d.multipliers();
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double step = 1e-6 * std::max(1.0, std::abs(lambda[i]));
    const double centre = lambda[i];
    lambda[i] = centre + step;
    const double up = log_partition(d.with_multipliers(lambda), backend);
    lambda[i] = centre - step;
    const double down = log_partition(d.with_multipliers(lambda), backend);
    lambda[i] = centre;
    out[i] = (up - down) / (2.0 * step);
  }
  return out;
}

std::pair<double, double> feature_range(const Statistic& f, const BoxPrior& box) {
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t i = 0; i < box.dimension(); ++i) {
    const double l = box.lower(i);
    const double u = box.upper(i);
    switch (f.kind()) {
      case StatisticKind::Mean:
      case StatisticKind::Sum:
        lo += l;
        hi += u;
        break;
      case StatisticKind::SumOfSquares:
        lo += (l <= 0.0 && u >= 0.0) ? 0.0 : std::min(l * l, u * u);
        hi += std::max(l * l, u * u);
        break;
      default:
        throw UnsupportedModel("feature_range: only coordinate-wise features have a box range");
    }
  }
  if (f.kind() == StatisticKind::Mean) {
    const double n = static_cast<double>(box.dimension());
    lo /= n;
    hi /= n;
  }
  return {lo, hi};
}

SolveReport minimize_dual(const DualObjective& objective, std::vector<double> start,
                          const NewtonOptions& options) {
  SolveReport report;
  std::vector<double> x = std::move(start);
  double f = objective.value(x);
  std::vector<double> g = objective.gradient(x);
  report.dual_trace.push_back(f);

  for (int iter = 0;; ++iter) {
    report.iterations = iter;
    report.dual_gradient_norm = max_abs(g);
    if (report.dual_gradient_norm <= options.tolerance) break;
    if (iter >= options.max_iterations) {
      std::ostringstream msg;
      msg << "Newton solve: gradient norm " << report.dual_gradient_norm << " above tolerance "
          << options.tolerance << " after " << iter << " iterations";
      throw ConvergenceError(msg.str());
    }

    const auto hessian = objective.hessian ? objective.hessian(x)
                                           : finite_difference_hessian(objective, x);
    std::vector<double> p = newton_direction(hessian, g);
    double slope = dot(g, p);
    if (!(slope < 0.0)) {
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = -g[i];
      slope = -dot(g, g);
    }

    std::vector<double> trial(x.size());
    double step = 1.0;
    bool accepted = false;
    double f_trial = 0.0;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + step * p[i];
      try {
        f_trial = objective.value(trial);
      } catch (const Error&) {
        continue;
      }
      if (!std::isfinite(f_trial)) continue;
      if (f_trial <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // At the rounding floor the Armijo test cannot distinguish values; take the
      // full step if it does not raise the objective and shrinks the gradient.
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + p[i];
      f_trial = objective.value(trial);
      const auto g_trial = objective.gradient(trial);
      if (f_trial <= f && max_abs(g_trial) < report.dual_gradient_norm) {
        accepted = true;
      } else {
        std::ostringstream msg;
        msg << "Newton solve: line search failed at gradient norm " << report.dual_gradient_norm;
        throw ConvergenceError(msg.str());
      }
    }
    if (f_trial > f) throw ConvergenceError("Newton solve: accepted step increased the dual");
    x = trial;
    f = f_trial;
    g = objective.gradient(x);
    report.dual_trace.push_back(f);
  }
  report.multipliers = std::move(x);
  return report;
}

SolveReport solve_multipliers(const BoxPrior& base, const MomentConstraintSet& constraints,
                              double tol, int max_iterations) {
  const auto& features = constraints.features;
  const auto& targets = constraints.targets;
  if (features.empty() || features.size() != targets.size()) {
    throw InvalidArgument("solve_multipliers: need one target per feature");
  }
  if (!(tol > 0.0)) throw InvalidArgument("solve_multipliers: tolerance must be positive");

  bool linear_seen = false;
  bool quadratic_seen = false;
  double linear_mean = 0.0;     // target per-coordinate mean
  double quadratic_mean = 0.0;  // target per-coordinate second moment
  const double n = static_cast<double>(base.dimension());
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (!features[i].is_coordinatewise()) {
      throw UnsupportedModel("solve_multipliers: only mean, sum and sum_of_squares constraints");
    }
    const auto [lo, hi] = feature_range(features[i], base);
    if (!(targets[i] > lo && targets[i] < hi)) {
      std::ostringstream msg;
      msg << "solve_multipliers: target " << targets[i] << " for " << features[i].name()
          << " is outside the attainable open range (" << lo << ", " << hi << ")";
      throw InfeasibleError(msg.str());
    }
    const bool quadratic = features[i].kind() == StatisticKind::SumOfSquares;
    bool& seen = quadratic ? quadratic_seen : linear_seen;
    if (seen) {
      throw InvalidArgument("solve_multipliers: linearly dependent features");
    }
    seen = true;
    if (quadratic) {
      quadratic_mean = targets[i] / n;
    } else {
      linear_mean = features[i].kind() == StatisticKind::Mean ? targets[i] : targets[i] / n;
    }
  }
  if (linear_seen && quadratic_seen && !(quadratic_mean > linear_mean * linear_mean)) {
    throw InfeasibleError(
        "solve_multipliers: second-moment target leaves no room for positive variance");
  }

  const CanonicalDistribution family(base, features, std::vector<double>(features.size(), 0.0));
  DualObjective objective;
  objective.value = [&](std::span<const double> lambda) {
    const auto d = family.with_multipliers({lambda.begin(), lambda.end()});
    return log_partition(d) - dot(lambda, targets);
  };
  objective.gradient = [&](std::span<const double> lambda) {
    auto grad = expected_statistics(family.with_multipliers({lambda.begin(), lambda.end()}));
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] -= targets[i];
    return grad;
  };

  NewtonOptions options;
  options.tolerance = tol;
  options.max_iterations = max_iterations;
  SolveReport report =
      minimize_dual(objective, std::vector<double>(features.size(), 0.0), options);
  const auto solution = family.with_multipliers(report.multipliers);
  report.log_partition = log_partition(solution);
  report.achieved_moments = expected_statistics(solution);
  return report;
}

}  // namespace maxent
