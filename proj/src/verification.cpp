#include "maxent/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "maxent/error.hpp"
#include "maxent/moment_solver.hpp"
#include "maxent/parallel.hpp"
#include "maxent/truncated.hpp"

namespace maxent {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Below this a log-value exponentiates to zero in double precision.
constexpr double kUnderflow = -750.0;

// ---------------------------------------------------------------------------
// One-dimensional log-space adaptive Simpson

struct Panel {
  double a, m, b;
  double fa, fm, fb;
  double whole;
};

class SimpsonIntegrator {
 public:
  SimpsonIntegrator(const std::function<double(double)>& log_f, double shift, int max_depth)
      : log_f_(log_f), shift_(shift), noise_(1e-10 * std::abs(shift)), max_depth_(max_depth) {}

  double f(double x) const {
    if (++evaluations_ > kBudget) {
      throw ConvergenceError("quadrature exceeded its evaluation budget");
    }
    const double v = log_f_(x);
    return std::isnan(v) ? 0.0 : std::exp(v - shift_);
  }

  Panel panel(double a, double b) const {
    const double m = 0.5 * (a + b);
    Panel p{a, m, b, f(a), f(m), f(b), 0.0};
    p.whole = (b - a) / 6.0 * (p.fa + 4.0 * p.fm + p.fb);
    return p;
  }

  double adapt(const Panel& p, double eps, int depth) const {
    const double lm = 0.5 * (p.a + p.m);
    const double rm = 0.5 * (p.m + p.b);
    const double flm = f(lm);
    const double frm = f(rm);
    const Panel left{p.a, lm, p.m, p.fa, flm, p.fm, (p.m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm)};
    const Panel right{p.m, rm, p.b, p.fm, frm, p.fb, (p.b - p.m) / 6.0 * (p.fm + 4.0 * frm + p.fb)};
    const double delta = left.whole + right.whole - p.whole;
    // A discrepancy within the evaluation noise of the panel cannot shrink further.
    const bool converged = std::abs(delta) <= std::max(15.0 * eps, noise_ * std::abs(p.whole));
    const bool resolved = p.b - p.a <= 1e-12 * std::max({1.0, std::abs(p.a), std::abs(p.b)});
    if ((depth >= 3 && converged) || resolved) {
      return left.whole + right.whole + delta / 15.0;
    }
    if (depth >= max_depth_) {
      std::ostringstream msg;
      msg << "quadrature did not converge on [" << p.a << ", " << p.b << "] at depth "
          << max_depth_;
      throw ConvergenceError(msg.str());
    }
    return adapt(left, 0.5 * eps, depth + 1) + adapt(right, 0.5 * eps, depth + 1);
  }

 private:
  static constexpr std::size_t kBudget = std::size_t{1} << 20;

  const std::function<double(double)>& log_f_;
  double shift_;
  double noise_;
  int max_depth_;
  mutable std::size_t evaluations_ = 0;
};

double golden_max(const std::function<double(double)>& g, double a, double b, double& best) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double gc = g(c);
  double gd = g(d);
  for (int i = 0; i < 200 && (b - a) > 1e-13 * std::max(1.0, std::abs(a) + std::abs(b)); ++i) {
    if (gc >= gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - r * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + r * (b - a);
      gd = g(d);
    }
  }
  best = std::max(gc, gd);
  return gc >= gd ? c : d;
}

// Width of the peak from the curvature of log f, shrinking the difference
// step until it is well inside the peak.
double peak_width(const std::function<double(double)>& g, double p, double gp, double lo,
                  double hi) {
  double step = (hi - lo) / 256.0;
  double width = -1.0;
  for (int i = 0; i < 60; ++i) {
    double x0 = p - step;
    double x2 = p + step;
    double mid = p;
    double gmid = gp;
    if (x0 < lo) {
      x0 = p;
      mid = p + step;
      x2 = p + 2.0 * step;
      gmid = g(mid);
    } else if (x2 > hi) {
      x2 = p;
      mid = p - step;
      x0 = p - 2.0 * step;
      gmid = g(mid);
    }
    const double curvature = (g(x0) - 2.0 * gmid + g(x2)) / (step * step);
    if (!(curvature < 0.0) || !std::isfinite(curvature)) break;
    width = 1.0 / std::sqrt(-curvature);
    if (step <= 0.25 * width) return width;
    step = 0.25 * width;
  }
  return width > 0.0 ? width : (hi - lo) / 64.0;
}

// ---------------------------------------------------------------------------
// Per-point summaries for closed-form conditional densities

struct CoordinateGroup {
  double lo, hi;
  double count = 0.0;
  double sum = 0.0;
  double mean = 0.0;
  double centered = 0.0;  // sum of squared deviations from the group mean
};

std::vector<CoordinateGroup> summarize(const BoxPrior& box, std::span<const double> x) {
  std::vector<CoordinateGroup> groups;
  std::vector<std::size_t> index(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lo = box.lower(i);
    const double hi = box.upper(i);
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const CoordinateGroup& g) { return g.lo == lo && g.hi == hi; });
    if (it == groups.end()) {
      groups.push_back({lo, hi});
      it = groups.end() - 1;
    }
    index[i] = static_cast<std::size_t>(it - groups.begin());
    it->count += 1.0;
    it->sum += x[i];
  }
  for (auto& g : groups) g.mean = g.sum / g.count;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - groups[index[i]].mean;
    groups[index[i]].centered += d * d;
  }
  return groups;
}

// log p(x) for the per-coordinate exponent a x + b x^2 with b <= 0.
double exponent_log_density(const std::vector<CoordinateGroup>& groups, double a, double b) {
  double acc = 0.0;
  for (const auto& g : groups) {
    if (b == 0.0) {
      acc += a * g.sum - g.count * log_integral_exp_linear(a, g.lo, g.hi);
    } else {
      const double mu = -a / (2.0 * b);
      const double sigma = std::sqrt(-0.5 / b);
      const double dev = g.mean - mu;
      acc += -(g.centered + g.count * dev * dev) / (2.0 * sigma * sigma) -
             g.count * log_integral_gaussian(mu, sigma, g.lo, g.hi);
    }
  }
  return acc;
}

std::optional<CoordinateExponent> exponent_of(const std::vector<Statistic>& features,
                                              std::span<const double> multipliers, double n) {
  CoordinateExponent e;
  for (std::size_t i = 0; i < features.size(); ++i) {
    switch (features[i].kind()) {
      case StatisticKind::Mean: e.linear += multipliers[i] / n; break;
      case StatisticKind::Sum: e.linear += multipliers[i]; break;
      case StatisticKind::SumOfSquares: e.quadratic += multipliers[i]; break;
      default: return std::nullopt;
    }
  }
  if (e.quadratic > 0.0) return std::nullopt;
  return e;
}

// ---------------------------------------------------------------------------
// Integration over the hyperprior

using HyperLogFunction = std::function<double(std::span<const double>)>;

struct FreeComponent {
  std::size_t index;
  double lo, hi;
  double log_density;
  std::vector<double> hints;
};

std::vector<double> point_hyper(const HierarchicalModel& m) {
  std::vector<double> h;
  for (const auto& c : m.hyperprior().components()) h.push_back(c.value(c.lo));
  return h;
}

double tensor_grid(const HyperLogFunction& g, std::vector<double> h, const FreeComponent& c0,
                   const FreeComponent& c1, const HierarchicalModel& m, int depth) {
  const std::size_t nodes = (std::size_t{1} << depth) + 1;
  const auto& comps = m.hyperprior().components();
  auto weights = [&](const FreeComponent& c) {
    const double step = (c.hi - c.lo) / static_cast<double>(nodes - 1);
    std::vector<double> w(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
      const double k = (i == 0 || i + 1 == nodes) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      w[i] = std::log(k * step / 3.0);
    }
    return w;
  };
  const auto w0 = weights(c0);
  const auto w1 = weights(c1);
  std::vector<double> terms;
  terms.reserve(nodes * nodes);
  double peak = -kInf;
  for (std::size_t i = 0; i < nodes; ++i) {
    const double u0 = c0.lo + (c0.hi - c0.lo) * static_cast<double>(i) / static_cast<double>(nodes - 1);
    h[c0.index] = comps[c0.index].value(u0);
    for (std::size_t j = 0; j < nodes; ++j) {
      const double u1 =
          c1.lo + (c1.hi - c1.lo) * static_cast<double>(j) / static_cast<double>(nodes - 1);
      h[c1.index] = comps[c1.index].value(u1);
      const double t = w0[i] + w1[j] + g(h);
      terms.push_back(t);
      if (t > peak) peak = t;
    }
  }
  if (peak == -kInf) return -kInf;
  double total = 0.0;
  for (double t : terms) total += std::exp(t - peak);
  return peak + std::log(total) + c0.log_density + c1.log_density;
}

// log of int p(u) exp(g(h(u))) du over the free components.
double integrate_hyper(const HierarchicalModel& m, const HyperLogFunction& g,
                       const QuadratureSpec& q,
                       const std::vector<std::vector<double>>& hints_by_component,
                       double negligible = -kInf) {
  q.validate();
  const auto& comps = m.hyperprior().components();
  std::vector<FreeComponent> free;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (comps[i].is_point()) continue;
    std::vector<double> hints;
    if (i < hints_by_component.size()) {
      for (double v : hints_by_component[i]) {
        if (std::isfinite(v)) hints.push_back(std::clamp(v, comps[i].lo, comps[i].hi));
      }
    }
    free.push_back({i, comps[i].lo, comps[i].hi, comps[i].log_density(), std::move(hints)});
  }
  if (free.size() > 2) {
    throw UnsupportedModel("marginal quadrature supports at most two free hyperparameters");
  }
  std::vector<double> h = point_hyper(m);
  if (free.empty()) return g(h);

  if (q.rule == QuadratureSpec::Rule::TensorGrid) {
    if (free.size() != 2) {
      throw InvalidArgument("tensor-grid quadrature requires two free hyperparameters");
    }
    return tensor_grid(g, h, free[0], free[1], m, q.max_depth);
  }

  if (free.size() == 1) {
    const auto& c = free[0];
    return c.log_density + log_integrate(
                               [&](double u) {
                                 h[c.index] = comps[c.index].value(u);
                                 return g(h);
                               },
                               c.lo, c.hi, q.rel_tol, q.max_depth, c.hints, negligible);
  }

  // Outer over the second component, inner over the first; the inner
  // tolerance is tighter so its noise does not stall the outer refinement.
  const auto& inner = free[0];
  const auto& outer = free[1];
  const double inner_tol = q.rel_tol * 1e-3;
  return inner.log_density + outer.log_density +
         log_integrate(
             [&](double v) {
               h[outer.index] = comps[outer.index].value(v);
               return log_integrate(
                   [&](double u) {
                     h[inner.index] = comps[inner.index].value(u);
                     return g(h);
                   },
                   inner.lo, inner.hi, inner_tol, q.max_depth, inner.hints, negligible);
             },
             outer.lo, outer.hi, q.rel_tol, q.max_depth, outer.hints, negligible);
}

// Value v of component i mapped into its uniform coordinate.
double to_coordinate(const HyperComponent& c, double v) {
  if (c.kind == HyperComponent::Kind::LogUniform) return v > 0.0 ? std::log(v) : -kInf;
  return v;
}

// Hint locations for the posterior peak over the hyperparameters given x.
std::vector<std::vector<double>> marginal_hints(const HierarchicalModel& m,
                                                std::span<const double> x) {
  const auto& comps = m.hyperprior().components();
  std::vector<std::vector<double>> hints(comps.size());
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  switch (m.link()) {
    case LinkKind::ExponentialRate:
    case LinkKind::ExponentialMean:
      hints[0].push_back(to_coordinate(comps[0], mean));
      break;
    case LinkKind::Gaussian:
      hints[0].push_back(to_coordinate(comps[0], mean));
      hints[1].push_back(to_coordinate(comps[1], std::sqrt(ss / n)));
      break;
    case LinkKind::Identity:
      break;
  }
  return hints;
}

// ---------------------------------------------------------------------------
// Conditional laws of a statistic

enum class LawKind { Gamma, Normal, ScaledNoncentralChiSquare };

struct Law {
  LawKind kind;
  double p1, p2, p3;  // gamma (shape, scale); normal (mean, sd); chi2 (sigma^2, dof, noncentrality)
};

class StatisticLaw {
 public:
  StatisticLaw(const HierarchicalModel& m, const Statistic& f) : m_(m), f_(f) {
    const auto& box = m.base();
    n_ = static_cast<double>(m.dimension());
    const bool exponential =
        m.link() == LinkKind::ExponentialRate || m.link() == LinkKind::ExponentialMean;
    if (exponential && (f.kind() == StatisticKind::Mean || f.kind() == StatisticKind::Sum)) {
      if (!box.is_cube() || box.lower(0) != 0.0) {
        throw UnsupportedModel("implied marginal: exponential law needs the box [0, hi]^n");
      }
      const auto& c = m.hyperprior().components()[0];
      const double theta_min = std::min(rate(c.value(c.lo)), rate(c.value(c.hi)));
      if (n_ * std::exp(-theta_min * box.upper(0)) > 1e-6) {
        throw UnsupportedModel(
            "implied marginal: truncation is not negligible for the gamma law of the mean");
      }
      kind_ = LawKind::Gamma;
    } else if (m.link() == LinkKind::Gaussian &&
               (f.kind() == StatisticKind::Sum || f.kind() == StatisticKind::Mean)) {
      kind_ = LawKind::Normal;
    } else if (m.link() == LinkKind::Gaussian && f.kind() == StatisticKind::SumOfSquares) {
      kind_ = LawKind::ScaledNoncentralChiSquare;
    } else {
      throw UnsupportedModel("implied marginal: no closed-form conditional law for " + f.name() +
                             " under the " + to_string(m.link()) + " link");
    }
  }

  Law at(std::span<const double> hyper) const {
    const double scale = f_.kind() == StatisticKind::Mean ? 1.0 / n_ : 1.0;
    switch (kind_) {
      case LawKind::Gamma:
        return {kind_, n_, scale / rate(hyper[0]), 0.0};
      case LawKind::Normal: {
        const auto mult = m_.multipliers(hyper);
        const auto e = exponent_of(m_.features(), mult, n_);
        const auto c = gaussian_coordinate(e->linear, e->quadratic, m_.base().lower(0),
                                           m_.base().upper(0));
        const double var = std::max(c.second_moment - c.mean * c.mean, 0.0);
        return {kind_, scale * n_ * c.mean, scale * std::sqrt(n_ * var), 0.0};
      }
      case LawKind::ScaledNoncentralChiSquare: {
        const double s2 = hyper[1] * hyper[1];
        return {kind_, s2, n_, n_ * hyper[0] * hyper[0] / s2};
      }
    }
    return {};
  }

  static double log_pdf(const Law& law, double t) {
    switch (law.kind) {
      case LawKind::Gamma:
        if (!(t > 0.0)) return -kInf;
        return (law.p1 - 1.0) * std::log(t) - t / law.p2 - std::lgamma(law.p1) -
               law.p1 * std::log(law.p2);
      case LawKind::Normal:
        if (law.p2 == 0.0) return -kInf;
        return log_normal_pdf((t - law.p1) / law.p2) - std::log(law.p2);
      case LawKind::ScaledNoncentralChiSquare: {
        if (!(t > 0.0)) return -kInf;
        const boost::math::non_central_chi_squared chi(law.p2, law.p3);
        return std::log(boost::math::pdf(chi, t / law.p1)) - std::log(law.p1);
      }
    }
    return -kInf;
  }

  // log P(a <= T <= b).
  static double log_interval(const Law& law, double a, double b) {
    if (!(a < b)) return -kInf;
    switch (law.kind) {
      case LawKind::Gamma: {
        const double lo = std::max(a, 0.0) / law.p2;
        const double hi = std::max(b, 0.0) / law.p2;
        if (!(hi > lo)) return -kInf;
        const double mass = lo >= law.p1
                                ? boost::math::gamma_q(law.p1, lo) - boost::math::gamma_q(law.p1, hi)
                                : boost::math::gamma_p(law.p1, hi) - boost::math::gamma_p(law.p1, lo);
        return mass > 0.0 ? std::log(mass) : -kInf;
      }
      case LawKind::Normal:
        return log_normal_interval((a - law.p1) / law.p2, (b - law.p1) / law.p2);
      case LawKind::ScaledNoncentralChiSquare: {
        const boost::math::non_central_chi_squared chi(law.p2, law.p3);
        const double lo = std::max(a, 0.0) / law.p1;
        const double hi = std::max(b, 0.0) / law.p1;
        if (!(hi > lo)) return -kInf;
        const double mass = boost::math::cdf(chi, hi) - boost::math::cdf(chi, lo);
        return mass > 0.0 ? std::log(mass) : -kInf;
      }
    }
    return -kInf;
  }

  // Hints for the peak over the hyperparameters when T is near t.
  std::vector<std::vector<double>> hints(double t) const {
    const auto& comps = m_.hyperprior().components();
    std::vector<std::vector<double>> out(comps.size());
    const double per_coordinate = f_.kind() == StatisticKind::Mean ? t : t / n_;
    if (kind_ == LawKind::Gamma) {
      out[0].push_back(to_coordinate(comps[0], per_coordinate));
    } else if (kind_ == LawKind::Normal) {
      out[0].push_back(to_coordinate(comps[0], per_coordinate));
    }
    return out;
  }

 private:
  // Per-coordinate exponential rate for the hyperparameter value mu.
  double rate(double mu) const {
    const double h[] = {mu};
    const auto mult = m_.multipliers(h);
    return -exponent_of(m_.features(), mult, n_)->linear;
  }

  const HierarchicalModel& m_;
  Statistic f_;
  double n_ = 1.0;
  LawKind kind_ = LawKind::Gamma;
};

}  // namespace

// ---------------------------------------------------------------------------

void QuadratureSpec::validate() const {
  if (!(rel_tol > 0.0)) throw InvalidArgument("QuadratureSpec: relTol must be positive");
  if (max_depth < 1) throw InvalidArgument("QuadratureSpec: maxDepth must be positive");
  if (rule == Rule::TensorGrid && max_depth > 12) {
    throw InvalidArgument("QuadratureSpec: tensor-grid maxDepth is limited to 12");
  }
}

std::string to_string(QuadratureSpec::Rule rule) {
  return rule == QuadratureSpec::Rule::TensorGrid ? "tensor-grid" : "adaptive-simpson";
}

double log_integrate(const std::function<double(double)>& log_f, double lo, double hi,
                     double rel_tol, int max_depth, std::span<const double> hints,
                     double negligible) {
  if (!(lo < hi)) {
    if (lo == hi) return -kInf;
    throw InvalidArgument("log_integrate: empty interval");
  }
  constexpr int kScan = 129;
  const double spacing = (hi - lo) / (kScan - 1);
  double best_x = lo;
  double best = -kInf;
  auto consider = [&](double x) {
    const double v = log_f(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  };
  for (int i = 0; i < kScan; ++i) consider(i + 1 == kScan ? hi : lo + spacing * i);
  for (double h : hints) consider(std::clamp(h, lo, hi));
  if (best == -kInf) return -kInf;

  double refined = best;
  const double peak = golden_max(log_f, std::max(lo, best_x - spacing),
                                 std::min(hi, best_x + spacing), refined);
  const double shift = std::max(best, refined);
  if (shift + std::log(hi - lo) < negligible) return shift + std::log(hi - lo);
  const double p = refined >= best ? peak : best_x;
  const double width = peak_width(log_f, p, shift, lo, hi);

  std::vector<double> breaks{lo, hi};
  if (p > lo && p < hi) breaks.push_back(p);
  for (double d = width; d < hi - lo; d *= 2.0) {
    if (p - d > lo) breaks.push_back(p - d);
    if (p + d < hi) breaks.push_back(p + d);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const SimpsonIntegrator integrator(log_f, shift, max_depth);
  std::vector<Panel> panels;
  double coarse = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    panels.push_back(integrator.panel(breaks[i], breaks[i + 1]));
    coarse += std::abs(panels.back().whole);
  }
  if (!(coarse > 0.0)) coarse = width;
  // Evaluating log_f to about 1e-12 relative accuracy leaves noise of that
  // order times |shift| in exp(log_f - shift); asking for less is futile.
  const double tol = std::max(rel_tol, 1e-12 * std::abs(shift));
  const double eps = 0.5 * tol * coarse / static_cast<double>(panels.size());
  double total = 0.0;
  for (const auto& panel : panels) total += integrator.adapt(panel, eps, 0);
  if (!(total > 0.0)) return -kInf;
  return shift + std::log(total);
}

double conditional_log_density(const CanonicalDistribution& d, std::span<const double> x) {
  if (d.base().log_density(x) == -kInf) return -kInf;
  const auto e = d.coordinate_exponent();
  if (e && e->quadratic <= 0.0) {
    return exponent_log_density(summarize(d.base(), x), e->linear, e->quadratic);
  }
  return log_density_unnormalized(d, x) - log_partition(d);
}

double marginal_log_density(const HierarchicalModel& m, std::span<const double> x,
                            const QuadratureSpec& q) {
  if (m.base().log_density(x) == -kInf) return -kInf;
  const double n = static_cast<double>(m.dimension());
  const auto groups = summarize(m.base(), x);
  const auto& features = m.features();
  const HyperLogFunction g = [&](std::span<const double> hyper) {
    const auto mult = m.multipliers(hyper);
    if (const auto e = exponent_of(features, mult, n)) {
      return exponent_log_density(groups, e->linear, e->quadratic);
    }
    return conditional_log_density(m.conditional(hyper), x);
  };
  return integrate_hyper(m, g, q, marginal_hints(m, x));
}

double statistic_gap(const HierarchicalModel& m, const StatePair& p) {
  double gap = 0.0;
  for (const auto& f : m.features()) {
    const double a = f(p.x);
    const double b = f(p.y);
    gap = std::max(gap, std::abs(a - b) / std::max(1.0, std::abs(a)));
  }
  return gap;
}

SufficiencyReport log_density_differences(const HierarchicalModel& m,
                                          const std::vector<StatePair>& pairs,
                                          const QuadratureSpec& q, unsigned threads) {
  q.validate();
  for (const auto& p : pairs) {
    if (p.x.size() != m.dimension() || p.y.size() != m.dimension()) {
      throw InvalidArgument("sufficiency: pair dimension does not match the model");
    }
    if (!m.base().contains(p.x) || !m.base().contains(p.y)) {
      throw InvalidArgument("sufficiency: pair point lies outside the box");
    }
  }
  SufficiencyReport r;
  r.tolerance = 2.0 * q.rel_tol;
  r.log_density_x.resize(pairs.size());
  r.log_density_y.resize(pairs.size());
  r.differences.resize(pairs.size());
  parallel_for(2 * pairs.size(), threads, [&](std::size_t k) {
    const auto& p = pairs[k / 2];
    if (k % 2 == 0) {
      r.log_density_x[k / 2] = marginal_log_density(m, p.x, q);
    } else {
      r.log_density_y[k / 2] = marginal_log_density(m, p.y, q);
    }
  });
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    r.differences[i] = std::abs(r.log_density_x[i] - r.log_density_y[i]);
    r.max_difference = std::max(r.max_difference, r.differences[i]);
  }
  return r;
}

SufficiencyReport sufficiency_check(const HierarchicalModel& m, const std::vector<StatePair>& pairs,
                                    const QuadratureSpec& q, unsigned threads) {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].x.size() != m.dimension() || pairs[i].y.size() != m.dimension()) {
      throw InvalidArgument("sufficiency: pair dimension does not match the model");
    }
    const double gap = statistic_gap(m, pairs[i]);
    if (gap > 1e-12) {
      std::ostringstream msg;
      msg << "sufficiency: pair " << i << " has unequal statistics (relative gap " << gap << ")";
      throw InvalidArgument(msg.str());
    }
  }
  return log_density_differences(m, pairs, q, threads);
}

StatePair permutation_pair(const State& x, std::uint64_t seed) {
  CounterRng rng(SeededStream{seed, 0x7065726d});
  State y = x;
  std::shuffle(y.begin(), y.end(), rng);
  return {x, std::move(y)};
}

StatePair rotation_pair(const State& x, std::size_t i, std::size_t j, std::size_t k,
                        double angle) {
  if (i == j || j == k || i == k || std::max({i, j, k}) >= x.size()) {
    throw InvalidArgument("rotation_pair: need three distinct coordinates");
  }
  const double c = (x[i] + x[j] + x[k]) / 3.0;
  const double v[3] = {x[i] - c, x[j] - c, x[k] - c};
  const double s = 1.0 / std::sqrt(3.0);
  const double cross[3] = {s * (v[2] - v[1]), s * (v[0] - v[2]), s * (v[1] - v[0])};
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  State y = x;
  y[i] = c + v[0] * cs + cross[0] * sn;
  y[j] = c + v[1] * cs + cross[1] * sn;
  y[k] = c + v[2] * cs + cross[2] * sn;
  return {x, std::move(y)};
}

StatePair random_rotation_pair(const State& x, const BoxPrior& box, std::uint64_t seed) {
  if (x.size() < 3) throw InvalidArgument("random_rotation_pair: need at least three coordinates");
  CounterRng rng(SeededStream{seed, 0x726f74});
  const auto n = x.size();
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const auto i = static_cast<std::size_t>(rng.uniform() * n);
    const auto j = static_cast<std::size_t>(rng.uniform() * n);
    const auto k = static_cast<std::size_t>(rng.uniform() * n);
    // angles below 2 pi / 3 avoid the cyclic permutation
    const double angle = rng.uniform(0.3, 1.8);
    if (i == j || j == k || i == k) continue;
    auto pair = rotation_pair(x, i, j, k, angle);
    if (box.contains(pair.y)) return pair;
  }
  throw ConvergenceError("random_rotation_pair: no rotation stays inside the box");
}

std::vector<double> implied_marginal_density(const HierarchicalModel& m, const Statistic& f,
                                             Transform transform, std::span<const double> grid,
                                             const QuadratureSpec& q) {
  const StatisticLaw law(m, f);
  std::vector<double> out;
  out.reserve(grid.size());
  for (double s : grid) {
    const double t = transform == Transform::Log ? std::exp(s) : s;
    const double jacobian = transform == Transform::Log ? s : 0.0;
    const double v = integrate_hyper(
        m, [&](std::span<const double> h) { return StatisticLaw::log_pdf(law.at(h), t); }, q,
        law.hints(t), kUnderflow);
    out.push_back(std::exp(v + jacobian));
  }
  return out;
}

std::vector<double> implied_marginal_quadrature(const HierarchicalModel& m, const Statistic& f,
                                                Transform transform,
                                                std::span<const double> grid,
                                                const QuadratureSpec& q) {
  if (grid.empty()) throw InvalidArgument("implied_marginal_quadrature: empty grid");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw InvalidArgument("implied_marginal_quadrature: grid must be sorted");
  }
  auto density = implied_marginal_density(m, f, transform, grid, q);
  if (grid.size() == 1) return {1.0};
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    area += 0.5 * (density[i] + density[i + 1]) * (grid[i + 1] - grid[i]);
  }
  if (!(area > 0.0)) throw ConvergenceError("implied_marginal_quadrature: zero mass on grid");
  for (double& d : density) d /= area;
  return density;
}

std::vector<double> implied_bin_probabilities(const HierarchicalModel& m, const Statistic& f,
                                              Transform transform,
                                              std::span<const double> edges,
                                              const QuadratureSpec& q) {
  if (edges.size() < 2) throw InvalidArgument("implied_bin_probabilities: need two edges");
  const StatisticLaw law(m, f);
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double a = transform == Transform::Log ? std::exp(edges[i]) : edges[i];
    const double b = transform == Transform::Log ? std::exp(edges[i + 1]) : edges[i + 1];
    const double v = integrate_hyper(
        m, [&](std::span<const double> h) { return StatisticLaw::log_interval(law.at(h), a, b); },
        q, law.hints(0.5 * (a + b)), kUnderflow);
    out.push_back(std::exp(v));
  }
  return out;
}

}  // namespace maxent
