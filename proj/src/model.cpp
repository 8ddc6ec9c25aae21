#include "maxent/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "maxent/error.hpp"
#include "maxent/truncated.hpp"

namespace maxent {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// BoxPrior

BoxPrior::BoxPrior(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty()) throw InvalidArgument("BoxPrior: dimension must be positive");
  if (lower_.size() != upper_.size()) {
    throw InvalidArgument("BoxPrior: lower and upper bounds differ in length");
  }
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i])) {
      std::ostringstream msg;
      msg << "BoxPrior: need finite lower < upper in coordinate " << i;
      throw InvalidArgument(msg.str());
    }
    log_volume_ += std::log(upper_[i] - lower_[i]);
  }
}

BoxPrior BoxPrior::cube(std::size_t dimension, double lo, double hi) {
  return BoxPrior(std::vector<double>(dimension, lo), std::vector<double>(dimension, hi));
}

bool BoxPrior::is_cube() const {
  return std::all_of(lower_.begin(), lower_.end(), [&](double v) { return v == lower_[0]; }) &&
         std::all_of(upper_.begin(), upper_.end(), [&](double v) { return v == upper_[0]; });
}

bool BoxPrior::contains(std::span<const double> x) const {
  if (x.size() != dimension()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower_[i] && x[i] <= upper_[i])) return false;
  }
  return true;
}

double BoxPrior::log_density(std::span<const double> x) const {
  if (x.size() != dimension()) {
    throw InvalidArgument("BoxPrior::log_density: dimension mismatch");
  }
  return contains(x) ? -log_volume_ : -kInf;
}

// ---------------------------------------------------------------------------
// Statistic

Statistic Statistic::mean() { return Statistic(StatisticKind::Mean); }
Statistic Statistic::sum() { return Statistic(StatisticKind::Sum); }
Statistic Statistic::sum_of_squares() { return Statistic(StatisticKind::SumOfSquares); }

Statistic Statistic::tabulated(std::map<State, double> table) {
  if (table.empty()) throw InvalidArgument("Statistic::tabulated: empty table");
  const std::size_t len = table.begin()->first.size();
  for (const auto& [state, value] : table) {
    if (state.size() != len) {
      throw InvalidArgument("Statistic::tabulated: states differ in dimension");
    }
  }
  Statistic s(StatisticKind::Tabulated);
  s.table_ = std::make_shared<const std::map<State, double>>(std::move(table));
  return s;
}

Statistic Statistic::bin_indicator(const Statistic& inner, double lo, double hi,
                                   bool closed_right) {
  if (!(lo < hi) && !(lo == hi && closed_right)) {
    throw InvalidArgument("Statistic::bin_indicator: need lo < hi, or lo == hi for a closed bin");
  }
  Statistic s(StatisticKind::BinIndicator);
  s.inner_ = std::make_shared<const Statistic>(inner);
  s.lo_ = lo;
  s.hi_ = hi;
  s.closed_right_ = closed_right;
  return s;
}

std::string Statistic::name() const {
  switch (kind_) {
    case StatisticKind::Mean: return "mean";
    case StatisticKind::Sum: return "sum";
    case StatisticKind::SumOfSquares: return "sum_of_squares";
    case StatisticKind::Tabulated: return "tabulated";
    case StatisticKind::BinIndicator: {
      std::ostringstream out;
      out.precision(17);
      out << "1[" << lo_ << " <= " << inner_->name() << (closed_right_ ? " <= " : " < ")
          << hi_ << "]";
      return out.str();
    }
  }
  return "unknown";
}

bool Statistic::is_coordinatewise() const {
  return kind_ == StatisticKind::Mean || kind_ == StatisticKind::Sum ||
         kind_ == StatisticKind::SumOfSquares;
}

double Statistic::operator()(std::span<const double> x) const {
  if (x.empty()) throw InvalidArgument("statistic_eval: empty state");
  switch (kind_) {
    case StatisticKind::Mean:
      return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    case StatisticKind::Sum:
      return std::accumulate(x.begin(), x.end(), 0.0);
    case StatisticKind::SumOfSquares: {
      double acc = 0.0;
      for (double v : x) acc += v * v;
      return acc;
    }
    case StatisticKind::Tabulated: {
      if (x.size() != table_->begin()->first.size()) {
        throw InvalidArgument("statistic_eval: dimension mismatch for tabulated statistic");
      }
      const auto it = table_->find(State(x.begin(), x.end()));
      if (it == table_->end()) {
        throw InvalidArgument("statistic_eval: state not declared in tabulated statistic");
      }
      return it->second;
    }
    case StatisticKind::BinIndicator: {
      const double v = (*inner_)(x);
      const bool inside = v >= lo_ && (v < hi_ || (closed_right_ && v == hi_));
      return inside ? 1.0 : 0.0;
    }
  }
  return 0.0;
}

bool operator==(const Statistic& a, const Statistic& b) {
  if (a.kind_ != b.kind_) return false;
  switch (a.kind_) {
    case StatisticKind::Tabulated:
      return a.table_ == b.table_ || *a.table_ == *b.table_;
    case StatisticKind::BinIndicator:
      return a.lo_ == b.lo_ && a.hi_ == b.hi_ && a.closed_right_ == b.closed_right_ &&
             *a.inner_ == *b.inner_;
    default:
      return true;
  }
}

double statistic_eval(const Statistic& f, std::span<const double> x) { return f(x); }

// ---------------------------------------------------------------------------
// CanonicalDistribution

CanonicalDistribution::CanonicalDistribution(BoxPrior base, std::vector<Statistic> features,
                                             std::vector<double> multipliers)
    : base_(std::move(base)),
      features_(std::move(features)),
      multipliers_(std::move(multipliers)) {
  if (features_.size() != multipliers_.size()) {
    throw InvalidArgument("CanonicalDistribution: one multiplier per feature required");
  }
  for (double l : multipliers_) {
    if (!std::isfinite(l)) throw InvalidArgument("CanonicalDistribution: multipliers must be finite");
  }
}

CanonicalDistribution::CanonicalDistribution(BoxPrior base)
    : CanonicalDistribution(std::move(base), {}, {}) {}

CanonicalDistribution CanonicalDistribution::with_multipliers(
    std::vector<double> multipliers) const {
  return CanonicalDistribution(base_, features_, std::move(multipliers));
}

std::optional<CoordinateExponent> CanonicalDistribution::coordinate_exponent() const {
  CoordinateExponent e;
  const double n = static_cast<double>(dimension());
  for (std::size_t i = 0; i < features_.size(); ++i) {
    switch (features_[i].kind()) {
      case StatisticKind::Mean: e.linear += multipliers_[i] / n; break;
      case StatisticKind::Sum: e.linear += multipliers_[i]; break;
      case StatisticKind::SumOfSquares: e.quadratic += multipliers_[i]; break;
      default: return std::nullopt;
    }
  }
  return e;
}

double log_density_unnormalized(const CanonicalDistribution& d, std::span<const double> x) {
  const double base = d.base().log_density(x);
  if (base == -kInf) return base;
  double acc = base;
  const auto& features = d.features();
  for (std::size_t i = 0; i < features.size(); ++i) {
    acc += d.multipliers()[i] * features[i](x);
  }
  return acc;
}

std::pair<double, double> link_gaussian(double mu, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("link_gaussian: sigma must be positive");
  }
  const double var = sigma * sigma;
  return {mu / var, -0.5 / var};
}

std::pair<double, double> unlink_gaussian(double lambda_sum, double lambda_sumsq) {
  if (!(lambda_sumsq < 0.0)) {
    throw InvalidArgument("unlink_gaussian: quadratic multiplier must be negative");
  }
  const double var = -0.5 / lambda_sumsq;
  return {lambda_sum * var, std::sqrt(var)};
}

double link_exponential(double mu, double hi) {
  if (!(hi > 0.0)) throw InvalidArgument("link_exponential: hi must be positive");
  if (!(mu > 0.0) || mu > 0.5 * hi) {
    throw InvalidArgument("link_exponential: need 0 < mu <= hi/2 for a root with lambda <= 0");
  }
  if (mu == 0.5 * hi) return 0.0;
  // truncated_exp_mean decreases from hi/2 at theta = 0 to below 1/theta, so
  // [0, 1/mu] brackets the root.
  auto residual = [&](double theta) { return truncated_exp_mean(theta, hi) - mu; };
  boost::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      residual, 0.0, 1.0 / mu, residual(0.0), residual(1.0 / mu),
      boost::math::tools::eps_tolerance<double>(52), max_iter);
  return -0.5 * (a + b);
}

// ---------------------------------------------------------------------------
// Hyperpriors

HyperComponent HyperComponent::uniform(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
    throw InvalidArgument("HyperComponent::uniform: need finite lo <= hi");
  }
  return {Kind::Uniform, lo, hi};
}

HyperComponent HyperComponent::log_uniform(double log_lo, double log_hi) {
  if (!std::isfinite(log_lo) || !std::isfinite(log_hi) || log_lo > log_hi) {
    throw InvalidArgument("HyperComponent::log_uniform: need finite log_lo <= log_hi");
  }
  return {Kind::LogUniform, log_lo, log_hi};
}

double HyperComponent::value(double u) const {
  return kind == Kind::LogUniform ? std::exp(u) : u;
}

double HyperComponent::log_density() const { return is_point() ? 0.0 : -std::log(hi - lo); }

HyperPrior::HyperPrior(std::vector<HyperComponent> components)
    : components_(std::move(components)) {
  for (const auto& c : components_) {
    if (c.lo > c.hi) throw InvalidArgument("HyperPrior: empty interval");
  }
}

// ---------------------------------------------------------------------------
// HierarchicalModel

std::string to_string(ConditionalFamily family) {
  switch (family) {
    case ConditionalFamily::TruncatedExponentialIID: return "truncated-exponential-iid";
    case ConditionalFamily::GaussianIID: return "gaussian-iid";
    case ConditionalFamily::GenericCanonical: return "generic-canonical";
  }
  return "unknown";
}

std::string to_string(LinkKind link) {
  switch (link) {
    case LinkKind::ExponentialRate: return "exponential-rate";
    case LinkKind::ExponentialMean: return "exponential-mean";
    case LinkKind::Gaussian: return "gaussian";
    case LinkKind::Identity: return "identity";
  }
  return "unknown";
}

HierarchicalModel::HierarchicalModel(BoxPrior base, HyperPrior hyperprior, LinkKind link,
                                     ConditionalFamily family, std::vector<Statistic> features)
    : base_(std::move(base)),
      hyperprior_(std::move(hyperprior)),
      link_(link),
      family_(family),
      features_(std::move(features)) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("HierarchicalModel: ") + what);
  };
  const auto& comps = hyperprior_.components();
  switch (link_) {
    case LinkKind::ExponentialRate:
    case LinkKind::ExponentialMean:
      require(family_ == ConditionalFamily::TruncatedExponentialIID,
              "exponential links need the truncated-exponential family");
      require(comps.size() == 1, "exponential links take one hyperparameter (mu)");
      require(comps[0].kind == HyperComponent::Kind::LogUniform || comps[0].lo > 0.0,
              "mu must be positive");
      require(base_.is_cube(), "exponential links need identical coordinate bounds");
      features_ = {Statistic::mean()};
      break;
    case LinkKind::Gaussian:
      require(family_ == ConditionalFamily::GaussianIID,
              "the gaussian link needs the gaussian family");
      require(comps.size() == 2, "the gaussian link takes (mu, sigma)");
      require(comps[1].kind == HyperComponent::Kind::LogUniform || comps[1].lo > 0.0,
              "sigma must be positive");
      features_ = {Statistic::sum(), Statistic::sum_of_squares()};
      break;
    case LinkKind::Identity:
      require(family_ == ConditionalFamily::GenericCanonical,
              "the identity link needs the generic canonical family");
      require(comps.size() == features_.size(), "one hyperparameter per feature");
      break;
  }
}

HierarchicalModel HierarchicalModel::exponential(std::size_t n, double hi, double log_mu_lo,
                                                 double log_mu_hi) {
  return HierarchicalModel(BoxPrior::cube(n, 0.0, hi),
                           HyperPrior({HyperComponent::log_uniform(log_mu_lo, log_mu_hi)}),
                           LinkKind::ExponentialRate,
                           ConditionalFamily::TruncatedExponentialIID);
}

HierarchicalModel HierarchicalModel::gaussian(std::size_t n, double box_lo, double box_hi,
                                              double mu_lo, double mu_hi, double log_sigma_lo,
                                              double log_sigma_hi) {
  return HierarchicalModel(BoxPrior::cube(n, box_lo, box_hi),
                           HyperPrior({HyperComponent::uniform(mu_lo, mu_hi),
                                       HyperComponent::log_uniform(log_sigma_lo, log_sigma_hi)}),
                           LinkKind::Gaussian, ConditionalFamily::GaussianIID);
}

std::vector<double> HierarchicalModel::multipliers(std::span<const double> hyper) const {
  if (hyper.size() != hyperprior_.dimension()) {
    throw InvalidArgument("HierarchicalModel: wrong number of hyperparameters");
  }
  const double n = static_cast<double>(dimension());
  switch (link_) {
    case LinkKind::ExponentialRate:
      return {-n / hyper[0]};
    case LinkKind::ExponentialMean:
      return {n * link_exponential(hyper[0] - base_.lower(0), base_.width(0))};
    case LinkKind::Gaussian: {
      const auto [l1, l2] = link_gaussian(hyper[0], hyper[1]);
      return {l1, l2};
    }
    case LinkKind::Identity:
      return {hyper.begin(), hyper.end()};
  }
  return {};
}

CanonicalDistribution HierarchicalModel::conditional(std::span<const double> hyper) const {
  return CanonicalDistribution(base_, features_, multipliers(hyper));
}

HierarchicalModel HierarchicalModel::with_point_hyper(std::size_t index, double u) const {
  auto comps = hyperprior_.components();
  comps.at(index).lo = u;
  comps.at(index).hi = u;
  return HierarchicalModel(base_, HyperPrior(std::move(comps)), link_, family_, features_);
}

// ---------------------------------------------------------------------------
// DiscreteDistribution

DiscreteDistribution::DiscreteDistribution(std::vector<State> states, std::vector<double> probs)
    : DiscreteDistribution(std::make_shared<const std::vector<State>>(std::move(states)),
                           std::move(probs)) {}

DiscreteDistribution::DiscreteDistribution(std::shared_ptr<const std::vector<State>> states,
                                           std::vector<double> probs)
    : states_(std::move(states)), probs_(std::move(probs)) {
  if (!states_ || states_->size() != probs_.size()) {
    throw InvalidArgument("DiscreteDistribution: one probability per state required");
  }
  if (probs_.empty()) throw InvalidArgument("DiscreteDistribution: no states");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw InvalidArgument("DiscreteDistribution: probabilities must be nonnegative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("DiscreteDistribution: probabilities must sum to 1");
  }
}

double total_variation(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  if (p.size() != q.size()) throw InvalidArgument("total_variation: size mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) acc += std::abs(p[k] - q[k]);
  return 0.5 * acc;
}

}  // namespace maxent
