#pragma once

// Domain types shared by every module: the box base measure, derived
// statistics, canonical (exponentially tilted) distributions, hyperpriors and
// hierarchical models built from them.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace maxent {

using State = std::vector<double>;

/// Uniform base measure on an axis-aligned box.
class BoxPrior {
 public:
  BoxPrior(std::vector<double> lower, std::vector<double> upper);

  /// The box [lo, hi]^n.
  static BoxPrior cube(std::size_t dimension, double lo, double hi);

  std::size_t dimension() const { return lower_.size(); }
  std::span<const double> lower() const { return lower_; }
  std::span<const double> upper() const { return upper_; }
  double lower(std::size_t i) const { return lower_[i]; }
  double upper(std::size_t i) const { return upper_[i]; }
  double width(std::size_t i) const { return upper_[i] - lower_[i]; }

  /// True when every coordinate shares the same interval.
  bool is_cube() const;

  double log_volume() const { return log_volume_; }
  bool contains(std::span<const double> x) const;

  /// -log(volume) inside the box, -infinity outside.
  double log_density(std::span<const double> x) const;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
  double log_volume_ = 0.0;
};

enum class StatisticKind { Mean, Sum, SumOfSquares, Tabulated, BinIndicator };

/// A derived quantity T = f(x).
///
/// Mean, Sum and SumOfSquares act coordinate-wise and are defined for any
/// length. Tabulated statistics are lookup tables over a declared finite set of
/// states. BinIndicator wraps another statistic and returns 1 when its value
/// falls in [lo, hi) (or [lo, hi] for the last bin of a partition; lo == hi
/// with a closed right end is an equality indicator).
class Statistic {
 public:
  static Statistic mean();
  static Statistic sum();
  static Statistic sum_of_squares();
  static Statistic tabulated(std::map<State, double> table);
  static Statistic bin_indicator(const Statistic& inner, double lo, double hi,
                                 bool closed_right);

  StatisticKind kind() const { return kind_; }
  std::string name() const;

  /// Mean, Sum or SumOfSquares.
  bool is_coordinatewise() const;

  double operator()(std::span<const double> x) const;

  // BinIndicator accessors
  double bin_lo() const { return lo_; }
  double bin_hi() const { return hi_; }
  bool closed_right() const { return closed_right_; }
  const Statistic& inner() const { return *inner_; }

  // Tabulated accessor
  const std::map<State, double>& table() const { return *table_; }

  friend bool operator==(const Statistic& a, const Statistic& b);

 private:
  explicit Statistic(StatisticKind kind) : kind_(kind) {}

  StatisticKind kind_;
  std::shared_ptr<const std::map<State, double>> table_;
  std::shared_ptr<const Statistic> inner_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  bool closed_right_ = false;
};

/// Evaluates f(x). Throws InvalidArgument for an empty x or a state that is
/// not declared in a Tabulated statistic's table.
double statistic_eval(const Statistic& f, std::span<const double> x);

/// Per-coordinate exponent a*x + b*x^2 induced by coordinate-wise features.
struct CoordinateExponent {
  double linear = 0.0;
  double quadratic = 0.0;
};

/// pi(x) exp(sum_i lambda_i f_i(x)) / Z(lambda) over a box.
class CanonicalDistribution {
 public:
  CanonicalDistribution(BoxPrior base, std::vector<Statistic> features,
                        std::vector<double> multipliers);

  /// The base prior itself (no features).
  explicit CanonicalDistribution(BoxPrior base);

  const BoxPrior& base() const { return base_; }
  const std::vector<Statistic>& features() const { return features_; }
  const std::vector<double>& multipliers() const { return multipliers_; }
  std::size_t dimension() const { return base_.dimension(); }

  CanonicalDistribution with_multipliers(std::vector<double> multipliers) const;

  /// The exponent restricted to one coordinate when every feature is
  /// coordinate-wise; nullopt otherwise.
  std::optional<CoordinateExponent> coordinate_exponent() const;

 private:
  BoxPrior base_;
  std::vector<Statistic> features_;
  std::vector<double> multipliers_;
};

/// log pi(x) + sum_i lambda_i f_i(x); -infinity outside the box.
double log_density_unnormalized(const CanonicalDistribution& d,
                                std::span<const double> x);

/// Multipliers on (Sum, SumOfSquares) equivalent to N(mu, sigma^2) per coordinate.
std::pair<double, double> link_gaussian(double mu, double sigma);

/// Inverse of link_gaussian: (mu, sigma) from (lambda_sum, lambda_sumsq < 0).
std::pair<double, double> unlink_gaussian(double lambda_sum, double lambda_sumsq);

/// The per-coordinate multiplier lambda < 0 for which exp(lambda x) on [0, hi]
/// has mean mu. Requires 0 < mu <= hi/2 (mu == hi/2 gives 0).
double link_exponential(double mu, double hi);

struct HyperComponent {
  enum class Kind { Uniform, LogUniform };

  Kind kind = Kind::Uniform;
  /// Bounds of the uniformly distributed coordinate: the value itself for
  /// Uniform, its natural log for LogUniform.
  double lo = 0.0;
  double hi = 0.0;

  static HyperComponent uniform(double lo, double hi);
  static HyperComponent log_uniform(double log_lo, double log_hi);

  bool is_point() const { return lo == hi; }
  /// Maps the uniform coordinate to the hyperparameter value.
  double value(double u) const;
  /// Log density of the uniform coordinate (0 for a point mass).
  double log_density() const;
};

/// Product of independent one-dimensional laws.
class HyperPrior {
 public:
  explicit HyperPrior(std::vector<HyperComponent> components);

  const std::vector<HyperComponent>& components() const { return components_; }
  std::size_t dimension() const { return components_.size(); }

 private:
  std::vector<HyperComponent> components_;
};

enum class ConditionalFamily { TruncatedExponentialIID, GaussianIID, GenericCanonical };

enum class LinkKind {
  /// mu -> rate 1/mu per coordinate; the Mean multiplier is -n/mu.
  ExponentialRate,
  /// mu -> Mean multiplier n * link_exponential(mu - lo, hi - lo).
  ExponentialMean,
  /// (mu, sigma) -> link_gaussian on (Sum, SumOfSquares).
  Gaussian,
  /// hyperparameters are the multipliers of the model's features.
  Identity,
};

std::string to_string(ConditionalFamily family);
std::string to_string(LinkKind link);

/// Hyperprior plus a link from hyperparameters to a canonical conditional.
class HierarchicalModel {
 public:
  /// Features are implied by the link except for Identity, where they are
  /// taken from `features`.
  HierarchicalModel(BoxPrior base, HyperPrior hyperprior, LinkKind link,
                    ConditionalFamily family, std::vector<Statistic> features = {});

  /// Exponential model: log mu ~ U(log_lo, log_hi), rate link, box [0, hi]^n.
  static HierarchicalModel exponential(std::size_t n, double hi, double log_mu_lo,
                                       double log_mu_hi);

  /// Gaussian model: mu ~ U(mu_lo, mu_hi), ln sigma ~ U(log_sigma_lo, log_sigma_hi).
  static HierarchicalModel gaussian(std::size_t n, double box_lo, double box_hi,
                                    double mu_lo, double mu_hi, double log_sigma_lo,
                                    double log_sigma_hi);

  const BoxPrior& base() const { return base_; }
  const HyperPrior& hyperprior() const { return hyperprior_; }
  LinkKind link() const { return link_; }
  ConditionalFamily family() const { return family_; }
  const std::vector<Statistic>& features() const { return features_; }
  std::size_t dimension() const { return base_.dimension(); }

  /// Multipliers for the given hyperparameter values.
  std::vector<double> multipliers(std::span<const double> hyper) const;

  /// The conditional p(x | hyper).
  CanonicalDistribution conditional(std::span<const double> hyper) const;

  /// Same model with hyper component `index` collapsed to the point `u`
  /// (in the uniform coordinate).
  HierarchicalModel with_point_hyper(std::size_t index, double u) const;

 private:
  BoxPrior base_;
  HyperPrior hyperprior_;
  LinkKind link_;
  ConditionalFamily family_;
  std::vector<Statistic> features_;
};

/// Probability table over a finite list of states.
class DiscreteDistribution {
 public:
  DiscreteDistribution(std::vector<State> states, std::vector<double> probs);
  DiscreteDistribution(std::shared_ptr<const std::vector<State>> states,
                       std::vector<double> probs);

  const std::vector<State>& states() const { return *states_; }
  const std::shared_ptr<const std::vector<State>>& shared_states() const { return states_; }
  const std::vector<double>& probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t k) const { return probs_[k]; }

 private:
  std::shared_ptr<const std::vector<State>> states_;
  std::vector<double> probs_;
};

/// Half the L1 distance between two distributions over the same states.
double total_variation(const DiscreteDistribution& p, const DiscreteDistribution& q);

}  // namespace maxent
