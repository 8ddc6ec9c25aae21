#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "maxent/model.hpp"
#include "maxent/rng.hpp"

namespace maxent {

/// Row-major matrix of draws, one row per sample.
struct DrawMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

/// Rows are generated in blocks of this size; block b always uses the
/// counter block b of its stream, so output does not depend on threading.
inline constexpr std::size_t kSampleBlock = 2048;

/// `threads` = 0 uses the hardware concurrency.
DrawMatrix sample_hyper(const HyperPrior& h, const SeededStream& s, std::size_t count,
                        unsigned threads = 0);

/// Coordinate-wise inverse-CDF draws. Throws UnsupportedModel unless every
/// feature is coordinate-wise with a non-positive quadratic coefficient.
DrawMatrix sample_conditional(const CanonicalDistribution& d, const SeededStream& s,
                              std::size_t count, unsigned threads = 0);

/// Ancestral draws: hyperparameters from s.substream(0), x from
/// s.substream(1), both with the block layout above. With a point hyperprior
/// this equals sample_conditional(m.conditional(point), s.substream(1), count).
DrawMatrix sample_hierarchical(const HierarchicalModel& m, const SeededStream& s,
                               std::size_t count, unsigned threads = 0);

enum class Transform { Identity, Log };

std::string to_string(Transform t);

/// Statistics evaluated on hierarchical draws without storing the draws.
/// Column j of the result holds statistics[j] with transforms[j] applied.
/// Throws InvalidArgument for a log of a nonpositive value.
DrawMatrix sample_statistics(const HierarchicalModel& m, const std::vector<Statistic>& statistics,
                             const std::vector<Transform>& transforms, const SeededStream& s,
                             std::size_t count, unsigned threads = 0);

/// Same for draws from the base prior alone (the uniform-prior pipeline).
DrawMatrix sample_statistics(const BoxPrior& base, const std::vector<Statistic>& statistics,
                             const std::vector<Transform>& transforms, const SeededStream& s,
                             std::size_t count, unsigned threads = 0);

struct HistogramSummary {
  std::vector<double> edges;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  std::size_t bins() const { return counts.size(); }
  double density(std::size_t i) const;
  std::vector<double> densities() const;

  /// Equal-width bins on [lo, hi]; values outside are dropped from counts
  /// but not from total.
  static HistogramSummary fixed(std::span<const double> values, double lo, double hi,
                                std::size_t bins);
  /// Equal-width bins spanning the empirical range.
  static HistogramSummary from_values(std::span<const double> values, std::size_t bins);

  std::string to_csv() const;
  std::string to_json() const;
};

struct Histogram2D {
  std::vector<double> edges_x;
  std::vector<double> edges_y;
  /// counts[i * ny + j] for x-bin i and y-bin j.
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  static Histogram2D from_values(std::span<const double> x, std::span<const double> y,
                                 std::size_t bins_x, std::size_t bins_y);
  double density(std::size_t i, std::size_t j) const;

  std::string to_csv() const;
  std::string to_json() const;
};

/// ceil(sqrt(count)) capped at 200.
std::size_t default_bins(std::size_t count);

/// Draws `count` samples, evaluates f, applies the transform and bins over
/// the empirical range. `bins` = 0 selects default_bins(count).
HistogramSummary implied_statistic_histogram(const HierarchicalModel& m, const Statistic& f,
                                             Transform transform, const SeededStream& s,
                                             std::size_t count, std::size_t bins = 0);
HistogramSummary implied_statistic_histogram(const BoxPrior& base, const Statistic& f,
                                             Transform transform, const SeededStream& s,
                                             std::size_t count, std::size_t bins = 0);

struct ReferenceCdf {
  enum class Kind { Uniform, Normal };
  Kind kind = Kind::Uniform;
  double a = 0.0;  ///< lower bound or mean
  double b = 1.0;  ///< upper bound or standard deviation

  static ReferenceCdf uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
  static ReferenceCdf normal(double mean, double sd) { return {Kind::Normal, mean, sd}; }
  double operator()(double x) const;
};

/// sup |F_empirical - F_reference|. Throws InvalidArgument on empty input.
double ks_statistic(std::span<const double> samples, const ReferenceCdf& reference);

struct SampleMoments {
  double mean = 0.0;
  double sd = 0.0;
};

SampleMoments sample_moments(std::span<const double> values);

/// Column j of a matrix as a vector.
std::vector<double> column(const DrawMatrix& m, std::size_t j);

}  // namespace maxent
