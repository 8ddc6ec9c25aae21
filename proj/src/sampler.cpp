#include "maxent/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "json.hpp"
#include "maxent/error.hpp"
#include "maxent/parallel.hpp"
#include "maxent/truncated.hpp"

namespace maxent {

namespace {

std::size_t block_count(std::size_t count) { return (count + kSampleBlock - 1) / kSampleBlock; }

// Runs fn(block) for every block, spreading blocks over worker threads.
void for_each_block(std::size_t count, unsigned threads,
                    const std::function<void(std::size_t)>& fn) {
  parallel_for(block_count(count), threads, fn);
}

void check_count(std::size_t count) {
  if (count == 0) throw InvalidArgument("sampler: count must be positive");
}

// Per-coordinate sampler for an exponent a*x + b*x^2 on a box.
class CoordinateSampler {
 public:
  explicit CoordinateSampler(const CanonicalDistribution& d) : base_(&d.base()) {
    const auto e = d.coordinate_exponent();
    if (!e) throw UnsupportedModel("sampler: features are not coordinate-wise");
    if (e->quadratic > 0.0) {
      throw UnsupportedModel("sampler: positive quadratic coefficient has no direct sampler");
    }
    a_ = e->linear;
    b_ = e->quadratic;
    if (b_ < 0.0) {
      sigma_ = std::sqrt(-0.5 / b_);
      mu_ = -a_ / (2.0 * b_);
    }
  }

  void draw(CounterRng& rng, double* out) const {
    const std::size_t n = base_->dimension();
    for (std::size_t i = 0; i < n; ++i) {
      const double u = rng.uniform();
      const double lo = base_->lower(i);
      const double hi = base_->upper(i);
      out[i] = b_ < 0.0 ? truncated_normal_quantile(mu_, sigma_, lo, hi, u)
                        : truncated_exp_quantile(a_, lo, hi, u);
    }
  }

 private:
  const BoxPrior* base_;
  double a_ = 0.0;
  double b_ = 0.0;
  double mu_ = 0.0;
  double sigma_ = 1.0;
};

void draw_hyper(const HyperPrior& h, CounterRng& rng, double* out) {
  const auto& comps = h.components();
  for (std::size_t j = 0; j < comps.size(); ++j) {
    const double u = rng.uniform();
    out[j] = comps[j].value(comps[j].lo + (comps[j].hi - comps[j].lo) * u);
  }
}

double apply(Transform t, double v) {
  if (t == Transform::Identity) return v;
  if (!(v > 0.0)) {
    std::ostringstream msg;
    msg << "log transform of nonpositive statistic value " << v;
    throw InvalidArgument(msg.str());
  }
  return std::log(v);
}

std::pair<std::size_t, std::size_t> block_rows(std::size_t block, std::size_t count) {
  const std::size_t begin = block * kSampleBlock;
  return {begin, std::min(count, begin + kSampleBlock)};
}

// Visits every hierarchical draw as (row index, x).
void visit_hierarchical(const HierarchicalModel& m, const SeededStream& s, std::size_t count,
                        unsigned threads,
                        const std::function<void(std::size_t, std::span<const double>)>& visit) {
  check_count(count);
  const SeededStream hyper_stream = s.substream(0);
  const SeededStream x_stream = s.substream(1);
  const std::size_t n = m.dimension();
  const std::size_t k = m.hyperprior().dimension();
  for_each_block(count, threads, [&](std::size_t block) {
    CounterRng hyper_rng(hyper_stream, block);
    CounterRng x_rng(x_stream, block);
    std::vector<double> hyper(k);
    std::vector<double> x(n);
    const auto [begin, end] = block_rows(block, count);
    for (std::size_t r = begin; r < end; ++r) {
      draw_hyper(m.hyperprior(), hyper_rng, hyper.data());
      const auto conditional = m.conditional(hyper);
      CoordinateSampler(conditional).draw(x_rng, x.data());
      visit(r, x);
    }
  });
}

void visit_conditional(const CanonicalDistribution& d, const SeededStream& s, std::size_t count,
                       unsigned threads,
                       const std::function<void(std::size_t, std::span<const double>)>& visit) {
  check_count(count);
  const CoordinateSampler sampler(d);
  const std::size_t n = d.dimension();
  for_each_block(count, threads, [&](std::size_t block) {
    CounterRng rng(s, block);
    std::vector<double> x(n);
    const auto [begin, end] = block_rows(block, count);
    for (std::size_t r = begin; r < end; ++r) {
      sampler.draw(rng, x.data());
      visit(r, x);
    }
  });
}

void check_statistics(const std::vector<Statistic>& statistics,
                      const std::vector<Transform>& transforms) {
  if (statistics.empty() || statistics.size() != transforms.size()) {
    throw InvalidArgument("sample_statistics: one transform per statistic required");
  }
}

void check_edges(double lo, double hi, std::size_t bins) {
  if (bins == 0) throw InvalidArgument("histogram: need at least one bin");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw InvalidArgument("histogram: invalid range");
  }
}

std::vector<double> linear_edges(double lo, double hi, std::size_t bins) {
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  edges.back() = hi;
  return edges;
}

// Bin of v among equal-width bins on [lo, hi], or bins if outside.
std::size_t locate(double v, double lo, double hi, std::size_t bins) {
  if (!(v >= lo && v <= hi)) return bins;
  const auto i = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
  return std::min(i, bins - 1);
}

std::pair<double, double> empirical_range(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("histogram: no values");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  double lo = *mn;
  double hi = *mx;
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return {lo, hi};
}

std::string format_number(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

DrawMatrix sample_hyper(const HyperPrior& h, const SeededStream& s, std::size_t count,
                        unsigned threads) {
  check_count(count);
  DrawMatrix out{count, h.dimension(), std::vector<double>(count * h.dimension())};
  for_each_block(count, threads, [&](std::size_t block) {
    CounterRng rng(s, block);
    const auto [begin, end] = block_rows(block, count);
    for (std::size_t r = begin; r < end; ++r) draw_hyper(h, rng, out.values.data() + r * out.cols);
  });
  return out;
}

DrawMatrix sample_conditional(const CanonicalDistribution& d, const SeededStream& s,
                              std::size_t count, unsigned threads) {
  DrawMatrix out{count, d.dimension(), std::vector<double>(count * d.dimension())};
  visit_conditional(d, s, count, threads, [&](std::size_t r, std::span<const double> x) {
    std::copy(x.begin(), x.end(), out.values.begin() + static_cast<std::ptrdiff_t>(r * out.cols));
  });
  return out;
}

DrawMatrix sample_hierarchical(const HierarchicalModel& m, const SeededStream& s,
                               std::size_t count, unsigned threads) {
  DrawMatrix out{count, m.dimension(), std::vector<double>(count * m.dimension())};
  visit_hierarchical(m, s, count, threads, [&](std::size_t r, std::span<const double> x) {
    std::copy(x.begin(), x.end(), out.values.begin() + static_cast<std::ptrdiff_t>(r * out.cols));
  });
  return out;
}

std::string to_string(Transform t) { return t == Transform::Log ? "log" : "identity"; }

DrawMatrix sample_statistics(const HierarchicalModel& m, const std::vector<Statistic>& statistics,
                             const std::vector<Transform>& transforms, const SeededStream& s,
                             std::size_t count, unsigned threads) {
  check_statistics(statistics, transforms);
  DrawMatrix out{count, statistics.size(), std::vector<double>(count * statistics.size())};
  visit_hierarchical(m, s, count, threads, [&](std::size_t r, std::span<const double> x) {
    for (std::size_t j = 0; j < statistics.size(); ++j) {
      out.values[r * out.cols + j] = apply(transforms[j], statistics[j](x));
    }
  });
  return out;
}

DrawMatrix sample_statistics(const BoxPrior& base, const std::vector<Statistic>& statistics,
                             const std::vector<Transform>& transforms, const SeededStream& s,
                             std::size_t count, unsigned threads) {
  check_statistics(statistics, transforms);
  DrawMatrix out{count, statistics.size(), std::vector<double>(count * statistics.size())};
  visit_conditional(CanonicalDistribution(base), s, count, threads,
                    [&](std::size_t r, std::span<const double> x) {
                      for (std::size_t j = 0; j < statistics.size(); ++j) {
                        out.values[r * out.cols + j] = apply(transforms[j], statistics[j](x));
                      }
                    });
  return out;
}

// ---------------------------------------------------------------------------
// Histograms

double HistogramSummary::density(std::size_t i) const {
  if (total == 0) return 0.0;
  return static_cast<double>(counts.at(i)) /
         (static_cast<double>(total) * (edges[i + 1] - edges[i]));
}

std::vector<double> HistogramSummary::densities() const {
  std::vector<double> out(bins());
  for (std::size_t i = 0; i < bins(); ++i) out[i] = density(i);
  return out;
}

HistogramSummary HistogramSummary::fixed(std::span<const double> values, double lo, double hi,
                                         std::size_t bins) {
  check_edges(lo, hi, bins);
  HistogramSummary h{linear_edges(lo, hi, bins), std::vector<std::uint64_t>(bins, 0),
                     values.size()};
  for (double v : values) {
    const std::size_t i = locate(v, lo, hi, bins);
    if (i < bins) ++h.counts[i];
  }
  return h;
}

HistogramSummary HistogramSummary::from_values(std::span<const double> values, std::size_t bins) {
  const auto [lo, hi] = empirical_range(values);
  return fixed(values, lo, hi, bins);
}

std::string HistogramSummary::to_csv() const {
  std::ostringstream out;
  out << "bin_lo,bin_hi,count,density\n";
  for (std::size_t i = 0; i < bins(); ++i) {
    out << format_number(edges[i]) << ',' << format_number(edges[i + 1]) << ',' << counts[i]
        << ',' << format_number(density(i)) << '\n';
  }
  return out.str();
}

std::string HistogramSummary::to_json() const {
  nlohmann::ordered_json j;
  j["edges"] = edges;
  j["counts"] = counts;
  j["total"] = total;
  j["densities"] = densities();
  return j.dump(2);
}

Histogram2D Histogram2D::from_values(std::span<const double> x, std::span<const double> y,
                                     std::size_t bins_x, std::size_t bins_y) {
  if (x.size() != y.size()) throw InvalidArgument("Histogram2D: coordinate lengths differ");
  const auto [xlo, xhi] = empirical_range(x);
  const auto [ylo, yhi] = empirical_range(y);
  check_edges(xlo, xhi, bins_x);
  check_edges(ylo, yhi, bins_y);
  Histogram2D h{linear_edges(xlo, xhi, bins_x), linear_edges(ylo, yhi, bins_y),
                std::vector<std::uint64_t>(bins_x * bins_y, 0), x.size()};
  for (std::size_t k = 0; k < x.size(); ++k) {
    const std::size_t i = locate(x[k], xlo, xhi, bins_x);
    const std::size_t j = locate(y[k], ylo, yhi, bins_y);
    ++h.counts[i * bins_y + j];
  }
  return h;
}

double Histogram2D::density(std::size_t i, std::size_t j) const {
  const std::size_t ny = edges_y.size() - 1;
  const double area = (edges_x[i + 1] - edges_x[i]) * (edges_y[j + 1] - edges_y[j]);
  return total == 0 ? 0.0
                    : static_cast<double>(counts.at(i * ny + j)) / (static_cast<double>(total) * area);
}

std::string Histogram2D::to_csv() const {
  const std::size_t nx = edges_x.size() - 1;
  const std::size_t ny = edges_y.size() - 1;
  std::ostringstream out;
  out << "bin_lo,bin_hi,count,density,bin2_lo,bin2_hi\n";
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      out << format_number(edges_x[i]) << ',' << format_number(edges_x[i + 1]) << ','
          << counts[i * ny + j] << ',' << format_number(density(i, j)) << ','
          << format_number(edges_y[j]) << ',' << format_number(edges_y[j + 1]) << '\n';
    }
  }
  return out.str();
}

std::string Histogram2D::to_json() const {
  nlohmann::ordered_json j;
  j["edges"] = edges_x;
  j["edges2"] = edges_y;
  j["counts"] = counts;
  j["total"] = total;
  return j.dump(2);
}

std::size_t default_bins(std::size_t count) {
  const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
  return std::clamp<std::size_t>(root, 1, 200);
}

HistogramSummary implied_statistic_histogram(const HierarchicalModel& m, const Statistic& f,
                                             Transform transform, const SeededStream& s,
                                             std::size_t count, std::size_t bins) {
  if (bins == 0) bins = default_bins(count);
  if (count < bins) throw InvalidArgument("implied_statistic_histogram: count < bins");
  const auto values = sample_statistics(m, {f}, {transform}, s, count);
  return HistogramSummary::from_values(values.values, bins);
}

HistogramSummary implied_statistic_histogram(const BoxPrior& base, const Statistic& f,
                                             Transform transform, const SeededStream& s,
                                             std::size_t count, std::size_t bins) {
  if (bins == 0) bins = default_bins(count);
  if (count < bins) throw InvalidArgument("implied_statistic_histogram: count < bins");
  const auto values = sample_statistics(base, {f}, {transform}, s, count);
  return HistogramSummary::from_values(values.values, bins);
}

// ---------------------------------------------------------------------------
// Summaries

double ReferenceCdf::operator()(double x) const {
  if (kind == Kind::Uniform) return std::clamp((x - a) / (b - a), 0.0, 1.0);
  return 0.5 * std::erfc(-(x - a) / (b * std::sqrt(2.0)));
}

double ks_statistic(std::span<const double> samples, const ReferenceCdf& reference) {
  if (samples.empty()) throw InvalidArgument("ks_statistic: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = reference(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

SampleMoments sample_moments(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("sample_moments: no values");
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (double v : values) {
    ++k;
    const double delta = v - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (v - mean);
  }
  const double var = k > 1 ? m2 / static_cast<double>(k - 1) : 0.0;
  return {mean, std::sqrt(var)};
}

std::vector<double> column(const DrawMatrix& m, std::size_t j) {
  if (j >= m.cols) throw InvalidArgument("column: index out of range");
  std::vector<double> out(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) out[r] = m.values[r * m.cols + j];
  return out;
}

}  // namespace maxent
