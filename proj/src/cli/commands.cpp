#include "maxent/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "maxent/cli/config.hpp"
#include "maxent/cli/svg.hpp"
#include "maxent/error.hpp"
#include "maxent/indicator.hpp"
#include "maxent/moment_solver.hpp"
#include "maxent/rng.hpp"
#include "maxent/sampler.hpp"
#include "maxent/verification.hpp"

namespace maxent::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::size_t kExampleDimension = 100;
constexpr std::size_t kDefault2DBins = 60;
constexpr std::size_t kFigure2DBins = 50;

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << content;
  f.close();
  if (!f) throw IoError("cannot write " + path.string());
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void check_samples(std::size_t samples) {
  if (samples < 2) throw InvalidArgument("--samples must be at least 2");
}

std::string extension(OutputFormat f) { return f == OutputFormat::Json ? ".json" : ".csv"; }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json moments_json(std::span<const double> v) {
  const auto m = sample_moments(v);
  return json{{"mean", m.mean}, {"sd", m.sd}, {"min", *std::min_element(v.begin(), v.end())},
              {"max", *std::max_element(v.begin(), v.end())}};
}

json range_json(const AxisRange& r) { return json::array({r.lo, r.hi}); }

// JSON has no infinities; -inf multipliers (bins with zero target) become null.
json finite_or_null(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return out;
}

json names(const std::vector<Statistic>& features) {
  json out = json::array();
  for (const auto& f : features) out.push_back(f.name());
  return out;
}

json example_config(const ExampleOptions& o, std::size_t bins) {
  return json{{"samples", o.samples},
              {"seed", o.seed},
              {"bins", bins},
              {"format", o.format == OutputFormat::Json ? "json" : "csv"},
              {"svg", o.svg},
              {"dimension", kExampleDimension}};
}

}  // namespace

int exponential_example(const ExampleOptions& o, std::ostream& log) {
  check_samples(o.samples);
  ensure_directory(o.out);
  const std::size_t bins = o.bins > 0 ? o.bins : default_bins(o.samples);
  const double uniform_hi = 100.0;
  const double hierarchical_hi = 1e4;
  const BoxPrior box = BoxPrior::cube(kExampleDimension, 0.0, uniform_hi);
  const auto model = HierarchicalModel::exponential(kExampleDimension, hierarchical_hi, -5.0, 5.0);

  const auto uniform = sample_statistics(box, {Statistic::mean()}, {Transform::Log},
                                         {o.seed, kStreamExponentialUniform}, o.samples, o.threads);
  const auto hier = sample_statistics(model, {Statistic::mean()}, {Transform::Log},
                                      {o.seed, kStreamExponentialHierarchical}, o.samples, o.threads);
  const auto hu = HistogramSummary::from_values(uniform.values, bins);
  const auto hh = HistogramSummary::from_values(hier.values, bins);

  const std::string ext = extension(o.format);
  const std::string uniform_file = "exponential_uniform_log_mean" + ext;
  const std::string hier_file = "exponential_hierarchical_log_mean" + ext;
  write_file(o.out / uniform_file, o.format == OutputFormat::Json ? hu.to_json() : hu.to_csv());
  write_file(o.out / hier_file, o.format == OutputFormat::Json ? hh.to_json() : hh.to_csv());

  const ReferenceCdf reference = ReferenceCdf::uniform(-5.0, 5.0);
  const double ks_hier = ks_statistic(hier.values, reference);
  const double ks_uniform = ks_statistic(uniform.values, reference);
  const auto mu = sample_moments(uniform.values);

  json config = example_config(o, bins);
  config["statistic"] = "mean";
  config["transform"] = "log";
  config["uniform"] = {{"box", {0.0, uniform_hi}}, {"stream", kStreamExponentialUniform}};
  config["hierarchical"] = {{"box", {0.0, hierarchical_hi}},
                            {"log_mu", {-5.0, 5.0}},
                            {"link", to_string(model.link())},
                            {"stream", kStreamExponentialHierarchical}};

  const bool ks_ok = ks_hier <= 0.05;
  const bool sd_ok = mu.sd <= 0.07;
  json summary{{"schema", kReportSchema},
               {"command", "exponential-example"},
               {"config", config},
               {"seed", o.seed},
               {"samples", o.samples},
               {"pipelines",
                {{"uniform", {{"log_mean", moments_json(uniform.values)},
                              {"ks_vs_uniform_minus5_5", ks_uniform},
                              {"histogram", uniform_file}}},
                 {"hierarchical", {{"log_mean", moments_json(hier.values)},
                                   {"ks_vs_uniform_minus5_5", ks_hier},
                                   {"histogram", hier_file}}}}},
               {"checks",
                {{"hierarchical_ks_at_most_0.05", ks_ok}, {"uniform_sd_at_most_0.07", sd_ok}}},
               {"passed", ks_ok && sd_ok}};

  if (o.svg) {
    SvgFigure fig("log Mean(x), n = 100", "log Mean(x)", "density");
    fig.add_histogram(hh, "#1f77b4", "hierarchical");
    fig.add_histogram(hu, "#ff7f0e", "uniform prior");
    write_file(o.out / "exponential_figure.svg", fig.render());
    summary["figure"] = {{"file", "exponential_figure.svg"},
                         {"x_range", range_json(fig.x_range())},
                         {"y_range", range_json(fig.y_range())}};
  }
  write_file(o.out / "exponential_summary.json", dump(summary));
  log << "exponential-example: KS(hierarchical log Mean, U(-5,5)) = " << ks_hier
      << ", sd(uniform log Mean) = " << mu.sd << "\n";
  return kExitSuccess;
}

int gaussian_example(const ExampleOptions& o, std::ostream& log) {
  check_samples(o.samples);
  ensure_directory(o.out);
  const std::size_t bins = o.bins > 0 ? o.bins : kDefault2DBins;
  const double n = static_cast<double>(kExampleDimension);
  const BoxPrior box = BoxPrior::cube(kExampleDimension, -100.0, 100.0);
  const auto model =
      HierarchicalModel::gaussian(kExampleDimension, -100.0, 100.0, -100.0, 100.0, -5.0, 5.0);
  const std::vector<Statistic> stats{Statistic::sum(), Statistic::sum_of_squares()};
  const std::vector<Transform> transforms{Transform::Identity, Transform::Log};

  const auto uniform = sample_statistics(box, stats, transforms, {o.seed, kStreamGaussianUniform},
                                         o.samples, o.threads);
  const auto hier = sample_statistics(model, stats, transforms,
                                      {o.seed, kStreamGaussianHierarchical}, o.samples, o.threads);
  const auto u1 = column(uniform, 0), u2 = column(uniform, 1);
  const auto h1 = column(hier, 0), h2 = column(hier, 1);
  const auto hu = Histogram2D::from_values(u1, u2, bins, bins);
  const auto hh = Histogram2D::from_values(h1, h2, bins, bins);

  const std::string ext = extension(o.format);
  const std::string uniform_file = "gaussian_uniform_t1_log_t2" + ext;
  const std::string hier_file = "gaussian_hierarchical_t1_log_t2" + ext;
  write_file(o.out / uniform_file, o.format == OutputFormat::Json ? hu.to_json() : hu.to_csv());
  write_file(o.out / hier_file, o.format == OutputFormat::Json ? hh.to_json() : hh.to_csv());

  auto per_coordinate = [&](std::vector<double> v, bool log_scale) {
    for (double& x : v) x = (log_scale ? std::exp(x) : x) / n;
    return v;
  };
  const auto h1n = per_coordinate(h1, false);
  const auto u2n = per_coordinate(u2, true);
  const double ks = ks_statistic(h1n, ReferenceCdf::uniform(-100.0, 100.0));
  const double t2_mean = sample_moments(u2n).mean;
  const double expected_t2 = 200.0 * 200.0 / 12.0;

  json config = example_config(o, bins);
  config["statistics"] = {{{"statistic", "sum"}, {"transform", "identity"}},
                          {{"statistic", "sum_of_squares"}, {"transform", "log"}}};
  config["uniform"] = {{"box", {-100.0, 100.0}}, {"stream", kStreamGaussianUniform}};
  config["hierarchical"] = {{"box", {-100.0, 100.0}},
                            {"mu", {-100.0, 100.0}},
                            {"log_sigma", {-5.0, 5.0}},
                            {"link", to_string(model.link())},
                            {"stream", kStreamGaussianHierarchical}};

  const bool ks_ok = ks <= 0.05;
  const bool t2_ok = std::abs(t2_mean / expected_t2 - 1.0) <= 0.01;
  json summary{
      {"schema", kReportSchema},
      {"command", "gaussian-example"},
      {"config", config},
      {"seed", o.seed},
      {"samples", o.samples},
      {"pipelines",
       {{"uniform", {{"t1", moments_json(u1)},
                     {"log_t2", moments_json(u2)},
                     {"t2_over_n_mean", t2_mean},
                     {"histogram", uniform_file}}},
        {"hierarchical", {{"t1", moments_json(h1)},
                          {"log_t2", moments_json(h2)},
                          {"ks_t1_over_n_vs_uniform_minus100_100", ks},
                          {"histogram", hier_file}}}}},
      {"checks", {{"hierarchical_ks_at_most_0.05", ks_ok}, {"uniform_t2_over_n_within_1pct", t2_ok}}},
      {"passed", ks_ok && t2_ok}};

  if (o.svg) {
    SvgFigure fig("(T1, log T2), n = 100", "T1 = sum x", "log T2 = log sum x^2");
    fig.add_density(Histogram2D::from_values(h1, h2, kFigure2DBins, kFigure2DBins), "#1f77b4",
                    "hierarchical");
    fig.add_density(Histogram2D::from_values(u1, u2, kFigure2DBins, kFigure2DBins), "#ff7f0e",
                    "uniform prior");
    write_file(o.out / "gaussian_figure.svg", fig.render());
    summary["figure"] = {{"file", "gaussian_figure.svg"},
                         {"x_range", range_json(fig.x_range())},
                         {"y_range", range_json(fig.y_range())}};
  }
  write_file(o.out / "gaussian_summary.json", dump(summary));
  log << "gaussian-example: KS(hierarchical T1/n, U(-100,100)) = " << ks
      << ", mean(uniform T2/n) = " << t2_mean << "\n";
  return kExitSuccess;
}

int solve(const SolveOptions& o, std::ostream& out) {
  const ModelConfig cfg = load_config(o.config);
  json report{{"schema", kReportSchema}, {"command", "solve"}, {"config", cfg.source}};
  bool passed = false;

  if (o.mode == SolveOptions::Mode::Moments) {
    if (!cfg.moments) throw ConfigError(0, "/moments", "solve --moments needs a moments section");
    const double tol = o.tol.value_or(1e-9);
    const auto r = solve_multipliers(*cfg.box, *cfg.moments, tol, o.max_iterations);
    const CanonicalDistribution d(*cfg.box, cfg.moments->features, r.multipliers);
    report["mode"] = "moments";
    report["tolerance"] = tol;
    report["features"] = names(cfg.moments->features);
    report["targets"] = cfg.moments->targets;
    report["multipliers"] = r.multipliers;
    if (const auto e = d.coordinate_exponent()) {
      report["per_coordinate_exponent"] = {{"linear", e->linear}, {"quadratic", e->quadratic}};
    }
    report["log_partition"] = r.log_partition;
    report["achieved_moments"] = r.achieved_moments;
    report["dual_gradient_norm"] = r.dual_gradient_norm;
    report["iterations"] = r.iterations;
    report["dual_trace"] = r.dual_trace;
    passed = r.dual_gradient_norm <= tol;
  } else {
    if (!cfg.bin_problem) {
      throw ConfigError(0, "/bin_constraints", "solve --bins needs a bin_constraints section");
    }
    const double tol = o.tol.value_or(1e-12);
    const auto& [model, c] = *cfg.bin_problem;
    const auto lambda = solve_bin_multipliers(model, c, tol);
    const auto p = reweight(model, exp_multipliers(lambda), c);
    const auto achieved = bin_marginals(model, c, p);
    double err = 0.0;
    for (std::size_t b = 0; b < achieved.size(); ++b) {
      err = std::max(err, std::abs(achieved[b] - c.target_probs[b]));
    }
    report["mode"] = "bins";
    report["tolerance"] = tol;
    report["statistic"] = c.statistic.name();
    report["states"] = model.size();
    report["bins"] = c.bin_edges;
    report["discrete_values"] = c.discrete_values;
    report["targets"] = c.target_probs;
    report["prior_mass"] = bin_prior_mass(model, c);
    report["multipliers"] = finite_or_null(lambda);
    report["achieved_marginals"] = achieved;
    report["dual_gradient_norm"] = err;
    report["iterations"] = 0;
    report["relative_entropy_to_prior"] = entropy(p, model.prior_distribution());
    passed = err <= tol;
  }
  report["passed"] = passed;
  const std::string text = dump(report);
  if (o.out) {
    ensure_directory(*o.out);
    write_file(*o.out / "solve_report.json", text);
  }
  out << text;
  return passed ? kExitSuccess : kExitFailure;
}

int verify(const VerifyOptions& o, std::ostream& out) {
  const ModelConfig cfg = load_config(o.config);
  if (!cfg.model) throw ConfigError(0, "/conditional", "verify needs a hierarchical model");
  if (o.pairs == 0) throw InvalidArgument("--pairs must be positive");
  const HierarchicalModel& m = *cfg.model;
  QuadratureSpec q = cfg.quadrature.value_or(QuadratureSpec{});
  if (o.rel_tol) q.rel_tol = *o.rel_tol;
  q.validate();
  const std::uint64_t seed = o.seed.value_or(cfg.seed.value_or(1));

  const auto states = sample_hierarchical(m, {seed, kStreamVerifyStates}, o.pairs, o.threads);
  std::vector<StatePair> pairs;
  std::vector<std::string> kinds;
  for (std::size_t i = 0; i < o.pairs; ++i) {
    const State x(states.row(i).begin(), states.row(i).end());
    const std::uint64_t pair_seed = mix64(seed) + i;
    if (i % 2 == 1 && m.dimension() >= 3) {
      try {
        pairs.push_back(random_rotation_pair(x, m.base(), pair_seed));
        kinds.push_back("rotation");
        continue;
      } catch (const ConvergenceError&) {
        // no rotation keeps this state inside the box
      }
    }
    pairs.push_back(permutation_pair(x, pair_seed));
    kinds.push_back("permutation");
  }
  const auto r = sufficiency_check(m, pairs, q, o.threads);

  // Controls change a feature: spread about the mean when SumOfSquares is a
  // feature, otherwise stretch away from the lower bound.
  const bool quadratic = std::any_of(m.features().begin(), m.features().end(), [](const auto& f) {
    return f.kind() == StatisticKind::SumOfSquares;
  });
  std::vector<StatePair> controls;
  for (std::size_t c = 0; c < o.controls; ++c) {
    const auto row = states.row(c % o.pairs);
    State x(row.begin(), row.end());
    double mean = 0.0;
    for (double v : x) mean += v / static_cast<double>(x.size());
    State y = x;
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double lo = m.base().lower(k), hi = m.base().upper(k);
      const double v = quadratic ? mean + 1.5 * (x[k] - mean) : lo + 1.1 * (x[k] - lo);
      y[k] = std::clamp(v, lo, hi);
    }
    controls.push_back({std::move(x), std::move(y)});
  }
  const auto rc = log_density_differences(m, controls, q, o.threads);
  const bool controls_ok = std::all_of(rc.differences.begin(), rc.differences.end(),
                                       [](double d) { return d >= 1.0; });

  json pair_list = json::array();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pair_list.push_back({{"index", i},
                         {"kind", kinds[i]},
                         {"x", pairs[i].x},
                         {"y", pairs[i].y},
                         {"statistic_gap", statistic_gap(m, pairs[i])},
                         {"log_density_x", r.log_density_x[i]},
                         {"log_density_y", r.log_density_y[i]},
                         {"difference", r.differences[i]}});
  }
  json control_list = json::array();
  for (std::size_t i = 0; i < controls.size(); ++i) {
    control_list.push_back({{"index", i},
                            {"kind", quadratic ? "spread-about-mean-1.5" : "stretch-from-lower-1.1"},
                            {"log_density_x", rc.log_density_x[i]},
                            {"log_density_y", rc.log_density_y[i]},
                            {"difference", rc.differences[i]},
                            {"detected", rc.differences[i] >= 1.0}});
  }
  const bool passed = r.passed() && controls_ok;
  json report{{"schema", kReportSchema},
              {"command", "verify"},
              {"config", cfg.source},
              {"seed", seed},
              {"family", to_string(m.family())},
              {"link", to_string(m.link())},
              {"features", names(m.features())},
              {"quadrature",
               {{"rule", to_string(q.rule)}, {"rel_tol", q.rel_tol}, {"max_depth", q.max_depth}}},
              {"tolerance", r.tolerance},
              {"max_difference", r.max_difference},
              {"sufficiency_passed", r.passed()},
              {"controls_detected", controls_ok},
              {"passed", passed},
              {"pairs", pair_list},
              {"negative_controls", control_list}};
  const std::string text = dump(report);
  if (o.out) {
    ensure_directory(*o.out);
    write_file(*o.out / "verify_report.json", text);
  }
  out << text;
  return passed ? kExitSuccess : kExitFailure;
}

int run_guarded(const std::function<int()>& command, std::ostream& err) {
  try {
    return command();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitParseError;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace maxent::cli
