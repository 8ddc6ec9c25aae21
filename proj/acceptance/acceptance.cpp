// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "maxent/error.hpp"
#include "maxent/indicator.hpp"
#include "maxent/moment_solver.hpp"
#include "maxent/rng.hpp"
#include "maxent/sampler.hpp"
#include "maxent/verification.hpp"

using namespace maxent;
namespace fs = std::filesystem;

namespace {

// Stream indices shared with the CLI so results line up with its reports.
constexpr std::uint64_t kSeed = 1;
constexpr std::uint64_t kStreamClt = 1;
constexpr std::uint64_t kStreamExpHier = 2;
constexpr std::uint64_t kStreamGaussUniform = 3;
constexpr std::uint64_t kStreamGaussHier = 4;
constexpr std::uint64_t kStreamStates = 5;
constexpr std::size_t kSamples = 100000;
constexpr std::size_t kN = 100;

struct Outcome {
  bool passed = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome clt_prior() {
  Stopwatch clock;
  const auto t = sample_statistics(BoxPrior::cube(kN, 0.0, 100.0), {Statistic::mean()},
                                   {Transform::Identity}, {kSeed, kStreamClt}, kSamples);
  const auto m = sample_moments(t.values);
  const double secs = clock.seconds();
  const double sd_rel = std::abs(m.sd / 2.89 - 1.0);
  const bool ok = std::abs(m.mean - 50.0) <= 0.03 && sd_rel <= 0.03 && secs < 5.0;
  return {ok, "mean=" + num(m.mean) + " (50 +- 0.03), sd=" + num(m.sd) + " (2.89 +- 3%, rel " +
                  num(sd_rel, 3) + "), " + num(secs, 3) + " s (< 5 s)"};
}

Outcome figure1() {
  Stopwatch clock;
  const auto model = HierarchicalModel::exponential(kN, 1e4, -5.0, 5.0);
  const auto hier = sample_statistics(model, {Statistic::mean()}, {Transform::Log},
                                      {kSeed, kStreamExpHier}, kSamples);
  const double ks = ks_statistic(hier.values, ReferenceCdf::uniform(-5.0, 5.0));
  const auto uni = sample_statistics(BoxPrior::cube(kN, 0.0, 100.0), {Statistic::mean()},
                                     {Transform::Log}, {kSeed, kStreamClt}, kSamples);
  const auto m = sample_moments(uni.values);
  const double secs = clock.seconds();
  const bool ok = ks <= 0.05 && m.sd <= 0.07 && std::abs(m.mean - std::log(50.0)) <= 0.07 &&
                  secs < 30.0;
  return {ok, "KS(log Mean, U(-5,5))=" + num(ks, 4) + " (<= 0.05), uniform log Mean " +
                  num(m.mean, 5) + " +- " + num(m.sd, 4) + " (sd <= 0.07 around " +
                  num(std::log(50.0), 5) + "), " + num(secs, 3) + " s (< 30 s)"};
}

Outcome figure2() {
  Stopwatch clock;
  const auto model = HierarchicalModel::gaussian(kN, -100.0, 100.0, -100.0, 100.0, -5.0, 5.0);
  const auto hier = sample_statistics(model, {Statistic::mean()}, {Transform::Identity},
                                      {kSeed, kStreamGaussHier}, kSamples);
  const double ks = ks_statistic(hier.values, ReferenceCdf::uniform(-100.0, 100.0));
  const auto uni = sample_statistics(BoxPrior::cube(kN, -100.0, 100.0), {Statistic::sum_of_squares()},
                                     {Transform::Identity}, {kSeed, kStreamGaussUniform}, kSamples);
  const double t2 = sample_moments(uni.values).mean / static_cast<double>(kN);
  const double expected = 200.0 * 200.0 / 12.0;
  const double secs = clock.seconds();
  const bool ok = ks <= 0.05 && std::abs(t2 / expected - 1.0) <= 0.01 && secs < 30.0;
  return {ok, "KS(T1/n, U(-100,100))=" + num(ks, 4) + " (<= 0.05), uniform mean T2/n=" + num(t2) +
                  " (3333.3 +- 1%), " + num(secs, 3) + " s (< 30 s)"};
}

// Mean of exp(-theta x) on [0, hi] by its closed form, solved by bisection.
double bisection_rate(double mean, double hi) {
  auto mean_of = [&](double theta) {
    return 1.0 / theta - hi / std::expm1(theta * hi);
  };
  double lo = 1e-9, up = 1e3;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + up);
    (mean_of(mid) > mean ? lo : up) = mid;
  }
  return 0.5 * (lo + up);
}

// E[x] and E[x^2] of N(0, 1) truncated to [-a, a].
std::pair<double, double> truncated_standard_normal_moments(double a) {
  const double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * std::numbers::pi);
  const double mass = std::erf(a / std::sqrt(2.0));
  return {0.0, 1.0 - 2.0 * a * phi / mass};
}

bool non_increasing(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i] > trace[i - 1]) return false;
  }
  return true;
}

Outcome moment_solver() {
  const double oracle = -bisection_rate(5.0, 100.0);
  const auto one = solve_multipliers(BoxPrior::cube(1, 0.0, 100.0), {{Statistic::mean()}, {5.0}});
  const auto many = solve_multipliers(BoxPrior::cube(kN, 0.0, 100.0), {{Statistic::mean()}, {5.0}});
  const double per_coordinate = many.multipliers[0] / static_cast<double>(kN);

  const auto [m1, m2] = truncated_standard_normal_moments(100.0);
  const double n = static_cast<double>(kN);
  const auto gauss = solve_multipliers(BoxPrior::cube(kN, -100.0, 100.0),
                                       {{Statistic::sum(), Statistic::sum_of_squares()},
                                        {n * m1, n * m2}});
  const double e1 = std::abs(one.multipliers[0] - oracle);
  const double e100 = std::abs(per_coordinate - oracle);
  const double g1 = std::abs(gauss.multipliers[0]);
  const double g2 = std::abs(gauss.multipliers[1] + 0.5);
  const bool monotone =
      non_increasing(one.dual_trace) && non_increasing(many.dual_trace) && non_increasing(gauss.dual_trace);
  const bool ok = e1 <= 1e-6 && e100 <= 1e-6 && std::abs(oracle + 0.2) <= 1e-6 && g1 <= 1e-4 &&
                  g2 <= 1e-4 && monotone;
  return {ok, "lambda=" + num(one.multipliers[0], 12) + " vs bisection " + num(oracle, 12) +
                  " (|d|=" + num(e1, 2) + "), n=100 per-coordinate |d|=" + num(e100, 2) +
                  ", gaussian (" + num(gauss.multipliers[0], 3) + ", " +
                  num(gauss.multipliers[1], 10) + ") vs (0, -0.5) +- 1e-4, dual non-increasing=" +
                  (monotone ? "yes" : "no")};
}

// ---------------------------------------------------------------------------

struct Instance {
  WeightedDiscreteModel model;
  BinConstraintSet constraints;
};

// Integer-valued states in 1 to 3 dimensions, T = Sum; bins are either edge
// intervals with random cut points or the attainable values of T.
Instance acceptance_instance(std::uint64_t index) {
  CounterRng rng(SeededStream{2024, 7}, index);
  const std::size_t dims = 1 + static_cast<std::size_t>(rng.uniform() * 3.0);
  const std::size_t target_states = 2 + static_cast<std::size_t>(rng.uniform() * 9999.0);
  const std::size_t side =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::pow(target_states, 1.0 / dims)));
  std::vector<std::vector<double>> axes(dims);
  for (auto& a : axes) {
    for (std::size_t v = 0; v < side; ++v) a.push_back(static_cast<double>(v));
  }
  std::vector<State> states{State{}};
  for (const auto& a : axes) {
    std::vector<State> next;
    for (const auto& s : states) {
      for (double v : a) {
        next.push_back(s);
        next.back().push_back(v);
      }
    }
    states = std::move(next);
  }
  std::vector<double> prior(states.size());
  for (double& p : prior) p = rng.uniform() < 0.05 ? 0.0 : -std::log(rng.uniform());
  prior[0] += 1.0;
  const double z = std::accumulate(prior.begin(), prior.end(), 0.0);
  for (double& p : prior) p /= z;

  const double t_max = static_cast<double>(dims * (side - 1));
  const bool discrete = t_max + 1 <= 20 && rng.uniform() < 0.5;
  std::vector<double> edges;
  if (discrete) {
    for (double t = 0; t <= t_max; t += 1.0) edges.push_back(t);
  } else {
    const std::size_t bins = 1 + static_cast<std::size_t>(rng.uniform() * std::min(20.0, t_max));
    std::vector<double> cuts;
    while (cuts.size() + 1 < bins) {
      const double c = std::floor(rng.uniform() * t_max) + 0.5;
      if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    edges.push_back(0.0);
    edges.insert(edges.end(), cuts.begin(), cuts.end());
    edges.push_back(t_max);
  }
  WeightedDiscreteModel model(std::move(states), prior, Statistic::sum());

  BinConstraintSet c{Statistic::sum(), edges, {}, discrete};
  std::vector<double> mass(c.bin_count(), 0.0);
  const auto features = discrete ? value_indicator_features(c.statistic, edges)
                                 : bin_indicator_features(c.statistic, edges);
  for (std::size_t k = 0; k < model.size(); ++k) {
    for (std::size_t b = 0; b < features.size(); ++b) mass[b] += prior[k] * features[b](model.states()[k]);
  }
  std::vector<double> target(c.bin_count(), 0.0);
  for (std::size_t b = 0; b < target.size(); ++b) {
    if (mass[b] > 0.0) target[b] = rng.uniform() < 0.1 ? 0.0 : -std::log(rng.uniform());
  }
  target[std::max_element(mass.begin(), mass.end()) - mass.begin()] += 0.25;
  const double tz = std::accumulate(target.begin(), target.end(), 0.0);
  for (double& t : target) t /= tz;
  c.target_probs = target;
  return {std::move(model), std::move(c)};
}

Outcome indicator_solver() {
  Stopwatch clock;
  double worst_tv = 0.0, worst_marginal = 0.0, smallest_gap = INFINITY;
  std::size_t failures = 0, max_states = 0, max_bins = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto inst = acceptance_instance(i);
    const auto& m = inst.model;
    const auto& c = inst.constraints;
    max_states = std::max(max_states, m.size());
    max_bins = std::max(max_bins, c.bin_count());
    const auto p = reweight(m, exp_multipliers(solve_bin_multipliers(m, c)), c);
    const double tv = total_variation(p, brute_force_maxent(m, c));

    const auto features = c.discrete_values ? value_indicator_features(c.statistic, c.bin_edges)
                                            : bin_indicator_features(c.statistic, c.bin_edges);
    std::vector<double> achieved(features.size(), 0.0);
    for (std::size_t k = 0; k < m.size(); ++k) {
      for (std::size_t b = 0; b < features.size(); ++b) achieved[b] += p[k] * features[b](m.states()[k]);
    }
    double marginal = 0.0;
    for (std::size_t b = 0; b < achieved.size(); ++b) {
      marginal = std::max(marginal, std::abs(achieved[b] - c.target_probs[b]));
    }

    const auto prior = m.prior_distribution();
    const double h = entropy(p, prior);
    double gap = INFINITY;
    for (const auto& alt : perturbed_feasible(m, c, p, 1000 + i, 100)) {
      gap = std::min(gap, h - entropy(alt, prior));
    }
    worst_tv = std::max(worst_tv, tv);
    worst_marginal = std::max(worst_marginal, marginal);
    smallest_gap = std::min(smallest_gap, gap);
    if (!(tv <= 1e-12 && marginal <= 1e-12 && gap > 0.0)) ++failures;
  }
  return {failures == 0,
          "200 instances (up to " + std::to_string(max_states) + " states, " +
              std::to_string(max_bins) + " bins): max TV=" + num(worst_tv, 3) +
              ", max marginal error=" + num(worst_marginal, 3) + " (<= 1e-12), min entropy margin over 100 perturbations=" +
              num(smallest_gap, 3) + " (> 0), failing instances=" + std::to_string(failures) +
              ", " + num(clock.seconds(), 3) + " s"};
}

// ---------------------------------------------------------------------------

struct PairSet {
  std::vector<StatePair> pairs;
  std::vector<StatePair> controls;
  std::size_t rotations = 0;
};

PairSet build_pairs(const HierarchicalModel& m, std::size_t count, bool quadratic) {
  PairSet s;
  const auto states = sample_hierarchical(m, {kSeed, kStreamStates}, count);
  for (std::size_t i = 0; i < count; ++i) {
    const State x(states.row(i).begin(), states.row(i).end());
    const std::uint64_t seed = mix64(kSeed) + i;
    if (i % 2 == 1) {
      try {
        s.pairs.push_back(random_rotation_pair(x, m.base(), seed));
        ++s.rotations;
        continue;
      } catch (const ConvergenceError&) {
      }
    }
    s.pairs.push_back(permutation_pair(x, seed));
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const State x(states.row(i).begin(), states.row(i).end());
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    State y = x;
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double lo = m.base().lower(k), hi = m.base().upper(k);
      y[k] = std::clamp(quadratic ? mean + 1.5 * (x[k] - mean) : lo + 1.1 * (x[k] - lo), lo, hi);
    }
    s.controls.push_back({x, y});
  }
  return s;
}

Outcome sufficiency() {
  Stopwatch clock;
  QuadratureSpec q;
  q.rel_tol = 1e-6;
  std::string detail;
  bool ok = true;
  const std::pair<const char*, HierarchicalModel> models[] = {
      {"exponential", HierarchicalModel::exponential(kN, 1e4, -5.0, 5.0)},
      {"gaussian", HierarchicalModel::gaussian(kN, -100.0, 100.0, -100.0, 100.0, -5.0, 5.0)}};
  for (const auto& [name, m] : models) {
    const bool quadratic = m.link() == LinkKind::Gaussian;
    const auto set = build_pairs(m, 50, quadratic);
    const auto r = sufficiency_check(m, set.pairs, q);
    const auto c = log_density_differences(m, set.controls, q);
    const double min_control = *std::min_element(c.differences.begin(), c.differences.end());
    ok = ok && r.passed() && min_control >= 1.0;
    detail += std::string(name) + ": max diff=" + num(r.max_difference, 3) + " (<= " +
              num(r.tolerance, 3) + ", " + std::to_string(set.rotations) +
              " rotations), min control diff=" + num(min_control, 4) + " (>= 1); ";
  }
  const double secs = clock.seconds();
  ok = ok && secs < 60.0;
  return {ok, detail + num(secs, 3) + " s (< 60 s)"};
}

Outcome cross_module() {
  Stopwatch clock;
  const auto model = HierarchicalModel::exponential(kN, 1e4, -5.0, 5.0);
  const auto h = implied_statistic_histogram(model, Statistic::mean(), Transform::Log,
                                             {kSeed, kStreamExpHier}, kSamples);
  const auto p = implied_bin_probabilities(model, Statistic::mean(), Transform::Log, h.edges);
  const double total = static_cast<double>(h.total);
  std::size_t within = 0;
  for (std::size_t b = 0; b < h.bins(); ++b) {
    const double expected = total * p[b];
    const double se = std::sqrt(total * p[b] * (1.0 - p[b]));
    if (std::abs(static_cast<double>(h.counts[b]) - expected) <= 3.0 * se) ++within;
  }
  const double fraction = static_cast<double>(within) / static_cast<double>(h.bins());
  const double mass = std::accumulate(p.begin(), p.end(), 0.0);
  return {fraction >= 0.95,
          std::to_string(within) + "/" + std::to_string(h.bins()) + " bins within 3 SE (" +
              num(100.0 * fraction, 4) + "%, need >= 95%), quadrature mass over histogram range=" +
              num(mass, 10) + ", " + num(clock.seconds(), 3) + " s"};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

Outcome determinism(const fs::path& cli, const fs::path& configs) {
  Stopwatch clock;
  const fs::path root = fs::temp_directory_path() / "maxent_acceptance_determinism";
  fs::remove_all(root);
  struct Run {
    std::string name;
    std::string args;
  };
  const std::vector<Run> runs{
      {"exponential-example", "exponential-example --seed 3"},
      {"gaussian-example", "gaussian-example --seed 3 --samples 20000 --format json"},
      {"solve-moments", "solve " + quoted(configs / "gaussian_moments.json") + " --moments"},
      {"solve-bins", "solve " + quoted(configs / "bins.json") + " --bins"},
      {"verify-exponential", "verify " + quoted(configs / "exponential.json") + " --pairs 20"},
      {"verify-gaussian", "verify " + quoted(configs / "gaussian.json") + " --pairs 6"},
  };
  std::size_t compared = 0;
  std::vector<std::string> differing;
  for (const auto& run : runs) {
    std::vector<fs::path> dirs;
    for (int k = 0; k < 2; ++k) {
      const fs::path dir = root / run.name / ("run" + std::to_string(k));
      fs::create_directories(dir);
      const std::string cmd = quoted(cli) + " " + run.args + " --out " + quoted(dir) + " > " +
                              quoted(dir / "stdout.txt") + " 2> " + quoted(dir / "stderr.txt");
      const int status = std::system(cmd.c_str());
      if (status != 0) differing.push_back(run.name + " (exit status " + std::to_string(status) + ")");
      dirs.push_back(dir);
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      if (entry.path().filename() == "stderr.txt") continue;
      ++compared;
      const fs::path other = dirs[1] / entry.path().filename();
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
        differing.push_back(run.name + "/" + entry.path().filename().string());
      }
    }
  }
  std::string detail = std::to_string(runs.size()) + " invocations run twice, " +
                       std::to_string(compared) + " outputs compared, ";
  if (differing.empty()) {
    detail += "all byte-identical";
  } else {
    detail += "mismatches:";
    for (const auto& d : differing) detail += " " + d;
  }
  return {differing.empty() && compared > 0, detail + ", " + num(clock.seconds(), 3) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-8"};
  fs::path cli, configs;
  std::vector<int> only;
  app.add_option("--cli", cli, "Path to the maxent executable")->required();
  app.add_option("--configs", configs, "Directory with the sample configs")->required();
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"CLT-implied prior of the mean", clt_prior},
      {"exponential example log Mean pipelines", figure1},
      {"Gaussian example (T1, T2) pipelines", figure2},
      {"moment solver against oracles", moment_solver},
      {"indicator solver against brute force", indicator_solver},
      {"sufficiency of the features", sufficiency},
      {"quadrature marginal vs sampler histogram", cross_module},
      {"CLI determinism", [&] { return determinism(cli, configs); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.passed ? 0 : 1;
    std::cout << (o.passed ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
