#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "maxent/cli/commands.hpp"

using namespace maxent::cli;

int main(int argc, char** argv) {
  CLI::App app{"Maximum-entropy priors, hierarchical mixtures and sufficiency checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "maxent 1.0");

  const std::map<std::string, OutputFormat> formats{{"csv", OutputFormat::Csv},
                                                    {"json", OutputFormat::Json}};

  ExampleOptions expo, gauss;
  auto add_example = [&](const char* name, const char* help, ExampleOptions& o) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--samples", o.samples, "Monte Carlo samples")->capture_default_str()
        ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
    sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    sub->add_option("--bins", o.bins, "Histogram bins (default: automatic)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--format", o.format, "Histogram format: csv or json")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
    sub->add_flag("--svg,!--no-svg", o.svg, "Write the SVG figure (default on)");
    sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
    return sub;
  };
  auto* expo_cmd = add_example("exponential-example",
                               "log Mean under the uniform box and the hierarchical exponential model",
                               expo);
  auto* gauss_cmd = add_example("gaussian-example",
                                "(Sum, log SumOfSquares) under the uniform box and the hierarchical "
                                "Gaussian model",
                                gauss);

  SolveOptions solve_opts;
  auto* solve_cmd = app.add_subcommand("solve", "Solve for Lagrange multipliers");
  solve_cmd->add_option("config", solve_opts.config, "Model config (JSON)")->required();
  auto* by_bins = solve_cmd->add_flag("--bins", "Constrain the marginal of a statistic over bins");
  auto* by_moments = solve_cmd->add_flag("--moments", "Constrain expected values (default)");
  by_bins->excludes(by_moments);
  solve_cmd->add_option("--tol", solve_opts.tol, "Tolerance (default 1e-9 moments, 1e-12 bins)");
  solve_cmd->add_option("--max-iterations", solve_opts.max_iterations)->capture_default_str();
  solve_cmd->add_option("--out", solve_opts.out, "Also write solve_report.json here");

  VerifyOptions verify_opts;
  auto* verify_cmd = app.add_subcommand("verify", "Check that the marginal depends on x only via the features");
  verify_cmd->add_option("config", verify_opts.config, "Model config (JSON)")->required();
  verify_cmd->add_option("--pairs", verify_opts.pairs, "Equal-statistic pairs")
      ->capture_default_str()->check(CLI::PositiveNumber);
  verify_cmd->add_option("--controls", verify_opts.controls, "Negative-control pairs")
      ->capture_default_str();
  verify_cmd->add_option("--reltol", verify_opts.rel_tol, "Quadrature relative tolerance");
  verify_cmd->add_option("--seed", verify_opts.seed, "Random seed (default: config, then 1)");
  verify_cmd->add_option("--out", verify_opts.out, "Also write verify_report.json here");
  verify_cmd->add_option("--threads", verify_opts.threads, "Worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitParseError;
  }

  if (*expo_cmd) return run_guarded([&] { return exponential_example(expo, std::cerr); }, std::cerr);
  if (*gauss_cmd) return run_guarded([&] { return gaussian_example(gauss, std::cerr); }, std::cerr);
  if (*solve_cmd) {
    solve_opts.mode = *by_bins ? SolveOptions::Mode::Bins : SolveOptions::Mode::Moments;
    return run_guarded([&] { return solve(solve_opts, std::cout); }, std::cerr);
  }
  return run_guarded([&] { return verify(verify_opts, std::cout); }, std::cerr);
}
