#pragma once

// The subcommands of the maxent tool as plain functions. Each returns an exit
// code; run_guarded maps library errors to the documented codes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>

namespace maxent::cli {

enum ExitCode : int {
  kExitSuccess = 0,
  kExitFailure = 1,
  kExitInfeasible = 2,
  kExitParseError = 3,
  kExitIoError = 4,
};

enum class OutputFormat { Csv, Json };

// Fixed stream indices under the single --seed.
inline constexpr std::uint64_t kStreamExponentialUniform = 1;
inline constexpr std::uint64_t kStreamExponentialHierarchical = 2;
inline constexpr std::uint64_t kStreamGaussianUniform = 3;
inline constexpr std::uint64_t kStreamGaussianHierarchical = 4;
inline constexpr std::uint64_t kStreamVerifyStates = 5;

struct ExampleOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  /// 0 selects default_bins(samples).
  std::size_t bins = 0;
  std::filesystem::path out = ".";
  OutputFormat format = OutputFormat::Csv;
  bool svg = true;
  unsigned threads = 0;
};

/// log Mean under the uniform box and the hierarchical exponential model.
/// Writes exponential_{uniform,hierarchical}_log_mean.{csv,json},
/// exponential_summary.json and exponential_figure.svg into `out`.
int exponential_example(const ExampleOptions& options, std::ostream& log);

/// (Sum, log SumOfSquares) under the uniform box and the hierarchical
/// Gaussian model. Writes gaussian_{uniform,hierarchical}_t1_log_t2.{csv,json},
/// gaussian_summary.json and gaussian_figure.svg into `out`.
int gaussian_example(const ExampleOptions& options, std::ostream& log);

struct SolveOptions {
  enum class Mode { Moments, Bins };

  std::filesystem::path config;
  Mode mode = Mode::Moments;
  /// Defaults to 1e-9 for moments and 1e-12 for bins.
  std::optional<double> tol;
  int max_iterations = 200;
  /// Also write solve_report.json here.
  std::optional<std::filesystem::path> out;
};

/// Prints the solve report as JSON. Exit 1 when the report misses tol.
int solve(const SolveOptions& options, std::ostream& out);

struct VerifyOptions {
  std::filesystem::path config;
  std::size_t pairs = 50;
  std::size_t controls = 4;
  /// Overrides the config's quadrature rel_tol (default 1e-6).
  std::optional<double> rel_tol;
  /// Overrides the config's seed (default 1).
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  unsigned threads = 0;
};

/// Sufficiency check on equal-statistic pairs plus negative controls.
/// Prints the report as JSON; exit 0 iff every pair is within 2 rel_tol and
/// every control differs by at least 1.
int verify(const VerifyOptions& options, std::ostream& out);

/// Runs a command, printing errors to `err` and mapping them to exit codes:
/// ConfigError 3, IoError 4, InfeasibleError 2, any other error 1.
int run_guarded(const std::function<int()>& command, std::ostream& err);

}  // namespace maxent::cli
