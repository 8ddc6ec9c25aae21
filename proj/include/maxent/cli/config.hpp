#pragma once

// Model configuration files: one JSON document with a versioned "schema"
// field. Every section other than the schema is optional; each command checks
// for the sections it needs.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "maxent/error.hpp"
#include "maxent/indicator.hpp"
#include "maxent/model.hpp"
#include "maxent/moment_solver.hpp"
#include "maxent/sampler.hpp"
#include "maxent/verification.hpp"

namespace maxent::cli {

inline constexpr std::string_view kConfigSchema = "maxent-model/1";
inline constexpr std::string_view kReportSchema = "maxent-report/1";

/// Malformed or invalid config. `line` is 1-based (0 when unknown) and
/// `field` is a JSON pointer such as "/box/hi".
class ConfigError : public Error {
 public:
  ConfigError(std::size_t line, std::string field, const std::string& what);

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

struct StatisticSpec {
  Statistic statistic;
  Transform transform = Transform::Identity;
};

/// A finite state space with a marginal constraint on one statistic.
struct BinProblem {
  WeightedDiscreteModel model;
  BinConstraintSet constraints;
};

struct ModelConfig {
  std::optional<BoxPrior> box;
  std::optional<HierarchicalModel> model;
  std::vector<StatisticSpec> statistics;
  std::optional<MomentConstraintSet> moments;
  std::optional<BinProblem> bin_problem;
  std::optional<QuadratureSpec> quadrature;
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> bins;
  /// The parsed document, echoed into reports.
  nlohmann::ordered_json source;
};

/// Parses a config document. Throws ConfigError with the line of the
/// offending token or field.
ModelConfig parse_config(std::string_view text);

/// Reads and parses a config file. Throws IoError when it cannot be read.
ModelConfig load_config(const std::filesystem::path& path);

/// "mean", "sum" or "sum_of_squares".
Statistic statistic_from_name(const std::string& name);

}  // namespace maxent::cli
