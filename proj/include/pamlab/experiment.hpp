#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pamlab/error.hpp"
#include "pamlab/space.hpp"

namespace pamlab {

inline constexpr std::string_view kVersion = "0.1.0";

/// Raw key -> values pairs from a config file or command-line flags.
using Settings = std::map<std::string, std::vector<std::string>>;

/// Accepts a JSON object (arrays become value lists) or key=value lines
/// where values may be comma separated. '#' starts a comment line.
Settings parse_settings(std::string_view text);

struct ExperimentConfig {
  std::string space = "interval";  ///< interval | gasket | graph
  std::optional<int> level;
  std::optional<double> mesh;
  std::string graph;               ///< metric graph JSON file; empty = 3-arm star
  std::string bc = "dirichlet";
  double alpha = 0.0;
  std::vector<double> beta{1.0};
  double dt = 1e-3;
  double T = 0.1;
  std::size_t trials = 1000;
  std::vector<std::size_t> probes;
  std::uint64_t seed = 1;
  std::string out;
  int p = 2;
  double t = 0.1;
  std::optional<std::size_t> x;
  std::string word = "1";
  std::vector<double> times;       ///< scaling-test grid; empty = {T}
  std::size_t record_every = 0;    ///< 0 = final time only
  double tolerance = 3.0;
  double u0 = 1.0;

  /// Canonical echo used in report manifests.
  std::string echo() const;
};

/// Builds a config from file settings overridden key by key by flag
/// settings. Errors name the offending field.
ExperimentConfig make_config(const Settings& file, const Settings& flags = {});

std::shared_ptr<const Space> build_space(const ExperimentConfig& config);

struct RunResult {
  std::string report;
  std::optional<Error> error;  ///< set when the report holds partial results
};

/// Pipelines: build-space, spectrum, heat-check, simulate, moments, fk,
/// scaling-test, theory, phase-sweep. Throws Error on invalid input.
RunResult run(std::string_view pipeline, const ExperimentConfig& config);

struct CompareRow {
  std::string key;
  double a = 0.0;
  double b = 0.0;
  double se_a = 0.0;
  double se_b = 0.0;
  double z = 0.0;  ///< |a - b| / sqrt(se_a^2 + se_b^2)
  bool pass = false;
};

struct CompareResult {
  std::vector<CompareRow> rows;
  double tolerance = 3.0;

  bool all_pass() const;
  std::string table() const;
};

/// Row-by-row comparison of two CSV reports with identical headers and key
/// sets. Keys are all columns except the value ("estimate" or "slope") and
/// "stderr". A row passes when z <= tolerance; rows without error bars must
/// agree to 1e-12 relative.
CompareResult compare(std::string_view report_a, std::string_view report_b, double tolerance = 3.0);

/// One-line JSON error record for CLI output.
std::string error_record(const Error& error);

}  // namespace pamlab
