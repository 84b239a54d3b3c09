#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rareevent/result.hpp"

namespace rareevent::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kConfigError = 2, kEstimatorError = 3 };

/// Entry point shared by the executable and the tests. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Resolved settings of one `estimate` run, as stored in the manifest.
struct EstimateConfig {
  std::string method = "bss";
  std::string problem;             ///< case name or file:<path>
  std::string problem_definition;  ///< file contents for file problems, replayed verbatim
  std::size_t m = 1000;
  double p0 = 0.1;
  std::uint64_t seed = 0;
  std::size_t max_evaluations = 500;
  int max_stages = 50;
};

/// Manifest JSON (schema 1). Wall-clock fields live under "timestamps".
std::string manifest_json(const EstimateConfig& config, const EstimationResult& result,
                          const std::string& started, const std::string& finished, double wall_ms);

/// Recovers the configuration from manifest JSON. Throws ConfigError.
EstimateConfig config_from_manifest(const std::string& text);

/// Runs one configured estimate.
EstimationResult run_estimate(const EstimateConfig& config);

}  // namespace rareevent::cli
