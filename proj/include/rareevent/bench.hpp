#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rareevent/bss.hpp"
#include "rareevent/core.hpp"
#include "rareevent/result.hpp"
#include "rareevent/smc.hpp"

namespace rareevent::bench {

struct BenchmarkCase {
  std::string name;
  Problem problem;
  double alpha_ref = 0.0;
  double alpha_ref_cov = 0.0;
};

double four_branch_f(std::span<const double> x);
double cantilever_f(std::span<const double> x);
/// NaN when x1 <= 0 or x2 + x3 <= 0.
double oscillator_f(std::span<const double> x);

BenchmarkCase four_branch();
BenchmarkCase cantilever_beam();
BenchmarkCase nonlinear_oscillator();

/// "four-branch", "cantilever" or "oscillator"; throws ConfigError otherwise.
BenchmarkCase case_by_name(const std::string& name);
std::vector<std::string> case_names();

enum class Method { Mc, Ss, Bss };
Method parse_method(const std::string& name);
std::string to_string(Method method);

/// Settings shared by every run of an experiment; m is set per run.
struct MethodSettings {
  double p0 = 0.1;
  smc::RwmhConfig kernel;
  bss::BssConfig bss;  ///< m and p0 are overwritten
  int max_stages = 50;
};

EstimationResult run_method(const Problem& problem, Method method, std::size_t m,
                            const MethodSettings& settings, RngStream& rng);

/// Substream for run `run` at sample size `m`; independent of execution order.
RngStream run_stream(std::uint64_t seed, std::size_t m, std::size_t run);

struct RunRecord {
  std::string method;
  std::string case_name;
  std::size_t m = 0;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double wall_ms = 0.0;
  EstimationResult result;
};

struct RmseRow {
  std::string method;
  std::string case_name;
  std::size_t m = 0;
  std::size_t runs = 0;
  std::size_t failed = 0;
  double mean_est = 0.0;
  double rel_rmse = 0.0;
  double rel_abs_bias = 0.0;
  double cov = 0.0;
  double n_evals_mean = 0.0;
  double n_evals_init = 0.0;
  double n_evals_intermediate = 0.0;
  double n_evals_final = 0.0;
  double wall_ms_median = 0.0;
};

struct RmseTable {
  std::vector<RmseRow> rows;
  std::vector<RunRecord> runs;
};

/// Statistics over the successful runs.
RmseRow summarize(const std::vector<RunRecord>& runs, double alpha_ref);

/// `jobs` independent runs execute concurrently; the table does not depend on it.
RmseTable run_rmse_experiment(const BenchmarkCase& bench_case, Method method,
                              const std::vector<std::size_t>& m_values, std::size_t runs,
                              std::uint64_t seed, const MethodSettings& settings = {}, int jobs = 1);

void write_rmse_csv(std::ostream& out, const std::vector<RmseRow>& rows);
/// One row per run (long format).
void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs);

/// Mean of `replicates` subset-simulation runs at sample size m.
double recompute_reference(const BenchmarkCase& bench_case, std::size_t m, std::size_t replicates,
                           std::uint64_t seed);

}  // namespace rareevent::bench
