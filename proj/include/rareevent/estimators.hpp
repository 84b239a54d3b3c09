#pragma once

#include <cstddef>

#include "rareevent/core.hpp"
#include "rareevent/result.hpp"
#include "rareevent/smc.hpp"

namespace rareevent::estimators {

struct McResult {
  double alpha_hat = 0.0;
  double std_err = 0.0;
  std::size_t failures = 0;
  std::size_t m = 0;
  bool degenerate() const { return failures == 0 || failures == m; }
};

McResult monte_carlo_estimate(const Problem& problem, std::size_t m, RngStream& rng);

/// Monte Carlo wrapped as an EstimationResult.
EstimationResult run_monte_carlo(const Problem& problem, std::size_t m, RngStream& rng);

struct SubsetSimConfig {
  std::size_t m = 1000;
  std::size_t m0 = 100;  ///< surviving particles per stage, p0 = m0 / m
  smc::RwmhConfig kernel;
  int max_stages = 50;

  double p0() const { return static_cast<double>(m0) / static_cast<double>(m); }
};

/// Subset simulation with adaptive thresholds. Throws EstimatorError past max_stages.
EstimationResult run_subset_simulation(const Problem& problem, const SubsetSimConfig& config,
                                       RngStream& rng);

/// (T / m)(1 - p0) / p0 with T = ceil(log alpha / log p0).
double ss_relative_variance_approx(double alpha, double p0, std::size_t m);

/// Number of stages ceil(log alpha / log p0), at least 1.
int ss_stage_count(double alpha, double p0);

}  // namespace rareevent::estimators
