#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rareevent/core.hpp"

namespace rareevent {

struct StageRecord {
  int t = 0;
  double u_t = 0.0;
  std::size_t n_evals = 0;  ///< N_t
  double p_hat = 0.0;       ///< alpha_t / alpha_{t-1}
  double kappa_hat = 0.0;
  double delta_hat = 0.0;   ///< running coefficient of variation after this stage
  std::vector<double> acceptance;  ///< move-step acceptance per sweep (empty on the final stage)
};

/// One sequential-design step of the BSS driver.
struct SurTraceRow {
  std::size_t n = 0;  ///< evaluation count after this step
  std::vector<double> x_new;
  double criterion = 0.0;
  double u_t = 0.0;
  int stage = 0;
};

struct EstimationResult {
  std::string method;
  double alpha_hat = 0.0;
  double delta_hat = 0.0;  ///< estimated coefficient of variation (std error / estimate for mc)
  std::vector<StageRecord> stages;

  std::size_t n_initial = 0;       ///< evaluations at stage 0
  std::size_t n_intermediate = 0;  ///< evaluations in stages 1..T-1
  std::size_t n_final = 0;         ///< evaluations in the final stage
  std::size_t n_total = 0;         ///< reported evaluation count
  std::size_t limit_state_calls = 0;  ///< actual calls, MCMC sweeps included

  std::size_t log_g_floor_hits = 0;
  bool ok = true;
  std::string error;
  std::vector<EvaluationRecord> evaluations;  ///< design points (bss only)
  std::vector<SurTraceRow> trace;             ///< bss only
};

}  // namespace rareevent
