#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "rareevent/core.hpp"
#include "rareevent/gp.hpp"
#include "rareevent/result.hpp"
#include "rareevent/smc.hpp"
#include "rareevent/sur.hpp"

namespace rareevent::bss {

/// log g values below this are floored (and counted) before forming ratios.
inline constexpr double kLogGFloor = -700.0;

struct BssConfig {
  std::size_t m = 1000;
  double p0 = 0.1;
  double eta_intermediate = 0.5;
  double eta_final_factor = 0.1;  ///< eta_T = factor * delta_hat_T
  std::size_t n_min = 2;
  std::size_t n0 = 0;             ///< 0 means 5 d
  double design_epsilon = 1e-5;
  std::size_t design_candidates = 10000;  ///< Q
  smc::RwmhConfig kernel;
  sur::SurConfig sur;
  gp::RemlConfig reml;
  int max_stages = 50;
  std::size_t max_total_evaluations = 500;

  void validate() const;
};

/// The posterior model seen by the driver.
class Emulator {
 public:
  virtual ~Emulator() = default;
  virtual void predict(const PointMatrix& pts, Vector& mean, Vector& var) const = 0;
  /// Variances at or below this count as zero.
  virtual double variance_floor() const = 0;
  virtual sur::Selection select(const ParticleSystem& particles, double u,
                                const sur::SurConfig& config) const = 0;
  virtual void observe(std::span<const double> x, double y) = 0;
};

/// Gaussian process refitted by ReML after every observation (warm-started from the last
/// ranges). A failed refit keeps the previous hyperparameters.
class GpEmulator final : public Emulator {
 public:
  GpEmulator(PointMatrix x, Vector y, gp::RemlConfig reml);

  void predict(const PointMatrix& pts, Vector& mean, Vector& var) const override;
  double variance_floor() const override { return model_->variance_floor(); }
  sur::Selection select(const ParticleSystem& particles, double u,
                        const sur::SurConfig& config) const override;
  void observe(std::span<const double> x, double y) override;

  const gp::GpModel& model() const { return *model_; }
  std::size_t refit_failures() const { return refit_failures_; }

 private:
  gp::RemlConfig reml_;
  std::unique_ptr<gp::GpModel> model_;
  std::size_t refit_failures_ = 0;
};

/// Builds the emulator from the evaluated initial design.
using EmulatorFactory = std::function<std::unique_ptr<Emulator>(const PointMatrix&, const Vector&)>;

EmulatorFactory gp_emulator_factory(const gp::RemlConfig& reml = {});

/// Posterior summaries at the particles plus their weights and log g_{t-1}.
struct StageView {
  const Vector* mean = nullptr;
  const Vector* sd = nullptr;
  const Vector* log_weights = nullptr;  ///< normalized
  const Vector* log_g_prev = nullptr;
};

/// sum_j w_j g(Y_j; u) / g_prev(Y_j), the estimated conditional probability at threshold u.
double ratio_mean(const StageView& v, double u);

/// Solves ratio_mean(u) = p0 by bisection; with every sd zero returns the exact weighted order
/// statistic. Throws EstimatorError when no bracket is found.
double solve_threshold(const StageView& v, double p0, double f_scale);

/// m sum_j w_j tau(Y_j) / g_prev(Y_j) <= eta m p.
bool stopping_check(const StageView& v, double u, double eta, double p);
double misclass_sum(const StageView& v, double u);

/// (1 / p_hat^2) sum_j w_j (r_j - p_hat)^2. Throws EstimatorError for p_hat <= 0.
double kappa_hat(const Vector& ratios, const Vector& weights, double p_hat);
double kappa_hat(const Vector& ratios, double p_hat);

/// delta_t^2 = kappa_t / m + (1 + kappa_t / m) delta_{t-1}^2, delta_0 = 0; returns delta_t.
std::vector<double> cov_recursion(const std::vector<double>& kappas, std::size_t m);

EstimationResult run_bss(const Problem& problem, const BssConfig& config, RngStream& rng,
                         const EmulatorFactory& factory = gp_emulator_factory());

// ---- Fixed-level SMC (no emulator, known g functions) ----

/// log g_t at each row.
using LogGFunction = std::function<void(const PointMatrix&, Vector&)>;

/// Draws m i.i.d. points from q_t (used when `iid` moves are requested).
using ExactSampler = std::function<PointMatrix(std::size_t t, std::size_t m, RngStream& rng)>;

struct FixedLevelResult {
  double alpha_hat = 0.0;
  std::vector<double> p_hat;
  std::vector<double> kappa_hat;
  std::vector<double> delta_hat;
};

/// Product estimator over the prescribed levels g_1..g_T (g_0 = 1). Between levels the
/// particles are reweighted, resampled and moved, or redrawn i.i.d. from q_t when `sampler`
/// is given.
FixedLevelResult run_fixed_levels(const InputDistribution& input, const std::vector<LogGFunction>& levels,
                                  std::size_t m, const smc::RwmhConfig& kernel, RngStream& rng,
                                  const ExactSampler& sampler = nullptr);

}  // namespace rareevent::bss
