#pragma once

#include <optional>
#include <span>

#include "rareevent/core.hpp"
#include "rareevent/kernels.hpp"

namespace rareevent::gp {

/// Relative jitter added to the covariance diagonal before factorization.
inline constexpr double kNugget = 1e-10;

/// Variances below this fraction of sigma2 are treated as exactly zero. It sits above the
/// nugget so that design points count as known.
inline constexpr double kVarianceFloor = 10.0 * kNugget;

struct CovarianceHyperparams {
  double sigma2 = 1.0;
  Vector ranges;  ///< rho_1..rho_d
};

/// Matern 5/2 correlation. Throws std::domain_error for h < 0.
double matern52_corr(double h);

double covariance(std::span<const double> x, std::span<const double> y,
                  const CovarianceHyperparams& hyper);

/// Throws EstimatorError when two design rows coincide.
void check_distinct(const PointMatrix& design);

/// Ordinary-kriging posterior under a Matern 5/2 prior with an unknown constant mean.
class GpModel {
 public:
  GpModel(PointMatrix design_points, Vector design_values, CovarianceHyperparams hyper);

  const PointMatrix& design_points() const { return points_; }
  const Vector& design_values() const { return values_; }
  const CovarianceHyperparams& hyper() const { return hyper_; }
  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }

  /// GLS estimate of the constant mean.
  double beta() const { return beta_; }
  const Matrix& chol() const { return chol_; }
  double variance_floor() const { return kVarianceFloor * hyper_.sigma2; }

  struct Prediction {
    double mean;
    double variance;
  };
  Prediction predict(std::span<const double> x) const;
  void predict_batch(const PointMatrix& pts, Vector& mean, Vector& var) const;

  double posterior_cov(std::span<const double> x, std::span<const double> y) const;
  Matrix posterior_cov(const PointMatrix& a, const PointMatrix& b) const;

  /// |k_n(x, x_new)| / sigma_n(x_new), or 0 when x_new is already known.
  double cross_sd(std::span<const double> x, std::span<const double> x_new) const;

  /// Same hyperparameters, one more observation.
  GpModel with_observation(std::span<const double> x, double y) const;

  kernels::KrigingView view() const;

 private:
  PointMatrix points_;
  Vector values_;
  CovarianceHyperparams hyper_;
  Vector inv_ranges_;
  Matrix chol_;
  Vector chol_ones_;
  double ones_quad_ = 0.0;
  Vector chol_resid_;
  double beta_ = 0.0;
};

/// Leave-one-out residuals y_i - prediction_{-i} and their predictive variances.
struct LooResult {
  Vector residuals;
  Vector variances;
};
LooResult leave_one_out(const GpModel& model);

// ---- Restricted maximum likelihood ----

struct RemlConfig {
  double range_lower = 1e-3;  ///< box bounds, relative to the design span per dimension
  double range_upper = 1e3;
  int max_iterations = 200;
  double gradient_tol = 1e-6;
  /// Starting ranges as multiples of the design span.
  std::vector<double> start_factors = {0.5, 0.15, 1.5, 0.05, 5.0};
};

struct RemlFit {
  CovarianceHyperparams hyper;
  double log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Restricted log-likelihood at (sigma2, ranges). When `grad` is set it receives the gradient
/// with respect to (log sigma2, log rho_1, ..., log rho_d).
double restricted_log_likelihood(const PointMatrix& x, const Vector& y,
                                 const CovarianceHyperparams& hyper, Vector* grad = nullptr);

/// Restricted log-likelihood with sigma2 replaced by its maximizer. `grad` is with respect to
/// log rho; `sigma2_hat` receives the maximizing variance.
double profiled_log_likelihood(const PointMatrix& x, const Vector& y, const Vector& log_ranges,
                               Vector* grad = nullptr, double* sigma2_hat = nullptr);

/// Multi-start quasi-Newton maximization. `warm_start` replaces the last start when given.
/// Throws EstimatorError for fewer than two points or duplicate points.
RemlFit fit_reml(const PointMatrix& x, const Vector& y, const RemlConfig& config = {},
                 const std::optional<Vector>& warm_start = std::nullopt);

}  // namespace rareevent::gp
