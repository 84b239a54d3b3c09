#pragma once

// Data-parallel inner loops. Every kernel is a per-element map with any reduction done
// serially afterwards, so the OpenMP versions are bit-identical to the serial
// references in `kernels::reference` whatever the thread count.

#include <cmath>
#include <cstddef>
#include <span>

#include "rareevent/core.hpp"

namespace rareevent::kernels {

/// Matern 5/2 correlation at scaled lag h >= 0.
inline double matern52(double h) {
  const double ht = std::sqrt(10.0) * h;
  return (1.0 + ht + ht * ht / 3.0) * std::exp(-ht);
}

/// Read-only view of a factorized ordinary-kriging system.
struct KrigingView {
  const PointMatrix* design = nullptr;  ///< n x d
  const Vector* inv_ranges = nullptr;   ///< 1 / rho_i
  double sigma2 = 1.0;
  const Matrix* chol = nullptr;         ///< lower factor L of K (nugget included)
  const Vector* chol_ones = nullptr;    ///< L^{-1} 1
  double ones_quad = 1.0;               ///< 1' K^{-1} 1
  const Vector* chol_resid = nullptr;   ///< L^{-1} (y - beta 1)
  double beta = 0.0;                    ///< GLS constant mean
};

/// Prior covariance vector k(X_i, x), i = 1..n.
void prior_cross(const KrigingView& v, std::span<const double> x, double* out);

/// In-place forward substitution with the lower factor.
void forward_solve(const Matrix& lower, double* rhs);

void kriging_predict(const KrigingView& v, const PointMatrix& pts, Vector& mean, Vector& var);

/// Posterior covariance between every row of `a` and every row of `b` (|a| x |b|).
void kriging_posterior_cov(const KrigingView& v, const PointMatrix& a, const PointMatrix& b,
                           Matrix& out);

/// Inputs of the discretized SUR criterion. Integration points j carry a standardized
/// distance to the threshold, a posterior sd and an integration weight w_j / g_{t-1}(Y_j).
struct SurProblem {
  const Vector* threshold_gap = nullptr;  ///< u - mean_j, integration points
  const Vector* sd = nullptr;             ///< posterior sd at integration points
  const Vector* weight = nullptr;         ///< integration weights
  const Vector* candidate_sd = nullptr;   ///< posterior sd at candidates
  const Matrix* cross_cov = nullptr;      ///< posterior covariance, integration x candidate
  double variance_floor = 0.0;            ///< variances below this count as zero
};

/// Expected misclassification after a hypothetical evaluation, from the scalar
/// summaries: gap = u - mean(x), sd = sigma_n(x), s = s_n(x, x_new).
double expected_misclass(double gap, double sd, double s, double variance_floor);

/// J[c] = sum_j weight_j * expected_misclass(j, c) for every candidate c.
void sur_criterion(const SurProblem& p, Vector& out);

/// Maximin scores (smallest pairwise distance) of Q random LHS designs on [0,1]^d; candidate q
/// is drawn from base.substream(q).
void lhs_scores(std::size_t n0, std::size_t dim, std::size_t q, const RngStream& base, Vector& out);

/// out[i] = f(row i).
void map_rows(const LimitState& f, const PointMatrix& pts, Vector& out);

namespace reference {
void kriging_predict(const KrigingView& v, const PointMatrix& pts, Vector& mean, Vector& var);
void kriging_posterior_cov(const KrigingView& v, const PointMatrix& a, const PointMatrix& b,
                           Matrix& out);
void sur_criterion(const SurProblem& p, Vector& out);
void lhs_scores(std::size_t n0, std::size_t dim, std::size_t q, const RngStream& base, Vector& out);
void map_rows(const LimitState& f, const PointMatrix& pts, Vector& out);
}  // namespace reference

// Per-element bodies shared by both implementations.
namespace detail {
void predict_one(const KrigingView& v, std::span<const double> x, double* scratch, double& mean,
                 double& var);
/// Fills `a` (length n) with L^{-1} k(X, x) and returns 1 - c'a.
double solve_cross(const KrigingView& v, std::span<const double> x, double* a);
double prior_cov(const KrigingView& v, std::span<const double> x, std::span<const double> y);
double sur_candidate(const SurProblem& p, Eigen::Index c);
double lhs_score(std::size_t n0, std::size_t dim, RngStream rng);
}  // namespace detail

}  // namespace rareevent::kernels
