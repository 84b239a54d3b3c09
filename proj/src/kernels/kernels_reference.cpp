#include <algorithm>
#include <cmath>
#include <vector>

#include "rareevent/design.hpp"
#include "rareevent/kernels.hpp"
#include "rareevent/stats.hpp"

namespace rareevent::kernels {

void prior_cross(const KrigingView& v, std::span<const double> x, double* out) {
  const PointMatrix& X = *v.design;
  const Vector& inv = *v.inv_ranges;
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    double h2 = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double t = (X(i, k) - x[k]) * inv[k];
      h2 += t * t;
    }
    out[i] = v.sigma2 * matern52(std::sqrt(h2));
  }
}

void forward_solve(const Matrix& lower, double* rhs) {
  const Eigen::Index n = lower.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = rhs[i];
    for (Eigen::Index k = 0; k < i; ++k) s -= lower(i, k) * rhs[k];
    rhs[i] = s / lower(i, i);
  }
}

namespace detail {

double solve_cross(const KrigingView& v, std::span<const double> x, double* a) {
  prior_cross(v, x, a);
  forward_solve(*v.chol, a);
  const Vector& c = *v.chol_ones;
  double ca = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) ca += c[i] * a[i];
  return 1.0 - ca;
}

void predict_one(const KrigingView& v, std::span<const double> x, double* scratch, double& mean,
                 double& var) {
  const double gls = solve_cross(v, x, scratch);
  const Vector& e = *v.chol_resid;
  double ae = 0.0;
  double aa = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    ae += scratch[i] * e[i];
    aa += scratch[i] * scratch[i];
  }
  mean = v.beta + ae;
  var = std::max(0.0, v.sigma2 - aa + gls * gls / v.ones_quad);
}

double prior_cov(const KrigingView& v, std::span<const double> x, std::span<const double> y) {
  const Vector& inv = *v.inv_ranges;
  double h2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double t = (x[k] - y[k]) * inv[static_cast<Eigen::Index>(k)];
    h2 += t * t;
  }
  return v.sigma2 * matern52(std::sqrt(h2));
}

double sur_candidate(const SurProblem& p, Eigen::Index c) {
  const Vector& gap = *p.threshold_gap;
  const Vector& sd = *p.sd;
  const Vector& w = *p.weight;
  const double sd_c = (*p.candidate_sd)[c];
  const bool informative = sd_c * sd_c > p.variance_floor;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < gap.size(); ++j) {
    const double s = informative ? std::abs((*p.cross_cov)(j, c)) / sd_c : 0.0;
    acc += w[j] * expected_misclass(gap[j], sd[j], s, p.variance_floor);
  }
  return acc;
}

double lhs_score(std::size_t n0, std::size_t dim, RngStream rng) {
  return design::min_pairwise_distance(design::lhs_unit_candidate(n0, dim, rng));
}

}  // namespace detail

double expected_misclass(double gap, double sd, double s, double variance_floor) {
  if (sd * sd <= variance_floor) return 0.0;
  const double z = gap / sd;
  const double tau = stats::norm_cdf(-std::abs(z));
  if (s * s <= variance_floor) return tau;
  // The residual variance sd^2 - s^2 after the evaluation; at or below the floor x is resolved.
  if (sd * sd - s * s <= variance_floor) return 0.0;
  const double corr = std::min(1.0, s / sd);
  const double zs = gap / s;
  const double value =
      stats::norm_cdf(z) + stats::norm_cdf(zs) - 2.0 * stats::binorm_cdf(zs, z, corr);
  return std::clamp(value, 0.0, tau);
}

namespace reference {

void kriging_predict(const KrigingView& v, const PointMatrix& pts, Vector& mean, Vector& var) {
  const Eigen::Index m = pts.rows();
  mean.resize(m);
  var.resize(m);
  std::vector<double> scratch(static_cast<std::size_t>(v.design->rows()));
  for (Eigen::Index i = 0; i < m; ++i) {
    detail::predict_one(v, row_span(pts, i), scratch.data(), mean[i], var[i]);
  }
}

void kriging_posterior_cov(const KrigingView& v, const PointMatrix& a, const PointMatrix& b,
                           Matrix& out) {
  const Eigen::Index n = v.design->rows();
  Matrix sa(n, a.rows());
  Matrix sb(n, b.rows());
  Vector ga(a.rows());
  Vector gb(b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) ga[i] = detail::solve_cross(v, row_span(a, i), sa.col(i).data());
  for (Eigen::Index j = 0; j < b.rows(); ++j) gb[j] = detail::solve_cross(v, row_span(b, j), sb.col(j).data());
  out.resize(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      double dot = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) dot += sa(k, i) * sb(k, j);
      out(i, j) = detail::prior_cov(v, row_span(a, i), row_span(b, j)) - dot + ga[i] * gb[j] / v.ones_quad;
    }
  }
}

void sur_criterion(const SurProblem& p, Vector& out) {
  const Eigen::Index nc = p.candidate_sd->size();
  out.resize(nc);
  for (Eigen::Index c = 0; c < nc; ++c) out[c] = detail::sur_candidate(p, c);
}

void lhs_scores(std::size_t n0, std::size_t dim, std::size_t q, const RngStream& base, Vector& out) {
  out.resize(static_cast<Eigen::Index>(q));
  for (std::size_t i = 0; i < q; ++i) out[static_cast<Eigen::Index>(i)] = detail::lhs_score(n0, dim, base.substream(i));
}

void map_rows(const LimitState& f, const PointMatrix& pts, Vector& out) {
  out.resize(pts.rows());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) out[i] = f(row_span(pts, i));
}

}  // namespace reference
}  // namespace rareevent::kernels
