#include <vector>

#include "rareevent/kernels.hpp"

namespace rareevent::kernels {

void kriging_predict(const KrigingView& v, const PointMatrix& pts, Vector& mean, Vector& var) {
  const Eigen::Index m = pts.rows();
  mean.resize(m);
  var.resize(m);
  const auto n = static_cast<std::size_t>(v.design->rows());
#pragma omp parallel
  {
    std::vector<double> scratch(n);
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < m; ++i) {
      detail::predict_one(v, row_span(pts, i), scratch.data(), mean[i], var[i]);
    }
  }
}

void kriging_posterior_cov(const KrigingView& v, const PointMatrix& a, const PointMatrix& b,
                           Matrix& out) {
  const Eigen::Index n = v.design->rows();
  Matrix sa(n, a.rows());
  Matrix sb(n, b.rows());
  Vector ga(a.rows());
  Vector gb(b.rows());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < a.rows(); ++i) ga[i] = detail::solve_cross(v, row_span(a, i), sa.col(i).data());
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < b.rows(); ++j) gb[j] = detail::solve_cross(v, row_span(b, j), sb.col(j).data());
  out.resize(a.rows(), b.rows());
#pragma omp parallel for schedule(static)
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
#pragma omp parallel for schedule(dynamic, 4)
  for (Eigen::Index c = 0; c < nc; ++c) out[c] = detail::sur_candidate(p, c);
}

void lhs_scores(std::size_t n0, std::size_t dim, std::size_t q, const RngStream& base, Vector& out) {
  out.resize(static_cast<Eigen::Index>(q));
  const auto nq = static_cast<Eigen::Index>(q);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < nq; ++i) {
    out[i] = detail::lhs_score(n0, dim, base.substream(static_cast<std::uint64_t>(i)));
  }
}

void map_rows(const LimitState& f, const PointMatrix& pts, Vector& out) {
  out.resize(pts.rows());
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index i = 0; i < pts.rows(); ++i) out[i] = f(row_span(pts, i));
}

}  // namespace rareevent::kernels
