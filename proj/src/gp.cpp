#include "rareevent/gp.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rareevent::gp {

double matern52_corr(double h) {
  if (!(h >= 0.0)) throw std::domain_error("matern52_corr: negative or NaN lag");
  return kernels::matern52(h);
}

double covariance(std::span<const double> x, std::span<const double> y,
                  const CovarianceHyperparams& hyper) {
  if (x.size() != y.size() || x.size() != static_cast<std::size_t>(hyper.ranges.size())) {
    throw std::invalid_argument("covariance: dimension mismatch");
  }
  double h2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double t = (x[k] - y[k]) / hyper.ranges[static_cast<Eigen::Index>(k)];
    h2 += t * t;
  }
  return hyper.sigma2 * kernels::matern52(std::sqrt(h2));
}

void check_distinct(const PointMatrix& design) {
  for (Eigen::Index i = 1; i < design.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (design.row(i) == design.row(j)) throw EstimatorError("duplicate design points");
    }
  }
}

GpModel::GpModel(PointMatrix design_points, Vector design_values, CovarianceHyperparams hyper)
    : points_(std::move(design_points)), values_(std::move(design_values)), hyper_(std::move(hyper)) {
  const Eigen::Index n = points_.rows();
  const Eigen::Index d = points_.cols();
  if (n < 1 || values_.size() != n) throw std::invalid_argument("GpModel: design size mismatch");
  if (hyper_.ranges.size() != d) throw std::invalid_argument("GpModel: ranges dimension mismatch");
  if (!(hyper_.sigma2 > 0.0) || !(hyper_.ranges.array() > 0.0).all()) {
    throw std::invalid_argument("GpModel: hyperparameters must be positive");
  }
  check_distinct(points_);
  inv_ranges_ = hyper_.ranges.cwiseInverse();

  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double h2 = 0.0;
      for (Eigen::Index c = 0; c < d; ++c) {
        const double t = (points_(i, c) - points_(j, c)) * inv_ranges_[c];
        h2 += t * t;
      }
      k(i, j) = k(j, i) = hyper_.sigma2 * kernels::matern52(std::sqrt(h2));
    }
    k(i, i) += kNugget * hyper_.sigma2;
  }
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success) throw EstimatorError("GpModel: covariance not positive definite");
  chol_ = llt.matrixL();

  chol_ones_ = Vector::Ones(n);
  kernels::forward_solve(chol_, chol_ones_.data());
  ones_quad_ = chol_ones_.squaredNorm();
  Vector ly = values_;
  kernels::forward_solve(chol_, ly.data());
  beta_ = chol_ones_.dot(ly) / ones_quad_;
  chol_resid_ = ly - beta_ * chol_ones_;
}

kernels::KrigingView GpModel::view() const {
  kernels::KrigingView v;
  v.design = &points_;
  v.inv_ranges = &inv_ranges_;
  v.sigma2 = hyper_.sigma2;
  v.chol = &chol_;
  v.chol_ones = &chol_ones_;
  v.ones_quad = ones_quad_;
  v.chol_resid = &chol_resid_;
  v.beta = beta_;
  return v;
}

GpModel::Prediction GpModel::predict(std::span<const double> x) const {
  if (x.size() != dim()) throw std::invalid_argument("predict: dimension mismatch");
  std::vector<double> scratch(size());
  Prediction p{};
  kernels::detail::predict_one(view(), x, scratch.data(), p.mean, p.variance);
  return p;
}

void GpModel::predict_batch(const PointMatrix& pts, Vector& mean, Vector& var) const {
  if (pts.cols() != points_.cols()) throw std::invalid_argument("predict_batch: dimension mismatch");
  kernels::kriging_predict(view(), pts, mean, var);
}

double GpModel::posterior_cov(std::span<const double> x, std::span<const double> y) const {
  const auto v = view();
  std::vector<double> ax(size());
  std::vector<double> ay(size());
  const double gx = kernels::detail::solve_cross(v, x, ax.data());
  const double gy = kernels::detail::solve_cross(v, y, ay.data());
  double dot = 0.0;
  for (std::size_t k = 0; k < ax.size(); ++k) dot += ax[k] * ay[k];
  return kernels::detail::prior_cov(v, x, y) - dot + gx * gy / ones_quad_;
}

Matrix GpModel::posterior_cov(const PointMatrix& a, const PointMatrix& b) const {
  Matrix out;
  kernels::kriging_posterior_cov(view(), a, b, out);
  return out;
}

double GpModel::cross_sd(std::span<const double> x, std::span<const double> x_new) const {
  const double var_new = predict(x_new).variance;
  if (var_new <= variance_floor()) return 0.0;
  return std::abs(posterior_cov(x, x_new)) / std::sqrt(var_new);
}

GpModel GpModel::with_observation(std::span<const double> x, double y) const {
  PointMatrix pts(points_.rows() + 1, points_.cols());
  pts.topRows(points_.rows()) = points_;
  for (Eigen::Index k = 0; k < pts.cols(); ++k) pts(points_.rows(), k) = x[static_cast<std::size_t>(k)];
  Vector vals(values_.size() + 1);
  vals.head(values_.size()) = values_;
  vals[values_.size()] = y;
  return GpModel(std::move(pts), std::move(vals), hyper_);
}

LooResult leave_one_out(const GpModel& model) {
  const Eigen::Index n = static_cast<Eigen::Index>(model.size());
  if (n < 2) throw std::invalid_argument("leave_one_out: needs at least two points");
  const Matrix& l = model.chol();
  Matrix kinv = Matrix::Identity(n, n);
  l.triangularView<Eigen::Lower>().solveInPlace(kinv);
  kinv = (l.transpose().triangularView<Eigen::Upper>().solve(kinv)).eval();
  const Vector kinv1 = kinv * Vector::Ones(n);
  const Matrix p = kinv - kinv1 * kinv1.transpose() / kinv1.sum();
  const Vector py = p * model.design_values();
  LooResult out;
  out.residuals = py.array() / p.diagonal().array();
  out.variances = p.diagonal().cwiseInverse();
  return out;
}

}  // namespace rareevent::gp
