#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rareevent/gp.hpp"

namespace rareevent::gp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Pieces of the restricted likelihood that depend on the ranges only.
struct RangeTerms {
  bool ok = false;
  double log_det = 0.0;    // log |R~|
  double log_q = 0.0;      // log 1'R~^{-1}1
  double quad = 0.0;       // y'P~y
  Matrix p;                // P~ = R~^{-1} - c c' / q
  Vector alpha;            // P~ y
};

double sigma2_floor(const Vector& y) {
  const double scale = y.cwiseAbs().maxCoeff();
  return std::max(1e-300, 1e-14 * scale * scale);
}

RangeTerms range_terms(const PointMatrix& x, const Vector& y, const Vector& inv_ranges) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Matrix r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double h2 = 0.0;
      for (Eigen::Index c = 0; c < d; ++c) {
        const double t = (x(i, c) - x(j, c)) * inv_ranges[c];
        h2 += t * t;
      }
      r(i, j) = r(j, i) = kernels::matern52(std::sqrt(h2));
    }
    r(i, i) += kNugget;
  }
  RangeTerms out;
  Eigen::LLT<Matrix> llt(r);
  if (llt.info() != Eigen::Success) return out;
  const Matrix l = llt.matrixL();
  out.log_det = 2.0 * l.diagonal().array().log().sum();
  if (!std::isfinite(out.log_det)) return out;
  Matrix rinv = llt.solve(Matrix::Identity(n, n));
  const Vector c = rinv * Vector::Ones(n);
  const double q = c.sum();
  if (!(q > 0.0)) return out;
  out.log_q = std::log(q);
  out.p = rinv - c * c.transpose() / q;
  out.alpha = out.p * y;
  out.quad = std::max(0.0, y.dot(out.alpha));
  out.ok = true;
  return out;
}

// d/d log rho_i of the restricted log-likelihood at fixed sigma2.
Vector range_gradient(const PointMatrix& x, const Vector& inv_ranges, const RangeTerms& t,
                      double sigma2) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Vector trace = Vector::Zero(d);
  Vector quad = Vector::Zero(d);
  std::vector<double> scaled(static_cast<std::size_t>(d));
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      double h2 = 0.0;
      for (Eigen::Index c = 0; c < d; ++c) {
        const double s = (x(i, c) - x(j, c)) * inv_ranges[c];
        scaled[static_cast<std::size_t>(c)] = s * s;
        h2 += s * s;
      }
      const double ht = std::sqrt(10.0 * h2);
      const double common = (10.0 / 3.0) * (1.0 + ht) * std::exp(-ht);
      const double pij = 2.0 * t.p(i, j);
      const double aij = 2.0 * t.alpha[i] * t.alpha[j];
      for (Eigen::Index c = 0; c < d; ++c) {
        const double dr = common * scaled[static_cast<std::size_t>(c)];
        trace[c] += pij * dr;
        quad[c] += aij * dr;
      }
    }
  }
  return -0.5 * trace + 0.5 * quad / sigma2;
}

double log_lik(Eigen::Index n, double sigma2, const RangeTerms& t) {
  const double nm1 = static_cast<double>(n - 1);
  return -0.5 * (nm1 * std::log(2.0 * std::numbers::pi) + nm1 * std::log(sigma2) + t.log_det +
                 t.log_q + t.quad / sigma2);
}

Vector design_span(const PointMatrix& x) {
  Vector span = (x.colwise().maxCoeff() - x.colwise().minCoeff()).transpose();
  for (Eigen::Index i = 0; i < span.size(); ++i) {
    if (!(span[i] > 0.0)) span[i] = 1.0;
  }
  return span;
}

struct Objective {
  const PointMatrix& x;
  const Vector& y;
  // Negative profiled log-likelihood; +inf where the factorization fails.
  double operator()(const Vector& theta, Vector* grad) const {
    try {
      const double v = profiled_log_likelihood(x, y, theta, grad);
      if (grad) *grad = -*grad;
      return std::isfinite(v) ? -v : kInf;
    } catch (const EstimatorError&) {
      return kInf;
    }
  }
};

struct LocalResult {
  Vector theta;
  double value = kInf;
  bool converged = false;
  int iterations = 0;
};

// Projected BFGS on a box, with an Armijo backtracking line search.
LocalResult minimize_box(const Objective& f, Vector theta, const Vector& lo, const Vector& hi,
                         const RemlConfig& cfg) {
  const Eigen::Index d = theta.size();
  theta = theta.cwiseMax(lo).cwiseMin(hi);
  LocalResult res;
  Vector g(d);
  double fx = f(theta, &g);
  res.theta = theta;
  res.value = fx;
  if (!std::isfinite(fx)) return res;

  Matrix h = Matrix::Identity(d, d);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    res.iterations = it + 1;
    std::vector<bool> active(static_cast<std::size_t>(d), false);
    double pg = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const bool at_lo = theta[i] <= lo[i] && g[i] > 0.0;
      const bool at_hi = theta[i] >= hi[i] && g[i] < 0.0;
      active[static_cast<std::size_t>(i)] = at_lo || at_hi;
      if (!active[static_cast<std::size_t>(i)]) pg = std::max(pg, std::abs(g[i]));
    }
    if (pg <= cfg.gradient_tol * (1.0 + std::abs(fx))) {
      res.converged = true;
      break;
    }
    Vector gf = g;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (active[static_cast<std::size_t>(i)]) gf[i] = 0.0;
    }
    Vector p = -(h * gf);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (active[static_cast<std::size_t>(i)]) p[i] = 0.0;
    }
    if (p.dot(gf) >= 0.0) {
      h.setIdentity();
      p = -gf;
    }
    const double longest = p.cwiseAbs().maxCoeff();
    if (longest > 2.0) p *= 2.0 / longest;

    double step = 1.0;
    Vector next(d);
    Vector gn(d);
    double fn = kInf;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      next = (theta + step * p).cwiseMax(lo).cwiseMin(hi);
      fn = f(next, &gn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * g.dot(next - theta)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Vector s = next - theta;
    const Vector yk = gn - g;
    const double sy = s.dot(yk);
    const double change = fx - fn;
    theta = next;
    g = gn;
    fx = fn;
    res.theta = theta;
    res.value = fx;
    if (sy > 1e-12 * s.norm() * yk.norm()) {
      const double rho = 1.0 / sy;
      const Matrix eye = Matrix::Identity(d, d);
      h = (eye - rho * s * yk.transpose()) * h * (eye - rho * yk * s.transpose()) +
          rho * s * s.transpose();
    }
    if (s.cwiseAbs().maxCoeff() < 1e-10 && change <= 1e-12 * (1.0 + std::abs(fx))) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace

double restricted_log_likelihood(const PointMatrix& x, const Vector& y,
                                 const CovarianceHyperparams& hyper, Vector* grad) {
  if (x.rows() != y.size() || x.rows() < 2) throw std::invalid_argument("restricted_log_likelihood: bad design");
  const Vector inv = hyper.ranges.cwiseInverse();
  const RangeTerms t = range_terms(x, y, inv);
  if (!t.ok) throw EstimatorError("restricted_log_likelihood: correlation matrix not positive definite");
  const double value = log_lik(x.rows(), hyper.sigma2, t);
  if (grad) {
    grad->resize(x.cols() + 1);
    (*grad)[0] = -0.5 * static_cast<double>(x.rows() - 1) + 0.5 * t.quad / hyper.sigma2;
    grad->tail(x.cols()) = range_gradient(x, inv, t, hyper.sigma2);
  }
  return value;
}

double profiled_log_likelihood(const PointMatrix& x, const Vector& y, const Vector& log_ranges,
                               Vector* grad, double* sigma2_hat) {
  if (x.rows() != y.size() || x.rows() < 2) throw std::invalid_argument("profiled_log_likelihood: bad design");
  const Vector inv = (-log_ranges.array()).exp().matrix();
  const RangeTerms t = range_terms(x, y, inv);
  if (!t.ok) throw EstimatorError("profiled_log_likelihood: correlation matrix not positive definite");
  const double s2 = std::max(t.quad / static_cast<double>(x.rows() - 1), sigma2_floor(y));
  if (sigma2_hat) *sigma2_hat = s2;
  if (grad) *grad = range_gradient(x, inv, t, s2);
  return log_lik(x.rows(), s2, t);
}

RemlFit fit_reml(const PointMatrix& x, const Vector& y, const RemlConfig& config,
                 const std::optional<Vector>& warm_start) {
  if (x.rows() < 2 || x.rows() != y.size()) throw EstimatorError("fit_reml: needs at least two observations");
  if (config.start_factors.empty()) throw std::invalid_argument("fit_reml: no starting points");
  check_distinct(x);
  const Vector span = design_span(x);
  const Vector lo = (span * config.range_lower).array().log().matrix();
  const Vector hi = (span * config.range_upper).array().log().matrix();

  std::vector<Vector> starts;
  for (double factor : config.start_factors) starts.push_back((span * factor).array().log().matrix());
  if (warm_start) {
    if (warm_start->size() != x.cols()) throw std::invalid_argument("fit_reml: warm start dimension");
    starts.back() = warm_start->array().log().matrix();
  }

  const Objective objective{x, y};
  LocalResult best;
  for (const Vector& s : starts) {
    LocalResult r = minimize_box(objective, s, lo, hi, config);
    if (r.value < best.value) best = r;
  }
  if (!std::isfinite(best.value)) throw EstimatorError("fit_reml: likelihood undefined at every start");

  RemlFit fit;
  double s2 = 0.0;
  fit.log_likelihood = profiled_log_likelihood(x, y, best.theta, nullptr, &s2);
  fit.hyper.sigma2 = s2;
  fit.hyper.ranges = best.theta.array().exp().matrix();
  fit.converged = best.converged;
  fit.iterations = best.iterations;
  return fit;
}

}  // namespace rareevent::gp
