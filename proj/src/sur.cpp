#include "rareevent/sur.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rareevent/kernels.hpp"
#include "rareevent/stats.hpp"

namespace rareevent::sur {

double coverage_g(double mean, double sd, double u) {
  if (sd < 0.0) throw std::invalid_argument("coverage_g: negative sd");
  if (sd == 0.0) return mean > u ? 1.0 : 0.0;
  return stats::norm_cdf((mean - u) / sd);
}

double log_coverage_g(double mean, double sd, double u) {
  if (sd < 0.0) throw std::invalid_argument("log_coverage_g: negative sd");
  if (sd == 0.0) return mean > u ? 0.0 : -std::numeric_limits<double>::infinity();
  return stats::log_norm_cdf((mean - u) / sd);
}

double misclass_tau(double g) { return std::min(g, 1.0 - g); }

double expected_misclass_after(const gp::GpModel& model, std::span<const double> x,
                               std::span<const double> x_new, double u) {
  const auto p = model.predict(x);
  const double floor = model.variance_floor();
  if (p.variance <= floor) return 0.0;
  const double s = model.cross_sd(x, x_new);
  return kernels::expected_misclass(u - p.mean, std::sqrt(p.variance), s, floor);
}

CandidateSet build_candidates(const ParticleSystem& particles, const Vector& mean,
                              const Vector& var, double u, double variance_floor) {
  const Eigen::Index m = particles.points.rows();
  const Eigen::Index d = particles.points.cols();
  std::vector<std::size_t> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& pts = particles.points;
  auto row_less = [&](std::size_t a, std::size_t b) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const double xa = pts(static_cast<Eigen::Index>(a), k);
      const double xb = pts(static_cast<Eigen::Index>(b), k);
      if (xa != xb) return xa < xb;
    }
    return a < b;
  };
  std::sort(order.begin(), order.end(), row_less);

  // Group identical rows; representative = lowest index, weights summed.
  std::vector<std::size_t> rep;
  std::vector<double> weight;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const auto i = static_cast<Eigen::Index>(order[pos]);
    const double w = std::exp(particles.log_weights[i] - particles.cached_log_g[i]);
    if (pos > 0 && pts.row(i) == pts.row(static_cast<Eigen::Index>(order[pos - 1]))) {
      weight.back() += w;
    } else {
      rep.push_back(order[pos]);
      weight.push_back(w);
    }
  }
  // Restore particle order so results do not depend on the sort.
  std::vector<std::size_t> by_index(rep.size());
  std::iota(by_index.begin(), by_index.end(), std::size_t{0});
  std::sort(by_index.begin(), by_index.end(), [&](std::size_t a, std::size_t b) { return rep[a] < rep[b]; });

  CandidateSet out;
  const auto n = static_cast<Eigen::Index>(rep.size());
  out.indices.resize(rep.size());
  out.mean.resize(n);
  out.sd.resize(n);
  out.weight.resize(n);
  out.score.resize(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const std::size_t k = by_index[static_cast<std::size_t>(c)];
    const auto i = static_cast<Eigen::Index>(rep[k]);
    out.indices[static_cast<std::size_t>(c)] = rep[k];
    out.mean[c] = mean[i];
    const double v = var[i] <= variance_floor ? 0.0 : var[i];
    out.sd[c] = std::sqrt(v);
    out.weight[c] = weight[k];
    const double tau = v == 0.0 ? 0.0 : misclass_tau(coverage_g(mean[i], out.sd[c], u));
    out.score[c] = weight[k] * tau;
  }
  return out;
}

namespace {

CandidateSet subset(const CandidateSet& c, const std::vector<std::size_t>& keep) {
  CandidateSet out;
  const auto n = static_cast<Eigen::Index>(keep.size());
  out.mean.resize(n);
  out.sd.resize(n);
  out.weight.resize(n);
  out.score.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto j = static_cast<Eigen::Index>(keep[static_cast<std::size_t>(i)]);
    out.indices.push_back(c.indices[static_cast<std::size_t>(j)]);
    out.mean[i] = c.mean[j];
    out.sd[i] = c.sd[j];
    out.weight[i] = c.weight[j];
    out.score[i] = c.score[j];
  }
  return out;
}

}  // namespace

CandidateSet prune(const CandidateSet& candidates, std::size_t m0_max, double rho) {
  if (candidates.size() == 0) throw EstimatorError("prune: no candidates");
  if (m0_max < 1 || !(rho > 0.0 && rho <= 1.0)) throw ConfigError("prune: need m0_max >= 1 and rho in (0, 1]");
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates.score[static_cast<Eigen::Index>(a)] > candidates.score[static_cast<Eigen::Index>(b)];
  });
  double total = 0.0;
  std::size_t nonzero = 0;
  for (std::size_t j : order) {
    const double s = candidates.score[static_cast<Eigen::Index>(j)];
    total += s;
    if (s > 0.0) ++nonzero;
  }
  if (nonzero == 0) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < candidates.weight.size(); ++i) {
      if (candidates.weight[i] > candidates.weight[best]) best = i;
    }
    return subset(candidates, {static_cast<std::size_t>(best)});
  }
  std::size_t keep = nonzero;
  if (rho < 1.0) {
    double acc = 0.0;
    for (std::size_t k = 0; k < nonzero; ++k) {
      acc += candidates.score[static_cast<Eigen::Index>(order[k])];
      if (acc >= rho * total) {
        keep = k + 1;
        break;
      }
    }
  }
  keep = std::min(keep, m0_max);
  order.resize(keep);
  return subset(candidates, order);
}

Selection select_next_point(const gp::GpModel& model, const ParticleSystem& particles, double u_t,
                            const SurConfig& config) {
  if (!std::isfinite(u_t)) throw std::invalid_argument("select_next_point: threshold must be finite");
  Vector mean;
  Vector var;
  model.predict_batch(particles.points, mean, var);
  const double floor = model.variance_floor();
  const CandidateSet pruned = prune(build_candidates(particles, mean, var, u_t, floor), config.m0_max, config.rho);

  const auto n = static_cast<Eigen::Index>(pruned.size());
  PointMatrix pts(n, particles.points.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    pts.row(i) = particles.points.row(static_cast<Eigen::Index>(pruned.indices[static_cast<std::size_t>(i)]));
  }
  Matrix cov;
  kernels::kriging_posterior_cov(model.view(), pts, pts, cov);
  const Vector gap = (Vector::Constant(n, u_t) - pruned.mean).eval();
  kernels::SurProblem problem;
  problem.threshold_gap = &gap;
  problem.sd = &pruned.sd;
  problem.weight = &pruned.weight;
  problem.candidate_sd = &pruned.sd;
  problem.cross_cov = &cov;
  problem.variance_floor = floor;
  Vector crit;
  kernels::sur_criterion(problem, crit);

  // Known points (sd = 0) carry no information; they are only eligible if nothing else is.
  const bool any_unknown = (pruned.sd.array() > 0.0).any();
  double best_value = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < n; ++c) {
    if (!any_unknown || pruned.sd[c] > 0.0) best_value = std::min(best_value, crit[c]);
  }
  const double tol = 1e-12 * std::abs(best_value);
  Eigen::Index best = -1;
  for (Eigen::Index c = 0; c < n; ++c) {
    if (any_unknown && pruned.sd[c] == 0.0) continue;
    if (crit[c] <= best_value + tol &&
        (best < 0 || pruned.indices[static_cast<std::size_t>(c)] < pruned.indices[static_cast<std::size_t>(best)])) {
      best = c;
    }
  }
  Selection sel;
  sel.index = pruned.indices[static_cast<std::size_t>(best)];
  const auto row = row_span(particles.points, static_cast<Eigen::Index>(sel.index));
  sel.point.assign(row.begin(), row.end());
  sel.criterion = crit[best];
  sel.pruned_size = pruned.size();
  return sel;
}

}  // namespace rareevent::sur
