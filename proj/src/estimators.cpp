#include "rareevent/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rareevent/kernels.hpp"

namespace rareevent::estimators {

McResult monte_carlo_estimate(const Problem& problem, std::size_t m, RngStream& rng) {
  if (m < 1) throw ConfigError("monte_carlo_estimate: m must be >= 1");
  validate(problem);
  const Problem p = normalize_direction(problem);
  const PointMatrix x = sample_input(p.input, m, rng);
  Vector f;
  kernels::map_rows(p.limit_state, x, f);
  McResult r;
  r.m = m;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (f[i] > p.threshold) ++r.failures;
  }
  const double md = static_cast<double>(m);
  r.alpha_hat = static_cast<double>(r.failures) / md;
  r.std_err = std::sqrt(r.alpha_hat * (1.0 - r.alpha_hat) / md);
  return r;
}

EstimationResult run_monte_carlo(const Problem& problem, std::size_t m, RngStream& rng) {
  const McResult mc = monte_carlo_estimate(problem, m, rng);
  EstimationResult res;
  res.method = "mc";
  res.alpha_hat = mc.alpha_hat;
  res.delta_hat = mc.alpha_hat > 0.0 ? mc.std_err / mc.alpha_hat : 0.0;
  res.n_initial = m;
  res.n_total = m;
  res.limit_state_calls = m;
  StageRecord s;
  s.t = 1;
  s.u_t = normalize_direction(problem).threshold;
  s.p_hat = mc.alpha_hat;
  s.kappa_hat = mc.alpha_hat > 0.0 ? (1.0 - mc.alpha_hat) / mc.alpha_hat : 0.0;
  s.delta_hat = res.delta_hat;
  res.stages.push_back(s);
  return res;
}

EstimationResult run_subset_simulation(const Problem& problem, const SubsetSimConfig& config,
                                       RngStream& rng) {
  if (config.m < 2 || config.m0 < 1 || config.m0 >= config.m) {
    throw ConfigError("subset simulation: need 1 <= m0 < m");
  }
  if (config.max_stages < 1) throw ConfigError("subset simulation: max_stages must be >= 1");
  validate(problem);
  const Problem p = normalize_direction(problem);
  const std::size_t m = config.m;
  const double md = static_cast<double>(m);
  const double p0 = config.p0();
  const double minus_inf = -std::numeric_limits<double>::infinity();

  RngStream init_rng = rng.substream("smc/initial");
  RngStream resample_rng = rng.substream("smc/resample");
  RngStream move_rng = rng.substream("smc/move");

  ParticleSystem ps = ParticleSystem::from_points(sample_input(p.input, m, init_rng), p.input);
  kernels::map_rows(p.limit_state, ps.points, ps.aux);
  smc::RwmhState kernel = smc::RwmhState::initial(p.input, config.kernel);

  EstimationResult res;
  res.method = "ss";
  std::size_t calls = m;
  double delta2 = 0.0;

  for (int t = 1;; ++t) {
    if (t > config.max_stages) throw EstimatorError("subset simulation: max_stages exceeded");
    std::vector<double> sorted(ps.aux.data(), ps.aux.data() + ps.aux.size());
    std::sort(sorted.begin(), sorted.end());
    const double u0 = sorted[m - config.m0 - 1];

    StageRecord rec;
    rec.t = t;
    if (u0 > p.threshold) {
      std::size_t m_u = 0;
      for (Eigen::Index i = 0; i < ps.aux.size(); ++i) {
        if (ps.aux[i] > p.threshold) ++m_u;
      }
      rec.u_t = p.threshold;
      rec.p_hat = static_cast<double>(m_u) / md;
      rec.kappa_hat = m_u > 0 ? (1.0 - rec.p_hat) / rec.p_hat : 0.0;
      delta2 = rec.kappa_hat / md + (1.0 + rec.kappa_hat / md) * delta2;
      rec.delta_hat = std::sqrt(delta2);
      res.stages.push_back(rec);
      res.alpha_hat = rec.p_hat * std::pow(p0, t - 1);
      break;
    }

    rec.u_t = u0;
    rec.p_hat = p0;
    rec.kappa_hat = (1.0 - p0) / p0;
    delta2 = rec.kappa_hat / md + (1.0 + rec.kappa_hat / md) * delta2;
    rec.delta_hat = std::sqrt(delta2);

    Vector log_g_new(ps.aux.size());
    for (Eigen::Index i = 0; i < ps.aux.size(); ++i) log_g_new[i] = ps.aux[i] > u0 ? 0.0 : minus_inf;
    const Vector log_g_old = Vector::Zero(ps.aux.size());
    ParticleSystem weighted = smc::reweight(ps, log_g_new, log_g_old);
    ps = smc::select(weighted, smc::residual_resample(weighted.weights(), resample_rng));
    ps.stage = t;

    const smc::BatchTarget target = [&](const PointMatrix& pts, Vector& lp, Vector& lg, Vector& aux) {
      kernels::map_rows(p.limit_state, pts, aux);
      lp.resize(pts.rows());
      lg.resize(pts.rows());
      for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        lp[i] = p.input.log_density(row_span(pts, i));
        lg[i] = aux[i] > u0 ? 0.0 : minus_inf;
      }
    };
    const auto diag = smc::rwmh_move(ps, target, kernel, move_rng);
    calls += m * static_cast<std::size_t>(config.kernel.sweeps);
    rec.acceptance = diag.acceptance;
    res.stages.push_back(rec);
  }

  const int big_t = static_cast<int>(res.stages.size());
  res.delta_hat = res.stages.back().delta_hat;
  res.n_initial = m;
  res.n_intermediate = static_cast<std::size_t>(
      std::llround(static_cast<double>(big_t - 1) * (1.0 - p0) * md));
  res.n_total = res.n_initial + res.n_intermediate;
  res.limit_state_calls = calls;
  return res;
}

int ss_stage_count(double alpha, double p0) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(p0 > 0.0 && p0 < 1.0)) {
    throw std::invalid_argument("ss_stage_count: alpha and p0 must lie in (0, 1)");
  }
  // Guard against log ratios like 6 - 1e-15 rounding up to 7.
  const double ratio = std::log(alpha) / std::log(p0);
  return std::max(1, static_cast<int>(std::ceil(ratio - 1e-9)));
}

double ss_relative_variance_approx(double alpha, double p0, std::size_t m) {
  if (m == 0) throw std::invalid_argument("ss_relative_variance_approx: m must be >= 1");
  const int t = ss_stage_count(alpha, p0);
  return static_cast<double>(t) / static_cast<double>(m) * (1.0 - p0) / p0;
}

}  // namespace rareevent::estimators
