#include "rareevent/bss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rareevent/design.hpp"
#include "rareevent/kernels.hpp"

namespace rareevent::bss {

namespace {

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

double floored(double log_g) { return std::max(log_g, kLogGFloor); }

}  // namespace

void BssConfig::validate() const {
  if (m < 2) throw ConfigError("bss: m must be >= 2");
  if (!(p0 > 0.0 && p0 < 1.0)) throw ConfigError("bss: p0 must lie in (0, 1)");
  if (!(eta_intermediate > 0.0) || !(eta_final_factor > 0.0)) throw ConfigError("bss: eta values must be > 0");
  if (!(design_epsilon > 0.0 && design_epsilon < 0.5)) throw ConfigError("bss: design epsilon must lie in (0, 0.5)");
  if (design_candidates < 1) throw ConfigError("bss: need at least one design candidate");
  if (max_stages < 1) throw ConfigError("bss: max_stages must be >= 1");
  if (kernel.sweeps < 1) throw ConfigError("bss: sweeps must be >= 1");
}

// ---- GpEmulator ----

GpEmulator::GpEmulator(PointMatrix x, Vector y, gp::RemlConfig reml) : reml_(std::move(reml)) {
  const gp::RemlFit fit = gp::fit_reml(x, y, reml_);
  model_ = std::make_unique<gp::GpModel>(std::move(x), std::move(y), fit.hyper);
}

void GpEmulator::predict(const PointMatrix& pts, Vector& mean, Vector& var) const {
  model_->predict_batch(pts, mean, var);
}

sur::Selection GpEmulator::select(const ParticleSystem& particles, double u,
                                  const sur::SurConfig& config) const {
  return sur::select_next_point(*model_, particles, u, config);
}

void GpEmulator::observe(std::span<const double> x, double y) {
  const PointMatrix& old = model_->design_points();
  PointMatrix pts(old.rows() + 1, old.cols());
  pts.topRows(old.rows()) = old;
  for (Eigen::Index k = 0; k < pts.cols(); ++k) pts(old.rows(), k) = x[static_cast<std::size_t>(k)];
  Vector vals(pts.rows());
  vals.head(old.rows()) = model_->design_values();
  vals[old.rows()] = y;
  try {
    const gp::RemlFit fit = gp::fit_reml(pts, vals, reml_, model_->hyper().ranges);
    model_ = std::make_unique<gp::GpModel>(std::move(pts), std::move(vals), fit.hyper);
  } catch (const EstimatorError&) {
    ++refit_failures_;
    model_ = std::make_unique<gp::GpModel>(std::move(pts), std::move(vals), model_->hyper());
  }
}

EmulatorFactory gp_emulator_factory(const gp::RemlConfig& reml) {
  return [reml](const PointMatrix& x, const Vector& y) -> std::unique_ptr<Emulator> {
    return std::make_unique<GpEmulator>(x, y, reml);
  };
}

// ---- stage arithmetic ----

double ratio_mean(const StageView& v, double u) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < v.mean->size(); ++j) {
    const double lg = sur::log_coverage_g((*v.mean)[j], (*v.sd)[j], u);
    if (lg == kMinusInf) continue;
    acc += std::exp((*v.log_weights)[j] + lg - floored((*v.log_g_prev)[j]));
  }
  return acc;
}

double solve_threshold(const StageView& v, double p0, double f_scale) {
  if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("solve_threshold: p0 must lie in (0, 1)");
  const Eigen::Index m = v.mean->size();
  if (m == 0) throw std::invalid_argument("solve_threshold: no particles");
  const double max_sd = v.sd->maxCoeff();

  if (max_sd == 0.0) {
    // Step function: exact weighted order statistic.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return (*v.mean)[a] > (*v.mean)[b];
    });
    double cum = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const Eigen::Index j = order[k];
      cum += std::exp((*v.log_weights)[j] - floored((*v.log_g_prev)[j]));
      if (cum >= p0 * (1.0 - 1e-12)) {
        if (k + 1 < order.size()) return (*v.mean)[order[k + 1]];
        break;
      }
    }
    const double lowest = (*v.mean)[order.back()];
    return lowest - (1.0 + std::abs(lowest));
  }

  const double scale = std::max(f_scale, std::max(v.mean->cwiseAbs().maxCoeff(), max_sd));
  double lo = v.mean->minCoeff() - 6.0 * max_sd;
  double hi = v.mean->maxCoeff() + 6.0 * max_sd;
  double width = std::max(hi - lo, 1e-12 * scale);
  int expansions = 0;
  while (ratio_mean(v, lo) < p0) {
    if (++expansions > 60) throw EstimatorError("solve_threshold: no lower bracket");
    lo -= width;
    width *= 2.0;
  }
  expansions = 0;
  width = std::max(hi - lo, 1e-12 * scale);
  while (ratio_mean(v, hi) > p0) {
    if (++expansions > 60) throw EstimatorError("solve_threshold: no upper bracket");
    hi += width;
    width *= 2.0;
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double h = ratio_mean(v, mid);
    if (std::abs(h - p0) <= 1e-6 * p0 || hi - lo <= 1e-12 * scale) break;
    if (h > p0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

double misclass_sum(const StageView& v, double u) {
  const Eigen::Index m = v.mean->size();
  // log m goes inside the exponent so that uniform weights give exact unit factors.
  const double log_m = std::log(static_cast<double>(m));
  double acc = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double sd = (*v.sd)[j];
    if (sd == 0.0) continue;
    const double tau = sur::misclass_tau(sur::coverage_g((*v.mean)[j], sd, u));
    if (tau == 0.0) continue;
    acc += tau * std::exp((*v.log_weights)[j] + log_m - floored((*v.log_g_prev)[j]));
  }
  return acc;
}

bool stopping_check(const StageView& v, double u, double eta, double p) {
  return misclass_sum(v, u) <= eta * static_cast<double>(v.mean->size()) * p;
}

double kappa_hat(const Vector& ratios, const Vector& weights, double p_hat) {
  if (!(p_hat > 0.0)) throw EstimatorError("kappa_hat: degenerate stage (p_hat = 0)");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < ratios.size(); ++j) {
    const double dev = ratios[j] - p_hat;
    acc += weights[j] * dev * dev;
  }
  return acc / (p_hat * p_hat);
}

double kappa_hat(const Vector& ratios, double p_hat) {
  const auto m = ratios.size();
  return kappa_hat(ratios, Vector::Constant(m, 1.0 / static_cast<double>(m)), p_hat);
}

std::vector<double> cov_recursion(const std::vector<double>& kappas, std::size_t m) {
  if (m == 0) throw std::invalid_argument("cov_recursion: m must be >= 1");
  std::vector<double> out;
  double d2 = 0.0;
  const double md = static_cast<double>(m);
  for (double k : kappas) {
    if (k < 0.0) throw std::invalid_argument("cov_recursion: negative kappa");
    d2 = k / md + (1.0 + k / md) * d2;
    out.push_back(std::sqrt(d2));
  }
  return out;
}

// ---- driver ----

namespace {

struct StageState {
  Vector mean;
  Vector sd;
  Vector log_g_prev;
  Vector log_weights;
  StageView view() const { return {&mean, &sd, &log_weights, &log_g_prev}; }
};

void summarize(const Emulator& em, const ParticleSystem& ps, StageState& s, std::size_t& floor_hits,
               bool count_floor) {
  Vector var;
  em.predict(ps.points, s.mean, var);
  const double floor = em.variance_floor();
  s.sd.resize(var.size());
  for (Eigen::Index j = 0; j < var.size(); ++j) s.sd[j] = var[j] <= floor ? 0.0 : std::sqrt(var[j]);
  s.log_weights = ps.log_weights;
  s.log_g_prev = ps.cached_log_g;
  if (count_floor) {
    for (Eigen::Index j = 0; j < s.log_g_prev.size(); ++j) {
      if (s.log_g_prev[j] < kLogGFloor) ++floor_hits;
    }
  }
  for (Eigen::Index j = 0; j < s.log_g_prev.size(); ++j) s.log_g_prev[j] = floored(s.log_g_prev[j]);
}

void log_g_at(const Emulator& em, const PointMatrix& pts, double u, Vector& out) {
  Vector mean;
  Vector var;
  em.predict(pts, mean, var);
  const double floor = em.variance_floor();
  out.resize(pts.rows());
  for (Eigen::Index j = 0; j < pts.rows(); ++j) {
    const double sd = var[j] <= floor ? 0.0 : std::sqrt(var[j]);
    out[j] = sur::log_coverage_g(mean[j], sd, u);
  }
}

}  // namespace

EstimationResult run_bss(const Problem& problem, const BssConfig& config, RngStream& rng,
                         const EmulatorFactory& factory) {
  config.validate();
  validate(problem);
  const Problem p = normalize_direction(problem);
  const std::size_t d = p.dim();
  const std::size_t n0 = config.n0 > 0 ? config.n0 : 5 * d;
  const std::size_t m = config.m;
  const double md = static_cast<double>(m);

  EstimationResult res;
  res.method = "bss";
  EvaluationLedger ledger(true);

  // Stage 0: initial design.
  const design::TruncatedBox box = design::truncated_box(p.input, config.design_epsilon);
  const PointMatrix x0 = design::maximin_lhs(n0, box, config.design_candidates, rng.substream("bss/design"));
  Vector y0(x0.rows());
  for (Eigen::Index i = 0; i < x0.rows(); ++i) {
    y0[i] = ledger.evaluate(p.limit_state, row_span(x0, i), 0, Origin::InitialDesign);
    if (!std::isfinite(y0[i])) throw EstimatorError("bss: limit-state value is not finite on the initial design");
  }
  std::unique_ptr<Emulator> em = factory(x0, y0);
  const double f_scale = std::max(1.0, y0.cwiseAbs().maxCoeff());

  RngStream init_rng = rng.substream("smc/initial");
  RngStream resample_rng = rng.substream("smc/resample");
  RngStream move_rng = rng.substream("smc/move");
  ParticleSystem ps = ParticleSystem::from_points(sample_input(p.input, m, init_rng), p.input);
  smc::RwmhState kernel = smc::RwmhState::initial(p.input, config.kernel);

  double alpha = 1.0;
  double delta2 = 0.0;
  StageState st;

  auto finish = [&](bool ok, const std::string& error) {
    res.ok = ok;
    res.error = error;
    res.alpha_hat = alpha;
    res.delta_hat = std::sqrt(delta2);
    res.n_initial = ledger.initial_count();
    res.n_total = ledger.total();
    res.limit_state_calls = ledger.total();
    res.n_final = res.stages.empty() ? 0 : res.stages.back().n_evals;
    res.n_intermediate = res.n_total - res.n_initial - res.n_final;
    res.evaluations = ledger.records();
    return res;
  };

  for (int t = 1;; ++t) {
    if (t > config.max_stages) return finish(false, "max_stages exceeded");
    std::size_t k = 0;
    double u_t = 0.0;
    bool final_stage = false;
    Vector ratios;
    double p_hat = 0.0;
    double kappa = 0.0;
    while (true) {
      summarize(*em, ps, st, res.log_g_floor_hits, k == 0);
      const StageView view = st.view();
      u_t = solve_threshold(view, config.p0, f_scale);
      final_stage = u_t >= p.threshold;
      if (final_stage) u_t = p.threshold;

      ratios.resize(static_cast<Eigen::Index>(m));
      for (Eigen::Index j = 0; j < ratios.size(); ++j) {
        const double lg = sur::log_coverage_g(st.mean[j], st.sd[j], u_t);
        ratios[j] = lg == kMinusInf ? 0.0 : std::exp(lg - st.log_g_prev[j]);
      }
      const Vector w = st.log_weights.array().exp().matrix();
      p_hat = w.dot(ratios);
      kappa = p_hat > 0.0 ? kappa_hat(ratios, w, p_hat) : 0.0;

      double eta = config.eta_intermediate;
      double p_ref = config.p0;
      if (final_stage) {
        const double provisional = kappa / md + (1.0 + kappa / md) * delta2;
        eta = config.eta_final_factor * std::sqrt(provisional);
        p_ref = p_hat;
      }
      const double err = misclass_sum(view, u_t);
      if (k >= config.n_min && err <= eta * md * p_ref) break;
      if (err == 0.0 && k >= config.n_min) break;

      // Choose the next point; with nothing misclassified fall back to the most uncertain particle.
      std::vector<double> x_new;
      double criterion = 0.0;
      if (err > 0.0) {
        const sur::Selection sel = em->select(ps, u_t, config.sur);
        x_new = sel.point;
        criterion = sel.criterion;
      } else {
        Eigen::Index best = 0;
        st.sd.maxCoeff(&best);
        if (st.sd[best] == 0.0) break;
        const auto row = row_span(ps.points, best);
        x_new.assign(row.begin(), row.end());
      }
      if (ledger.total() >= config.max_total_evaluations) {
        alpha *= p_hat;
        return finish(false, "max_total_evaluations exceeded");
      }
      const double y = ledger.evaluate(p.limit_state, x_new, t, Origin::Sur);
      if (!std::isfinite(y)) throw EstimatorError("bss: limit-state value is not finite");
      em->observe(x_new, y);
      ++k;
      res.trace.push_back({ledger.total(), x_new, criterion, u_t, t});
    }

    StageRecord rec;
    rec.t = t;
    rec.u_t = u_t;
    rec.n_evals = k;
    rec.p_hat = p_hat;
    rec.kappa_hat = kappa;
    delta2 = kappa / md + (1.0 + kappa / md) * delta2;
    rec.delta_hat = std::sqrt(delta2);
    alpha *= p_hat;

    if (final_stage || p_hat == 0.0) {
      res.stages.push_back(rec);
      return finish(true, "");
    }

    // Sampling phase: reweight, resample, move towards q_t proportional to pdf * g_t.
    Vector log_g_new(static_cast<Eigen::Index>(m));
    for (Eigen::Index j = 0; j < log_g_new.size(); ++j) {
      log_g_new[j] = sur::log_coverage_g(st.mean[j], st.sd[j], u_t);
    }
    ParticleSystem weighted = smc::reweight(ps, log_g_new, st.log_g_prev);
    ps = smc::select(weighted, smc::residual_resample(weighted.weights(), resample_rng));
    ps.stage = t;
    const Emulator& frozen = *em;
    const double level = u_t;
    const smc::BatchTarget target = [&](const PointMatrix& pts, Vector& lp, Vector& lg, Vector& aux) {
      log_g_at(frozen, pts, level, lg);
      lp.resize(pts.rows());
      aux.setZero(pts.rows());
      for (Eigen::Index i = 0; i < pts.rows(); ++i) lp[i] = p.input.log_density(row_span(pts, i));
    };
    rec.acceptance = smc::rwmh_move(ps, target, kernel, move_rng).acceptance;
    res.stages.push_back(rec);
  }
}

FixedLevelResult run_fixed_levels(const InputDistribution& input, const std::vector<LogGFunction>& levels,
                                  std::size_t m, const smc::RwmhConfig& kernel_config, RngStream& rng,
                                  const ExactSampler& sampler) {
  if (levels.empty()) throw std::invalid_argument("run_fixed_levels: no levels");
  if (m < 2) throw std::invalid_argument("run_fixed_levels: m must be >= 2");
  RngStream init_rng = rng.substream("smc/initial");
  RngStream resample_rng = rng.substream("smc/resample");
  RngStream move_rng = rng.substream("smc/move");
  ParticleSystem ps = ParticleSystem::from_points(sample_input(input, m, init_rng), input);
  smc::RwmhState kernel = smc::RwmhState::initial(input, kernel_config);

  FixedLevelResult out;
  out.alpha_hat = 1.0;
  Vector lg;
  for (std::size_t t = 1; t <= levels.size(); ++t) {
    const LogGFunction& g = levels[t - 1];
    g(ps.points, lg);
    Vector ratios(lg.size());
    for (Eigen::Index j = 0; j < lg.size(); ++j) {
      ratios[j] = lg[j] == kMinusInf ? 0.0 : std::exp(lg[j] - floored(ps.cached_log_g[j]));
    }
    const double p_hat = ratios.mean();
    out.p_hat.push_back(p_hat);
    out.kappa_hat.push_back(p_hat > 0.0 ? kappa_hat(ratios, p_hat) : 0.0);
    out.alpha_hat *= p_hat;
    if (t == levels.size() || p_hat == 0.0) break;

    if (sampler) {
      RngStream draw = rng.substream("fixed/iid").substream(static_cast<std::uint64_t>(t));
      ps = ParticleSystem::from_points(sampler(t, m, draw), input);
      g(ps.points, ps.cached_log_g);
      continue;
    }
    const Vector old = ps.cached_log_g.unaryExpr([](double v) { return floored(v); });
    ParticleSystem weighted = smc::reweight(ps, lg, old);
    ps = smc::select(weighted, smc::residual_resample(weighted.weights(), resample_rng));
    const smc::BatchTarget target = [&](const PointMatrix& pts, Vector& lp, Vector& lgo, Vector& aux) {
      g(pts, lgo);
      lp.resize(pts.rows());
      aux.setZero(pts.rows());
      for (Eigen::Index i = 0; i < pts.rows(); ++i) lp[i] = input.log_density(row_span(pts, i));
    };
    smc::rwmh_move(ps, target, kernel, move_rng);
  }
  out.delta_hat = cov_recursion(out.kappa_hat, m);
  return out;
}

}  // namespace rareevent::bss
