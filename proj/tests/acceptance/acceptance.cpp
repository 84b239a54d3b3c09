// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers as arguments to
// run a subset, e.g. `acceptance 1 5`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "../support/sur_oracle.hpp"
#include "rareevent/bench.hpp"
#include "rareevent/bss.hpp"
#include "rareevent/design.hpp"
#include "rareevent/estimators.hpp"
#include "rareevent/gp.hpp"
#include "rareevent/parallel.hpp"
#include "rareevent/smc.hpp"
#include "rareevent/stats.hpp"
#include "rareevent/sur.hpp"

using namespace rareevent;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int jobs() { return std::max(1, parallel::max_threads()); }

double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// ---- 1. bivariate normal ----

Outcome special_functions() {
  RngStream rng(101);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double b1 = -6.0 + 12.0 * rng.uniform();
    const double b2 = -6.0 + 12.0 * rng.uniform();
    const double rho = -0.999 + 1.998 * rng.uniform();
    worst = std::max(worst, std::abs(stats::binorm_cdf(b1, b2, rho) - oracle::binorm_quadrature(b1, b2, rho)));
  }
  double worst_closed = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double rho = -1.0 + 0.01 * i;
    const double exact = 0.25 + std::asin(rho) / (2.0 * std::numbers::pi);
    worst_closed = std::max(worst_closed, std::abs(stats::binorm_cdf(0.0, 0.0, rho) - exact));
  }
  return {worst <= 1e-7 && worst_closed <= 1e-10,
          fmt("max |err| vs quadrature %.2e (<= 1e-7), at origin %.2e (<= 1e-10)", worst, worst_closed)};
}

// ---- 2. Gaussian process ----

Vector smooth_function(const PointMatrix& x) {
  Vector y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < x.cols(); ++k) s += std::sin(3.0 * x(i, k) + 0.5 * static_cast<double>(k)) / (1.0 + static_cast<double>(k));
    y[i] = s + 0.3 * x(i, 0) * x(i, 0);
  }
  return y;
}

// 2-norm condition number of the nugget-regularized correlation matrix.
double correlation_condition(const PointMatrix& x, const gp::CovarianceHyperparams& h) {
  Matrix r(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j) r(i, j) = gp::covariance(row_span(x, i), row_span(x, j), h) / h.sigma2;
  r.diagonal().array() += gp::kNugget;
  const Eigen::SelfAdjointEigenSolver<Matrix> es(r, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
}

// Identities are checked to 1e-8, so cases whose factorization alone can lose more than
// that (eps * cond > 1e-8) are redrawn. Both the design and the design augmented with
// the update point must pass. The redraw count is reported.
Outcome gp_correctness() {
  RngStream rng(202);
  const double max_cond = 1e-8 / std::numeric_limits<double>::epsilon();
  double interp = 0.0;
  double interp_var = 0.0;
  double shift = 0.0;
  double update = 0.0;
  double grad = 0.0;
  int redraws = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t d = 1 + rng.below(6);
    const std::size_t n = d + 2 + rng.below(60 - d - 1);
    const PointMatrix x = design::lhs_unit_candidate(n, d, rng);
    gp::CovarianceHyperparams h;
    h.sigma2 = 0.5 + 2.0 * rng.uniform();
    h.ranges.resize(static_cast<Eigen::Index>(d));
    for (Eigen::Index k = 0; k < h.ranges.size(); ++k) h.ranges[k] = 0.1 + 0.9 * rng.uniform();
    PointMatrix pts(10, static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      for (Eigen::Index k = 0; k < pts.cols(); ++k) pts(i, k) = -0.2 + 1.4 * rng.uniform();
    PointMatrix augmented(x.rows() + 1, x.cols());
    augmented.topRows(x.rows()) = x;
    augmented.bottomRows(1) = pts.topRows(1);
    if (correlation_condition(augmented, h) > max_cond) {
      ++redraws;
      --rep;
      continue;
    }
    const Vector y = smooth_function(x);
    const gp::GpModel model(x, y, h);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto p = model.predict(row_span(x, i));
      interp = std::max(interp, std::abs(p.mean - y[i]));
      interp_var = std::max(interp_var, p.variance / h.sigma2);
    }

    const double c = -50.0 + 100.0 * rng.uniform();
    const gp::GpModel shifted(x, (y.array() + c).matrix(), h);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      const auto a = model.predict(row_span(pts, i));
      const auto b = shifted.predict(row_span(pts, i));
      shift = std::max({shift, std::abs(b.mean - a.mean - c), std::abs(b.variance - a.variance)});
    }

    // The new value carries the nugget like every design value.
    const auto xn = row_span(pts, 0);
    const double yn = -1.0 + 2.0 * rng.uniform();
    const gp::GpModel updated = model.with_observation(xn, yn);
    const auto pn = model.predict(xn);
    const double v = pn.variance + gp::kNugget * h.sigma2;
    for (Eigen::Index i = 1; i < pts.rows(); ++i) {
      const auto pe = model.predict(row_span(pts, i));
      const double k = model.posterior_cov(row_span(pts, i), xn);
      const auto after = updated.predict(row_span(pts, i));
      update = std::max({update, std::abs(after.mean - (pe.mean + k / v * (yn - pn.mean))),
                         std::abs(after.variance - (pe.variance - k * k / v))});
    }

    Vector g;
    gp::restricted_log_likelihood(x, y, h, &g);
    Vector theta(static_cast<Eigen::Index>(d) + 1);
    theta[0] = std::log(h.sigma2);
    theta.tail(static_cast<Eigen::Index>(d)) = h.ranges.array().log().matrix();
    auto f = [&](const Vector& t) {
      gp::CovarianceHyperparams hh{std::exp(t[0]), t.tail(t.size() - 1).array().exp().matrix()};
      return gp::restricted_log_likelihood(x, y, hh);
    };
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double e = 1e-5;
      Vector tp = theta;
      Vector tm = theta;
      tp[i] += e;
      tm[i] -= e;
      const double fd = (f(tp) - f(tm)) / (2.0 * e);
      grad = std::max(grad, std::abs(fd - g[i]) / std::max(1.0, std::abs(fd)));
    }
  }
  // Variance at design points may exceed the nugget by the roundoff of sigma2 - a'a.
  const double var_bound = gp::kNugget + 64.0 * std::numeric_limits<double>::epsilon();
  const bool ok = interp <= 1e-8 && interp_var <= var_bound && shift <= 1e-8 && update <= 1e-8 && grad <= 1e-4;
  return {ok, fmt("interpolation %.2e, design variance %.2e sigma2, shift %.2e, one-point update %.2e "
                  "(each <= 1e-8); ReML gradient rel err %.2e (<= 1e-4); %d ill-conditioned draws replaced",
                  interp, interp_var, shift, update, grad, redraws)};
}

// ---- 3. SMC ----

double mixture_pdf(double x) {
  return 0.5 * oracle::phi((x + 2.0) / 0.6) / 0.6 + 0.5 * oracle::phi((x - 2.0) / 0.6) / 0.6;
}

double mixture_cdf(double x) { return 0.5 * oracle::Phi((x + 2.0) / 0.6) + 0.5 * oracle::Phi((x - 2.0) / 0.6); }

Outcome smc_correctness() {
  RngStream rng(303);
  const std::size_t m = 20;
  std::vector<double> w(m);
  double total = 0.0;
  for (double& v : w) total += (v = rng.uniform());
  for (double& v : w) v /= total;
  const int reps = 100000;
  std::vector<double> sum(m, 0.0);
  std::vector<double> sum_sq(m, 0.0);
  std::vector<double> counts(m);
  for (int r = 0; r < reps; ++r) {
    std::fill(counts.begin(), counts.end(), 0.0);
    for (std::size_t i : smc::residual_resample(w, rng)) counts[i] += 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      sum[j] += counts[j];
      sum_sq[j] += counts[j] * counts[j];
    }
  }
  double worst_z = 0.0;
  bool counts_ok = true;
  for (std::size_t j = 0; j < m; ++j) {
    const double mean = sum[j] / reps;
    const double var = std::max(0.0, sum_sq[j] / reps - mean * mean);
    const double se = std::sqrt(var / reps);
    const double dev = std::abs(mean - static_cast<double>(m) * w[j]);
    if (se == 0.0) {
      counts_ok = counts_ok && dev < 1e-12;
      continue;
    }
    worst_z = std::max(worst_z, dev / se);
  }
  counts_ok = counts_ok && worst_z <= 3.0;

  // Bimodal target sampled exactly, then 50 sweeps with a fixed step; it must stay put.
  const std::size_t n = 10000;
  PointMatrix x(static_cast<Eigen::Index>(n), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) = (rng.uniform() < 0.5 ? -2.0 : 2.0) + 0.6 * rng.normal();
  const auto input = InputDistribution::standard_normal(1);
  auto ps = ParticleSystem::from_points(x, input);
  const smc::BatchTarget target = [](const PointMatrix& pts, Vector& lp, Vector& lg, Vector& aux) {
    lp.resize(pts.rows());
    for (Eigen::Index i = 0; i < pts.rows(); ++i) lp[i] = std::log(mixture_pdf(pts(i, 0)));
    lg = Vector::Zero(pts.rows());
    aux = Vector::Zero(pts.rows());
  };
  smc::RwmhConfig cfg;
  cfg.sweeps = 50;
  cfg.adapt = false;
  cfg.c_init = 1.5;
  auto state = smc::RwmhState::initial(input, cfg);
  const auto diag = smc::rwmh_move(ps, target, state, rng);

  std::vector<double> edges = {-oracle::kInf};
  for (double e = -3.5; e <= 3.5 + 1e-9; e += 0.25) edges.push_back(e);
  edges.push_back(oracle::kInf);
  std::vector<double> observed(edges.size() - 1, 0.0);
  std::vector<double> expected(edges.size() - 1, 0.0);
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    const double lo = std::isinf(edges[b]) ? 0.0 : mixture_cdf(edges[b]);
    const double hi = std::isinf(edges[b + 1]) ? 1.0 : mixture_cdf(edges[b + 1]);
    expected[b] = static_cast<double>(n) * (hi - lo);
  }
  for (Eigen::Index i = 0; i < ps.points.rows(); ++i) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), ps.points(i, 0));
    observed[static_cast<std::size_t>(it - edges.begin()) - 1] += 1.0;
  }
  const double p = oracle::chi2_pvalue(observed, expected);
  const double mean_acc = sample_mean(diag.acceptance);
  return {counts_ok && p > 1e-3,
          fmt("residual counts max |z| %.2f (<= 3); RWMH chi-squared p = %.3f (> 0.001), acceptance %.2f",
              worst_z, p, mean_acc)};
}

// ---- 4. subset simulation ----

Problem gaussian_tail(double u) {
  Problem p;
  p.name = "gaussian-tail";
  p.limit_state = [](std::span<const double> x) { return x[0]; };
  p.input = InputDistribution::standard_normal(1);
  p.threshold = u;
  return p;
}

Outcome subset_simulation() {
  const double alpha = 1e-4;
  const Problem problem = gaussian_tail(-oracle::Phi_inv(alpha));
  estimators::SubsetSimConfig cfg;
  cfg.m = 2000;
  cfg.m0 = 200;
  const int runs = 200;
  std::vector<double> est(runs);
  const RngStream base(404);
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs())
  for (int r = 0; r < runs; ++r) {
    RngStream rng = base.substream(static_cast<std::uint64_t>(r));
    est[static_cast<std::size_t>(r)] = estimators::run_subset_simulation(problem, cfg, rng).alpha_hat;
  }
  const double mean = sample_mean(est);
  const double sd = sample_sd(est);
  const double se = sd / std::sqrt(static_cast<double>(runs));
  const double z = std::abs(mean - alpha) / se;
  const double rel_sd = sd / alpha;
  const double T = std::ceil(std::log(alpha) / std::log(0.1));
  const double theory = std::sqrt(T * 0.9 / (0.1 * 2000.0));
  const double ratio = rel_sd / theory;
  return {z <= 3.0 && ratio >= 0.5 && ratio <= 2.0,
          fmt("mean %.4e, |mean - alpha| = %.2f SE (<= 3); rel sd %.3f vs %.3f, ratio %.2f (in [0.5, 2])",
              mean, z, rel_sd, theory, ratio)};
}

// ---- 5. SUR ----

Outcome sur_oracle_equivalence() {
  int matches = 0;
  std::string misses;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto inst = oracle::make_sur_toy(seed);
    const gp::GpModel model(inst.toy.design, inst.toy.values, inst.toy.hyper);
    const auto expect = oracle::brute_force_argmin(inst.toy);
    const auto sel = sur::select_next_point(model, inst.particles, inst.toy.u, {1000, 1.0});
    if (static_cast<Eigen::Index>(sel.index) == expect) {
      ++matches;
    } else {
      misses += fmt(" seed %d: %zu vs %ld", static_cast<int>(seed), sel.index, static_cast<long>(expect));
    }
  }
  return {matches == 20, fmt("%d / 20 seeds select the brute-force argmin%s", matches, misses.c_str())};
}

// ---- 6. idealized BSS variance ----

struct ProbitLevels {
  double s = 0.5;
  std::vector<double> u;  // u_1..u_T

  double sv() const { return std::sqrt(1.0 + s * s); }
  double alpha(std::size_t t) const { return t == 0 ? 1.0 : oracle::Phi(-u[t - 1] / sv()); }

  // Exact draws from q_t proportional to phi(x) Phi((x - u_t) / s): with V = X - s Z',
  // q_t is the law of X given V > u_t.
  PointMatrix sample(std::size_t t, std::size_t m, RngStream& rng) const {
    const double a = u[t - 1] / sv();
    const double tail = oracle::Phi(-a);
    const double cond_sd = s / sv();
    PointMatrix out(static_cast<Eigen::Index>(m), 1);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double w = -oracle::Phi_inv((1.0 - rng.uniform()) * tail);
      const double v = sv() * w;
      out(i, 0) = v / (1.0 + s * s) + cond_sd * rng.normal();
    }
    return out;
  }

  double kappa(std::size_t t) const {
    auto log_g = [&](double x, std::size_t k) { return k == 0 ? 0.0 : oracle::log_Phi((x - u[k - 1]) / s); };
    auto integrand = [&](double x) {
      return std::exp(-0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi) + 2.0 * log_g(x, t) - log_g(x, t - 1));
    };
    // Half-unit pieces keep the panels finer than the width of q_t.
    const double scale = alpha(t) * alpha(t) / alpha(t - 1);
    double num = 0.0;
    for (double a = -10.0; a < 12.0; a += 0.5) num += oracle::integrate_abs(integrand, a, a + 0.5, 1e-12 * scale);
    return num / scale - 1.0;
  }

  std::vector<bss::LogGFunction> functions() const {
    std::vector<bss::LogGFunction> out;
    for (double ut : u) {
      const double sc = s;
      out.emplace_back([ut, sc](const PointMatrix& x, Vector& lg) {
        lg.resize(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) lg[i] = stats::log_norm_cdf((x(i, 0) - ut) / sc);
      });
    }
    return out;
  }
};

struct VarianceStudy {
  double rel_var = 0.0;
  double cov = 0.0;
  double mean_delta = 0.0;
};

VarianceStudy replicate_fixed_levels(const ProbitLevels& lv, std::size_t m, int reps, std::uint64_t seed,
                                     bool iid) {
  const auto input = InputDistribution::standard_normal(1);
  const auto g = lv.functions();
  const double alpha_b = lv.alpha(lv.u.size());
  std::vector<double> rel(static_cast<std::size_t>(reps));
  std::vector<double> delta(static_cast<std::size_t>(reps));
  const bss::ExactSampler sampler = [&lv](std::size_t t, std::size_t n, RngStream& r) { return lv.sample(t, n, r); };
  const RngStream base(seed);
#pragma omp parallel for schedule(dynamic, 4) num_threads(jobs())
  for (int r = 0; r < reps; ++r) {
    RngStream rng = base.substream(static_cast<std::uint64_t>(r));
    const auto out = bss::run_fixed_levels(input, g, m, {}, rng, iid ? sampler : bss::ExactSampler{});
    rel[static_cast<std::size_t>(r)] = out.alpha_hat / alpha_b;
    delta[static_cast<std::size_t>(r)] = out.delta_hat.back();
  }
  const double sd = sample_sd(rel);
  return {sd * sd, sd / sample_mean(rel), sample_mean(delta)};
}

Outcome idealized_variance() {
  ProbitLevels lv;
  const std::size_t T = 4;
  for (std::size_t t = 1; t <= T; ++t) lv.u.push_back(-lv.sv() * oracle::Phi_inv(std::pow(10.0, -static_cast<double>(t))));
  double kappa_sum = 0.0;
  for (std::size_t t = 1; t <= T; ++t) kappa_sum += lv.kappa(t);
  const std::size_t m = 1000;
  const double theory = kappa_sum / static_cast<double>(m);

  const auto iid = replicate_fixed_levels(lv, m, 500, 606, true);
  const double var_ratio = iid.rel_var / theory;
  const double delta_ratio = iid.mean_delta / iid.cov;
  const auto mcmc = replicate_fixed_levels(lv, m, 500, 607, false);
  std::printf("INFO  6 with resample-move instead of i.i.d. redraws: variance / theory %.2f, mean delta / CoV %.2f\n",
              mcmc.rel_var / theory, mcmc.mean_delta / mcmc.cov);
  return {std::abs(var_ratio - 1.0) <= 0.25 && std::abs(delta_ratio - 1.0) <= 0.25,
          fmt("sum kappa / m = %.4e, empirical %.4e, ratio %.3f; mean delta %.4f vs CoV %.4f, ratio %.3f "
              "(both within 25%%)",
              theory, iid.rel_var, var_ratio, iid.mean_delta, iid.cov, delta_ratio)};
}

// ---- 7 to 9. benchmarks ----

struct CaseRuns {
  bench::BenchmarkCase c;
  std::map<std::size_t, bench::RmseRow> rows;
  std::vector<bench::RunRecord> at_2000;
};

const std::vector<CaseRuns>& benchmark_runs() {
  static std::optional<std::vector<CaseRuns>> cache;
  if (cache) return *cache;
  cache.emplace();
  for (const std::string& name : bench::case_names()) {
    CaseRuns cr;
    cr.c = bench::case_by_name(name);
    const std::vector<std::size_t> ms =
        name == "four-branch" ? std::vector<std::size_t>{500, 1000, 2000} : std::vector<std::size_t>{2000};
    const auto table = bench::run_rmse_experiment(cr.c, bench::Method::Bss, ms, 20, 707, {}, jobs());
    for (const auto& row : table.rows) cr.rows[row.m] = row;
    for (const auto& run : table.runs)
      if (run.m == 2000) cr.at_2000.push_back(run);
    cache->push_back(std::move(cr));
  }
  return *cache;
}

struct Spread {
  double gm_ratio = 0.0;
  double within2 = 0.0;
  double within3 = 0.0;
  std::size_t failed = 0;
};

Spread spread(const CaseRuns& cr) {
  Spread s;
  double log_sum = 0.0;
  std::size_t ok = 0;
  for (const auto& run : cr.at_2000) {
    if (!run.ok || !(run.result.alpha_hat > 0.0)) {
      ++s.failed;
      continue;
    }
    const double r = run.result.alpha_hat / cr.c.alpha_ref;
    log_sum += std::log(r);
    ++ok;
    const double fac = std::max(r, 1.0 / r);
    if (fac <= 2.0) s.within2 += 1.0;
    if (fac <= 3.0) s.within3 += 1.0;
  }
  const auto n = static_cast<double>(cr.at_2000.size());
  s.within2 /= n;
  s.within3 /= n;
  s.gm_ratio = ok > 0 ? std::exp(log_sum / static_cast<double>(ok)) : 0.0;
  return s;
}

bool within_factor(double ratio, double factor) { return ratio > 0.0 && ratio <= factor && 1.0 / ratio <= factor; }

Outcome end_to_end() {
  const auto& all = benchmark_runs();
  bool ok = true;
  std::string detail;
  for (const CaseRuns& cr : all) {
    const Spread s = spread(cr);
    const auto& row = cr.rows.at(2000);
    bool case_ok = s.failed == 0;
    if (cr.c.name == "four-branch") {
      case_ok = case_ok && within_factor(s.gm_ratio, 1.5) && s.within3 >= 0.9 && row.n_evals_mean >= 40.0 &&
                row.n_evals_mean <= 120.0;
      const double r500 = cr.rows.at(500).rel_rmse;
      const double r1000 = cr.rows.at(1000).rel_rmse;
      const double r2000 = row.rel_rmse;
      const int inversions = (r1000 > r500 ? 1 : 0) + (r2000 > r1000 ? 1 : 0);
      case_ok = case_ok && inversions <= 1;
      detail += fmt("four-branch gm/ref %.3f (factor 1.5), within x3 %.0f%% (>= 90%%), evals %.1f ([40, 120]), "
                    "rRMSE %.3f/%.3f/%.3f at m=500/1000/2000 (%d inversion); ",
                    s.gm_ratio, 100 * s.within3, row.n_evals_mean, r500, r1000, r2000, inversions);
    } else if (cr.c.name == "cantilever") {
      case_ok = case_ok && within_factor(s.gm_ratio, 1.5) && s.within2 >= 0.9;
      detail += fmt("cantilever gm/ref %.3f (factor 1.5), within x2 %.0f%% (>= 90%%), evals %.1f; ", s.gm_ratio,
                    100 * s.within2, row.n_evals_mean);
    } else {
      case_ok = case_ok && within_factor(s.gm_ratio, 2.0);
      detail += fmt("oscillator gm/ref %.3f (factor 2), evals %.1f; ", s.gm_ratio, row.n_evals_mean);
    }
    if (s.failed > 0) detail += fmt("%s: %zu failed runs; ", cr.c.name.c_str(), s.failed);
    ok = ok && case_ok;
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Outcome savings_vs_subset_simulation() {
  const auto& all = benchmark_runs();
  const auto it = std::find_if(all.begin(), all.end(), [](const CaseRuns& c) { return c.c.name == "cantilever"; });
  const auto& bss_row = it->rows.at(2000);

  // Subset simulation sample size reaching the relative RMSE that BSS achieved, from the
  // variance approximation rRMSE^2 ~ T (1 - p0) / (p0 m).
  const double p0 = 0.1;
  const double achieved = bss_row.rel_rmse;
  const int T = estimators::ss_stage_count(it->c.alpha_ref, p0);
  auto m_ss = static_cast<std::size_t>(std::ceil(T * (1.0 - p0) / (p0 * achieved * achieved) / 10.0) * 10.0);
  const double ss_count = static_cast<double>(m_ss) * (1.0 + (T - 1) * (1.0 - p0));
  const auto ss = bench::run_rmse_experiment(it->c, bench::Method::Ss, {m_ss}, 20, 808, {}, jobs());
  const auto& ss_row = ss.rows.front();
  const double ratio = bss_row.n_evals_mean / ss_count;
  const bool ok = std::isfinite(achieved) && achieved > 0.0 && bss_row.failed == 0 && ratio <= 0.1;
  return {ok, fmt("BSS m=2000 rRMSE %.3f with %.1f evaluations (%s 0.20); matched SS m=%zu (T=%d) reports %.0f "
                  "evaluations (empirical rRMSE %.3f); ratio %.4f (<= 0.1)",
                  achieved, bss_row.n_evals_mean, achieved <= 0.2 ? "<=" : ">", m_ss, T, ss_count, ss_row.rel_rmse,
                  ratio)};
}

Outcome bias_subordination() {
  bool ok = true;
  std::string detail;
  for (const CaseRuns& cr : benchmark_runs()) {
    const auto& row = cr.rows.at(2000);
    ok = ok && row.rel_abs_bias < row.cov;
    detail += fmt("%s |bias| %.3f vs CoV %.3f; ", cr.c.name.c_str(), row.rel_abs_bias, row.cov);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> items = {
      {"special functions", special_functions},
      {"GP correctness", gp_correctness},
      {"SMC correctness", smc_correctness},
      {"subset simulation statistics", subset_simulation},
      {"SUR oracle equivalence", sur_oracle_equivalence},
      {"idealized BSS variance", idealized_variance},
      {"end-to-end BSS accuracy", end_to_end},
      {"BSS vs SS savings", savings_vs_subset_simulation},
      {"bias subordination", bias_subordination},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = items[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, items[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
