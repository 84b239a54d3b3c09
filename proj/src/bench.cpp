#include "rareevent/bench.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>

#include "rareevent/estimators.hpp"
#include "rareevent/io.hpp"

namespace rareevent::bench {

double four_branch_f(std::span<const double> x) {
  const double x1 = x[0];
  const double x2 = x[1];
  const double diff = x1 - x2;
  const double sum = (x1 + x2) / std::numbers::sqrt2;
  const double b1 = 3.0 + 0.1 * diff * diff - sum;
  const double b2 = 3.0 + 0.1 * diff * diff + sum;
  const double b3 = diff + 6.0 / std::numbers::sqrt2;
  const double b4 = -diff + 6.0 / std::numbers::sqrt2;
  return std::min({b1, b2, b3, b4});
}

namespace {
constexpr double kBeamLength = 6.0;
constexpr double kYoung = 2.6e4;
}  // namespace

double cantilever_f(std::span<const double> x) {
  const double l4 = std::pow(kBeamLength, 4);
  return 3.0 * l4 / (2.0 * kYoung) * x[0] / (x[1] * x[1] * x[1]);
}

double oscillator_f(std::span<const double> x) {
  const double stiffness = x[1] + x[2];
  if (!(x[0] > 0.0) || !(stiffness > 0.0)) return std::nan("");
  const double w0 = std::sqrt(stiffness / x[0]);
  return 3.0 * x[3] - std::abs(2.0 * x[4] / (x[0] * w0 * w0) * std::sin(w0 * x[5] / 2.0));
}

BenchmarkCase four_branch() {
  BenchmarkCase c;
  c.name = "four-branch";
  c.problem.name = c.name;
  c.problem.limit_state = four_branch_f;
  c.problem.input = InputDistribution::standard_normal(2);
  c.problem.threshold = -4.0;
  c.problem.direction = Direction::Below;
  c.alpha_ref = 5.596e-9;
  c.alpha_ref_cov = 4e-4;
  return c;
}

BenchmarkCase cantilever_beam() {
  BenchmarkCase c;
  c.name = "cantilever";
  c.problem.name = c.name;
  c.problem.limit_state = cantilever_f;
  c.problem.input = InputDistribution({NormalMarginal(1e-3, 0.2e-3), NormalMarginal(0.3, 0.03)});
  c.problem.threshold = kBeamLength / 325.0;
  c.problem.direction = Direction::Above;
  c.alpha_ref = 3.937e-6;
  c.alpha_ref_cov = 3e-4;
  return c;
}

BenchmarkCase nonlinear_oscillator() {
  BenchmarkCase c;
  c.name = "oscillator";
  c.problem.name = c.name;
  c.problem.limit_state = oscillator_f;
  c.problem.input = InputDistribution({NormalMarginal(1.0, 0.05), NormalMarginal(1.0, 0.1),
                                       NormalMarginal(0.1, 0.01), NormalMarginal(0.5, 0.05),
                                       NormalMarginal(0.45, 0.075), NormalMarginal(1.0, 0.2)});
  c.problem.threshold = 0.0;
  c.problem.direction = Direction::Below;
  c.alpha_ref = 1.514e-8;
  c.alpha_ref_cov = 4e-4;
  return c;
}

std::vector<std::string> case_names() { return {"four-branch", "cantilever", "oscillator"}; }

BenchmarkCase case_by_name(const std::string& name) {
  if (name == "four-branch") return four_branch();
  if (name == "cantilever") return cantilever_beam();
  if (name == "oscillator") return nonlinear_oscillator();
  throw ConfigError("unknown benchmark case '" + name + "'");
}

Method parse_method(const std::string& name) {
  if (name == "mc") return Method::Mc;
  if (name == "ss") return Method::Ss;
  if (name == "bss") return Method::Bss;
  throw ConfigError("unknown method '" + name + "'");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::Mc:
      return "mc";
    case Method::Ss:
      return "ss";
    case Method::Bss:
      return "bss";
  }
  return "unknown";
}

EstimationResult run_method(const Problem& problem, Method method, std::size_t m,
                            const MethodSettings& settings, RngStream& rng) {
  switch (method) {
    case Method::Mc:
      return estimators::run_monte_carlo(problem, m, rng);
    case Method::Ss: {
      estimators::SubsetSimConfig cfg;
      cfg.m = m;
      cfg.m0 = static_cast<std::size_t>(std::llround(settings.p0 * static_cast<double>(m)));
      if (cfg.m0 < 1 || cfg.m0 >= m) throw ConfigError("p0 * m must round to an integer in [1, m)");
      cfg.kernel = settings.kernel;
      cfg.max_stages = settings.max_stages;
      return estimators::run_subset_simulation(problem, cfg, rng);
    }
    case Method::Bss: {
      bss::BssConfig cfg = settings.bss;
      cfg.m = m;
      cfg.p0 = settings.p0;
      cfg.kernel = settings.kernel;
      cfg.max_stages = settings.max_stages;
      return bss::run_bss(problem, cfg, rng);
    }
  }
  throw ConfigError("unknown method");
}

RngStream run_stream(std::uint64_t seed, std::size_t m, std::size_t run) {
  return RngStream(seed).substream(static_cast<std::uint64_t>(m)).substream(static_cast<std::uint64_t>(run));
}

RmseRow summarize(const std::vector<RunRecord>& runs, double alpha_ref) {
  RmseRow row;
  if (runs.empty()) return row;
  row.method = runs.front().method;
  row.case_name = runs.front().case_name;
  row.m = runs.front().m;
  row.runs = runs.size();
  std::vector<double> est;
  std::vector<double> wall;
  double n_sum = 0.0;
  double n_init = 0.0;
  double n_mid = 0.0;
  double n_fin = 0.0;
  for (const RunRecord& r : runs) {
    if (!r.ok) {
      ++row.failed;
      continue;
    }
    est.push_back(r.result.alpha_hat);
    wall.push_back(r.wall_ms);
    n_sum += static_cast<double>(r.result.n_total);
    n_init += static_cast<double>(r.result.n_initial);
    n_mid += static_cast<double>(r.result.n_intermediate);
    n_fin += static_cast<double>(r.result.n_final);
  }
  const auto k = static_cast<double>(est.size());
  if (est.empty()) return row;
  double mean = 0.0;
  for (double e : est) mean += e;
  mean /= k;
  double mse = 0.0;
  double var = 0.0;
  for (double e : est) {
    mse += (e - alpha_ref) * (e - alpha_ref);
    var += (e - mean) * (e - mean);
  }
  row.mean_est = mean;
  row.rel_rmse = std::sqrt(mse / k) / alpha_ref;
  row.rel_abs_bias = std::abs(mean - alpha_ref) / alpha_ref;
  row.cov = est.size() > 1 && mean != 0.0 ? std::sqrt(var / (k - 1.0)) / mean : 0.0;
  row.n_evals_mean = n_sum / k;
  row.n_evals_init = n_init / k;
  row.n_evals_intermediate = n_mid / k;
  row.n_evals_final = n_fin / k;
  std::sort(wall.begin(), wall.end());
  const std::size_t h = wall.size() / 2;
  row.wall_ms_median = wall.size() % 2 == 1 ? wall[h] : 0.5 * (wall[h - 1] + wall[h]);
  return row;
}

RmseTable run_rmse_experiment(const BenchmarkCase& bench_case, Method method,
                              const std::vector<std::size_t>& m_values, std::size_t runs,
                              std::uint64_t seed, const MethodSettings& settings, int jobs) {
  if (runs < 2) throw ConfigError("run_rmse_experiment: runs must be >= 2");
  if (m_values.empty()) throw ConfigError("run_rmse_experiment: empty m list");
  RmseTable table;
  for (std::size_t m : m_values) {
    std::vector<RunRecord> records(runs);
    const auto n = static_cast<long>(runs);
    // Parallel over runs only; the kernels inside each run stay serial.
    const int saved_levels = omp_get_max_active_levels();
    omp_set_max_active_levels(1);
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, jobs))
    for (long i = 0; i < n; ++i) {
      RunRecord& rec = records[static_cast<std::size_t>(i)];
      rec.method = to_string(method);
      rec.case_name = bench_case.name;
      rec.m = m;
      rec.run = static_cast<std::size_t>(i);
      rec.seed = seed;
      RngStream rng = run_stream(seed, m, rec.run);
      const auto start = std::chrono::steady_clock::now();
      try {
        rec.result = run_method(bench_case.problem, method, m, settings, rng);
        rec.ok = rec.result.ok;
        rec.error = rec.result.error;
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
      }
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    omp_set_max_active_levels(saved_levels);
    table.rows.push_back(summarize(records, bench_case.alpha_ref));
    table.runs.insert(table.runs.end(), records.begin(), records.end());
  }
  return table;
}

void write_rmse_csv(std::ostream& out, const std::vector<RmseRow>& rows) {
  out << "method,case,m,runs,mean_est,rel_rmse,rel_abs_bias,cov,n_evals_mean,n_evals_init,"
         "n_evals_intermediate,n_evals_final,wall_ms_median\n";
  for (const RmseRow& r : rows) {
    out << r.method << ',' << r.case_name << ',' << r.m << ',' << (r.runs - r.failed) << ','
        << io::num(r.mean_est) << ',' << io::num(r.rel_rmse) << ',' << io::num(r.rel_abs_bias) << ','
        << io::num(r.cov) << ',' << io::num(r.n_evals_mean) << ',' << io::num(r.n_evals_init) << ','
        << io::num(r.n_evals_intermediate) << ',' << io::num(r.n_evals_final) << ','
        << io::num(r.wall_ms_median) << '\n';
  }
}

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs) {
  out << "method,case,m,run,ok,alpha_hat,delta_hat,n_total,n_init,n_intermediate,n_final,"
         "limit_state_calls,stages,wall_ms,error\n";
  for (const RunRecord& r : runs) {
    const EstimationResult& e = r.result;
    out << r.method << ',' << r.case_name << ',' << r.m << ',' << r.run << ',' << (r.ok ? 1 : 0) << ','
        << io::num(e.alpha_hat) << ',' << io::num(e.delta_hat) << ',' << e.n_total << ',' << e.n_initial
        << ',' << e.n_intermediate << ',' << e.n_final << ',' << e.limit_state_calls << ','
        << e.stages.size() << ',' << io::num(r.wall_ms) << ',' << io::csv_field(r.error) << '\n';
  }
}

double recompute_reference(const BenchmarkCase& bench_case, std::size_t m, std::size_t replicates,
                           std::uint64_t seed) {
  if (replicates < 1) throw ConfigError("recompute_reference: replicates must be >= 1");
  double acc = 0.0;
  MethodSettings settings;
  for (std::size_t r = 0; r < replicates; ++r) {
    RngStream rng = run_stream(seed, m, r);
    acc += run_method(bench_case.problem, Method::Ss, m, settings, rng).alpha_hat;
  }
  return acc / static_cast<double>(replicates);
}

}  // namespace rareevent::bench
