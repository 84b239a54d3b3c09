#include "rareevent/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "rareevent/bench.hpp"
#include "rareevent/io.hpp"
#include "rareevent/parallel.hpp"
#include "rareevent/problem_file.hpp"

namespace rareevent::cli {

using nlohmann::json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string hostname() {
  char buf[256] = {0};
  if (gethostname(buf, sizeof buf - 1) != 0) return "unknown";
  return buf;
}

Problem resolve_problem(EstimateConfig& config) {
  if (!config.problem_definition.empty()) return parse_problem_json(config.problem_definition);
  const std::string prefix = "file:";
  if (config.problem.rfind(prefix, 0) == 0) {
    return load_problem_file(config.problem.substr(prefix.size()), &config.problem_definition);
  }
  return bench::case_by_name(config.problem).problem;
}

void check_config(const EstimateConfig& c) {
  bench::parse_method(c.method);
  if (c.m < 2) throw ConfigError("--m must be >= 2");
  if (!(c.p0 > 0.0 && c.p0 < 1.0)) throw ConfigError("--p0 must lie in (0, 1)");
  if (c.max_stages < 1) throw ConfigError("--max-stages must be >= 1");
}

json stages_json(const EstimationResult& r) {
  json stages = json::array();
  for (const StageRecord& s : r.stages) {
    stages.push_back({{"t", s.t},
                      {"u_t", s.u_t},
                      {"n_evals", s.n_evals},
                      {"p_hat", s.p_hat},
                      {"kappa_hat", s.kappa_hat},
                      {"delta_hat", s.delta_hat},
                      {"acceptance", s.acceptance}});
  }
  return stages;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << text;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 2) throw ConfigError("bad --m-list entry '" + item + "'");
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw ConfigError("bad --m-list entry '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--m-list is empty");
  return out;
}

std::vector<std::string> parse_name_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

}  // namespace

std::string manifest_json(const EstimateConfig& config, const EstimationResult& result,
                          const std::string& started, const std::string& finished, double wall_ms) {
  json cfg = {{"method", config.method},
              {"problem", config.problem},
              {"m", config.m},
              {"p0", config.p0},
              {"seed", config.seed},
              {"max_evaluations", config.max_evaluations},
              {"max_stages", config.max_stages}};
  if (!config.problem_definition.empty()) cfg["problem_definition"] = config.problem_definition;
  json doc = {{"schema", 1},
              {"tool", "rareevent"},
              {"tool_version", kToolVersion},
              {"config", cfg},
              {"seed", config.seed},
              {"host", {{"name", hostname()}, {"threads", parallel::max_threads()}}},
              {"timestamps", {{"started", started}, {"finished", finished}, {"wall_ms", wall_ms}}},
              {"method", result.method},
              {"ok", result.ok},
              {"error", result.error},
              {"alpha_hat", result.alpha_hat},
              {"delta_hat", result.delta_hat},
              {"n_total", result.n_total},
              {"ledger",
               {{"n_initial", result.n_initial},
                {"n_intermediate", result.n_intermediate},
                {"n_final", result.n_final},
                {"n_total", result.n_total},
                {"limit_state_calls", result.limit_state_calls}}},
              {"log_g_floor_hits", result.log_g_floor_hits},
              {"stages", stages_json(result)}};
  return doc.dump(2) + "\n";
}

EstimateConfig config_from_manifest(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("schema").get<int>() != 1) throw ConfigError("unsupported manifest schema");
    const json& c = doc.at("config");
    EstimateConfig cfg;
    cfg.method = c.at("method").get<std::string>();
    cfg.problem = c.at("problem").get<std::string>();
    cfg.problem_definition = c.value("problem_definition", std::string());
    cfg.m = c.at("m").get<std::size_t>();
    cfg.p0 = c.at("p0").get<double>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    cfg.max_evaluations = c.at("max_evaluations").get<std::size_t>();
    cfg.max_stages = c.at("max_stages").get<int>();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
}

EstimationResult run_estimate(const EstimateConfig& config) {
  EstimateConfig c = config;
  check_config(c);
  const Problem problem = resolve_problem(c);
  bench::MethodSettings settings;
  settings.p0 = c.p0;
  settings.max_stages = c.max_stages;
  settings.bss.max_total_evaluations = c.max_evaluations;
  RngStream rng(c.seed);
  return bench::run_method(problem, bench::parse_method(c.method), c.m, settings, rng);
}

namespace {

int cmd_estimate(EstimateConfig config, const std::string& replay, const std::string& out_path,
                 const std::string& trace_path, const std::string& design_path, std::ostream& out) {
  if (!replay.empty()) {
    std::ifstream f(replay);
    if (!f) throw ConfigError("cannot open manifest '" + replay + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    config = config_from_manifest(ss.str());
  } else if (config.problem.empty()) {
    throw ConfigError("--problem is required");
  }
  check_config(config);
  // Resolve once up front so the manifest embeds the problem file contents.
  resolve_problem(config);

  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  const EstimationResult result = run_estimate(config);
  const double wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  const std::string text = manifest_json(config, result, started, utc_now(), wall_ms);
  out << text;
  if (!out_path.empty()) write_file(out_path, text);
  if (!trace_path.empty()) {
    std::ostringstream os;
    const std::size_t d = result.evaluations.empty() ? 0 : result.evaluations.front().point.size();
    io::write_trace_csv(os, result.trace, d);
    write_file(trace_path, os.str());
  }
  if (!design_path.empty() && !result.evaluations.empty()) {
    const auto n = static_cast<Eigen::Index>(result.evaluations.size());
    const auto d = static_cast<Eigen::Index>(result.evaluations.front().point.size());
    PointMatrix x(n, d);
    Vector f(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& rec = result.evaluations[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 0; k < d; ++k) x(i, k) = rec.point[static_cast<std::size_t>(k)];
      f[i] = rec.value;
    }
    std::ostringstream os;
    io::write_design_csv(os, x, f);
    write_file(design_path, os.str());
  }
  return result.ok ? kOk : kEstimatorError;
}

struct BenchmarkArgs {
  std::string case_name;
  std::string methods = "bss";
  std::string m_list = "500,1000,2000";
  std::size_t runs = 20;
  std::uint64_t seed = 0;
  std::string out_dir = "benchmark_out";
  int jobs = 1;
  double p0 = 0.1;
  std::size_t max_evaluations = 500;
  bool recompute_reference = false;
};

int cmd_benchmark(const BenchmarkArgs& a, std::ostream& out, std::ostream& err) {
  if (a.case_name.empty()) throw ConfigError("--case is required");
  bench::BenchmarkCase bc = bench::case_by_name(a.case_name);
  std::vector<bench::Method> methods;
  for (const auto& name : parse_name_list(a.methods)) methods.push_back(bench::parse_method(name));
  const auto m_values = parse_size_list(a.m_list);
  if (a.runs < 2) throw ConfigError("--runs must be >= 2");
  if (!(a.p0 > 0.0 && a.p0 < 1.0)) throw ConfigError("--p0 must lie in (0, 1)");
  if (a.jobs < 1) throw ConfigError("--jobs must be >= 1");
  const int cap = parallel::env_thread_cap();
  const int jobs = cap > 0 ? std::min(a.jobs, cap) : a.jobs;

  if (a.recompute_reference) {
    err << "recomputing reference with subset simulation (m = 1e6, 10 replicates)\n";
    bc.alpha_ref = bench::recompute_reference(bc, 1000000, 10, a.seed);
    err << "reference: " << io::num(bc.alpha_ref) << "\n";
  }

  namespace fs = std::filesystem;
  const fs::path dir(a.out_dir);
  fs::create_directories(dir / "manifests");

  bench::MethodSettings settings;
  settings.p0 = a.p0;
  settings.bss.max_total_evaluations = a.max_evaluations;
  std::vector<bench::RmseRow> rows;
  std::vector<bench::RunRecord> runs;
  for (bench::Method method : methods) {
    const auto table = bench::run_rmse_experiment(bc, method, m_values, a.runs, a.seed, settings, jobs);
    rows.insert(rows.end(), table.rows.begin(), table.rows.end());
    runs.insert(runs.end(), table.runs.begin(), table.runs.end());
  }
  for (const auto& r : runs) {
    EstimateConfig c;
    c.method = r.method;
    c.problem = r.case_name;
    c.m = r.m;
    c.p0 = a.p0;
    c.seed = r.seed;
    c.max_evaluations = a.max_evaluations;
    std::ostringstream name;
    name << r.method << "_m" << r.m << "_run" << r.run << ".json";
    write_file((dir / "manifests" / name.str()).string(), manifest_json(c, r.result, "", "", r.wall_ms));
    if (!r.ok) err << r.method << " m=" << r.m << " run " << r.run << " failed: " << r.error << "\n";
  }
  std::ostringstream rmse;
  bench::write_rmse_csv(rmse, rows);
  std::ostringstream long_form;
  bench::write_runs_csv(long_form, runs);
  write_file((dir / "rmse.csv").string(), rmse.str());
  write_file((dir / "runs.csv").string(), long_form.str());
  out << rmse.str();
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rare-event probability estimation: Monte Carlo, subset simulation, Bayesian subset simulation",
               "rareevent"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (capped by RARE_EVENT_THREADS)");

  EstimateConfig est;
  std::string replay;
  std::string out_path;
  std::string trace_path;
  std::string design_path;
  auto* estimate = app.add_subcommand("estimate", "Estimate a probability of failure");
  estimate->add_option("--method", est.method, "mc, ss or bss")->capture_default_str();
  estimate->add_option("--problem", est.problem, "four-branch, cantilever, oscillator or file:<path>");
  estimate->add_option("--m", est.m, "Particles (sample size)")->capture_default_str();
  estimate->add_option("--p0", est.p0, "Target conditional probability per stage")->capture_default_str();
  estimate->add_option("--seed", est.seed, "Root seed")->capture_default_str();
  estimate->add_option("--max-evals", est.max_evaluations, "BSS evaluation budget")->capture_default_str();
  estimate->add_option("--max-stages", est.max_stages, "Stage cap")->capture_default_str();
  estimate->add_option("--out", out_path, "Also write the manifest JSON here");
  estimate->add_option("--trace", trace_path, "Write the SUR trace CSV here (bss)");
  estimate->add_option("--design", design_path, "Write the evaluated design CSV here (bss)");
  estimate->add_option("--replay", replay, "Rerun the configuration stored in a manifest");

  BenchmarkArgs bench_args;
  auto* benchmark = app.add_subcommand("benchmark", "Relative RMSE study on a benchmark case");
  benchmark->add_option("--case", bench_args.case_name, "four-branch, cantilever or oscillator");
  benchmark->add_option("--methods", bench_args.methods, "Comma-separated list of mc, ss, bss")->capture_default_str();
  benchmark->add_option("--m-list", bench_args.m_list, "Comma-separated sample sizes")->capture_default_str();
  benchmark->add_option("--runs", bench_args.runs, "Runs per sample size")->capture_default_str();
  benchmark->add_option("--seed", bench_args.seed, "Root seed")->capture_default_str();
  benchmark->add_option("--out-dir", bench_args.out_dir, "Output directory")->capture_default_str();
  benchmark->add_option("--jobs", bench_args.jobs, "Concurrent runs")->capture_default_str();
  benchmark->add_option("--p0", bench_args.p0, "Target conditional probability per stage")->capture_default_str();
  benchmark->add_option("--max-evals", bench_args.max_evaluations, "BSS evaluation budget")->capture_default_str();
  benchmark->add_flag("--recompute-reference", bench_args.recompute_reference,
                      "Recompute the reference value by subset simulation first");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    parallel::set_threads(threads);
    if (estimate->parsed()) return cmd_estimate(est, replay, out_path, trace_path, design_path, out);
    return cmd_benchmark(bench_args, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const EstimatorError& e) {
    err << "estimator error: " << e.what() << "\n";
    return kEstimatorError;
  } catch (const std::exception& e) {
    err << "estimator error: " << e.what() << "\n";
    return kEstimatorError;
  }
}

}  // namespace rareevent::cli
