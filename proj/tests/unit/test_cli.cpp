#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "../support/oracles.hpp"
#include "rareevent/cli.hpp"
#include "rareevent/expression.hpp"
#include "rareevent/io.hpp"
#include "rareevent/problem_file.hpp"

using namespace rareevent;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rareevent_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string l;
  while (std::getline(ss, l)) out.push_back(l);
  return out;
}

}  // namespace

TEST(Cli, EstimateManifestFields) {
  const auto r = invoke({"estimate", "--method", "bss", "--problem", "four-branch", "--m", "1000", "--seed", "42"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  for (const char* key : {"alpha_hat", "delta_hat", "n_total", "stages", "schema", "config", "seed", "host",
                          "ledger", "ok", "error", "log_g_floor_hits", "timestamps", "tool", "tool_version"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_TRUE(j["stages"].is_array());
  EXPECT_GT(j["stages"].size(), 1u);
  EXPECT_EQ(j["schema"], 1);
  EXPECT_EQ(j["config"]["seed"], 42);
}

TEST(Cli, DeterministicExceptTimestamps) {
  const std::vector<std::string> args = {"estimate", "--method", "bss", "--problem", "cantilever", "--m", "500", "--seed", "3"};
  const auto a = invoke(args);
  const auto b = invoke(args);
  ASSERT_EQ(a.code, 0);
  json ja = json::parse(a.out);
  json jb = json::parse(b.out);
  ja.erase("timestamps");
  jb.erase("timestamps");
  EXPECT_EQ(ja.dump(), jb.dump());
  // Byte-level: only lines inside the timestamps block differ.
  const auto la = lines(a.out);
  const auto lb = lines(b.out);
  ASSERT_EQ(la.size(), lb.size());
  for (std::size_t i = 0; i < la.size(); ++i) {
    if (la[i] != lb[i]) {
      EXPECT_TRUE(la[i].find("\"started\"") != std::string::npos || la[i].find("\"finished\"") != std::string::npos ||
                  la[i].find("\"wall_ms\"") != std::string::npos)
          << la[i];
    }
  }
}

TEST(Cli, ConfigErrors) {
  EXPECT_EQ(invoke({"estimate", "--problem", "cantilever", "--p0", "1.5"}).code, 2);
  EXPECT_EQ(invoke({"estimate", "--problem", "cantilever", "--bogus"}).code, 2);
  EXPECT_EQ(invoke({"estimate", "--problem", "nope"}).code, 2);
  EXPECT_EQ(invoke({"estimate", "--problem", "cantilever", "--method", "xyz"}).code, 2);
  EXPECT_EQ(invoke({"estimate"}).code, 2);
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"benchmark", "--methods", "bss"}).code, 2);
  EXPECT_EQ(invoke({"estimate", "--problem", "file:/nonexistent/problem.json"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, EstimatorFailureExitCode) {
  const auto r = invoke({"estimate", "--method", "bss", "--problem", "four-branch", "--m", "500", "--max-evals", "12"});
  EXPECT_EQ(r.code, 3);
  const json j = json::parse(r.out);
  EXPECT_FALSE(j["ok"].get<bool>());
}

TEST(Cli, ReplayReproducesEstimate) {
  const fs::path dir = temp_dir("replay");
  const std::string manifest = (dir / "m.json").string();
  const auto a = invoke({"estimate", "--method", "ss", "--problem", "oscillator", "--m", "1000", "--seed", "9", "--out", manifest});
  ASSERT_EQ(a.code, 0);
  const auto b = invoke({"estimate", "--replay", manifest});
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(json::parse(a.out)["alpha_hat"].get<double>(), json::parse(b.out)["alpha_hat"].get<double>());
  EXPECT_EQ(slurp(manifest).size(), a.out.size());
}

TEST(Cli, TraceAndDesignFiles) {
  const fs::path dir = temp_dir("trace");
  const auto r = invoke({"estimate", "--problem", "cantilever", "--m", "500", "--trace", (dir / "t.csv").string(),
                      "--design", (dir / "d.csv").string()});
  ASSERT_EQ(r.code, 0);
  const auto t = lines(slurp(dir / "t.csv"));
  EXPECT_EQ(t.front(), "n,x1,x2,criterion,u_t,stage");
  const auto d = lines(slurp(dir / "d.csv"));
  EXPECT_EQ(d.front(), "x1,x2,f");
  const json j = json::parse(r.out);
  EXPECT_EQ(d.size(), j["n_total"].get<std::size_t>() + 1);
  EXPECT_EQ(t.size(), j["n_total"].get<std::size_t>() - j["ledger"]["n_initial"].get<std::size_t>() + 1);
}

TEST(Cli, ProblemFileAndReplayWithoutFile) {
  const fs::path dir = temp_dir("problem");
  const fs::path pf = dir / "tail.json";
  std::ofstream(pf) << R"({"name": "tail", "marginals": [{"normal": {"mean": 0, "sd": 1}}],
                         "threshold": 2.5, "direction": "above", "limit_state": "x1"})";
  const std::string manifest = (dir / "m.json").string();
  const auto a = invoke({"estimate", "--method", "mc", "--problem", "file:" + pf.string(), "--m", "200000", "--out", manifest});
  ASSERT_EQ(a.code, 0) << a.err;
  const double alpha = json::parse(a.out)["alpha_hat"].get<double>();
  const double ref = oracle::Phi(-2.5);
  EXPECT_NEAR(alpha, ref, 4 * std::sqrt(ref / 2e5));
  EXPECT_TRUE(json::parse(a.out)["config"].contains("problem_definition"));
  fs::remove(pf);
  const auto b = invoke({"estimate", "--replay", manifest});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(json::parse(b.out)["alpha_hat"].get<double>(), alpha);
}

TEST(Cli, BenchmarkRowsAndJobs) {
  const fs::path d1 = temp_dir("bench1");
  const fs::path d4 = temp_dir("bench4");
  const auto a = invoke({"benchmark", "--case", "cantilever", "--methods", "bss", "--m-list", "500,1000", "--runs", "5",
                      "--out-dir", d1.string(), "--jobs", "1"});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto rows = lines(a.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].substr(0, 18), "bss,cantilever,500");
  EXPECT_TRUE(fs::exists(d1 / "rmse.csv"));
  EXPECT_TRUE(fs::exists(d1 / "runs.csv"));
  EXPECT_EQ(std::distance(fs::directory_iterator(d1 / "manifests"), fs::directory_iterator{}), 10);
  const auto b = invoke({"benchmark", "--case", "cantilever", "--methods", "bss", "--m-list", "500,1000", "--runs", "5",
                      "--out-dir", d4.string(), "--jobs", "4"});
  ASSERT_EQ(b.code, 0);
  const auto rb = lines(b.out);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    // Everything except the trailing wall-clock column.
    EXPECT_EQ(rows[i].substr(0, rows[i].rfind(',')), rb[i].substr(0, rb[i].rfind(',')));
  }
}

TEST(Io, NumbersRoundTrip) {
  RngStream rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::ldexp(rng.uniform() - 0.5, static_cast<int>(rng.below(200)) - 100);
    EXPECT_EQ(std::stod(io::num(v)), v);
  }
  EXPECT_EQ(std::stod(io::num(5.596e-9)), 5.596e-9);
  EXPECT_EQ(io::csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(io::csv_field("plain"), "plain");
}

TEST(Io, DesignCsvRoundTrip) {
  PointMatrix x(3, 2);
  x << 0.1, -2.5, 1e-300, 7.0, 3.3333333333333335, 4;
  Vector f(3);
  f << 1.0 / 3.0, -0.0, 1e10;
  std::stringstream ss;
  io::write_design_csv(ss, x, f);
  const auto [x2, f2] = io::read_design_csv(ss);
  EXPECT_EQ(x, x2);
  EXPECT_EQ(f, f2);
  std::stringstream bad("x1,f\n1,2,3\n");
  EXPECT_THROW(io::read_design_csv(bad), ConfigError);
}

TEST(Expression, Arithmetic) {
  const double x[3] = {2.0, -1.0, 0.5};
  auto ev = [&](const std::string& s) { return Expression::parse(s, 3).evaluate(x); };
  EXPECT_EQ(ev("1 + 2 * 3"), 7.0);
  EXPECT_EQ(ev("(1 + 2) * 3"), 9.0);
  EXPECT_EQ(ev("2 ^ 3 ^ 2"), 512.0);
  EXPECT_EQ(ev("-x1 ^ 2"), -4.0);
  EXPECT_EQ(ev("x1 - x2 - x3"), 2.5);
  EXPECT_EQ(ev("x1 / x3 / 2"), 2.0);
  EXPECT_EQ(ev("min(x1, x2, x3)"), -1.0);
  EXPECT_EQ(ev("max(x1, 3)"), 3.0);
  EXPECT_EQ(ev("abs(x2)"), 1.0);
  EXPECT_NEAR(ev("sin(pi / 2) + cos(0) + sqrt(4) + exp(0) + log(1)"), 5.0, 1e-15);
  EXPECT_EQ(ev("1.5e2"), 150.0);
}

TEST(Expression, Errors) {
  EXPECT_THROW(Expression::parse("x4", 3), ConfigError);
  EXPECT_THROW(Expression::parse("x0", 3), ConfigError);
  EXPECT_THROW(Expression::parse("1 +", 3), ConfigError);
  EXPECT_THROW(Expression::parse("(1", 3), ConfigError);
  EXPECT_THROW(Expression::parse("foo(1)", 3), ConfigError);
  EXPECT_THROW(Expression::parse("min(1)", 3), ConfigError);
  EXPECT_THROW(Expression::parse("sin(1, 2)", 3), ConfigError);
  EXPECT_THROW(Expression::parse("1 2", 3), ConfigError);
}

TEST(ProblemFile, ParsesAndValidates) {
  const Problem p = parse_problem_json(R"({"name": "beam", "marginals": [{"normal": {"mean": 1, "sd": 2}},
      {"normal": {"mean": 0, "sd": 1}}], "threshold": -4, "direction": "below", "limit_state": "x1 * x2"})");
  EXPECT_EQ(p.name, "beam");
  EXPECT_EQ(p.dim(), 2u);
  EXPECT_EQ(p.threshold, -4.0);
  EXPECT_EQ(p.direction, Direction::Below);
  EXPECT_EQ(p.input.marginal(0).sd(), 2.0);
  const double x[2] = {3.0, -2.0};
  EXPECT_EQ(p.limit_state(x), -6.0);
  EXPECT_THROW(parse_problem_json("{"), ConfigError);
  EXPECT_THROW(parse_problem_json(R"({"marginals": [], "threshold": 1, "direction": "above", "limit_state": "1"})"),
               ConfigError);
  EXPECT_THROW(parse_problem_json(R"({"marginals": [{"normal": {"mean": 0, "sd": 1}}], "threshold": 1,
      "direction": "sideways", "limit_state": "x1"})"),
               ConfigError);
  EXPECT_THROW(parse_problem_json(R"({"marginals": [{"normal": {"mean": 0, "sd": -1}}], "threshold": 1,
      "direction": "above", "limit_state": "x1"})"),
               ConfigError);
}
