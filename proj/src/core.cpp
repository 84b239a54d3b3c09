#include "rareevent/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "rareevent/stats.hpp"

namespace rareevent {

NormalMarginal::NormalMarginal(double mean, double sd) : mean_(mean), sd_(sd) {
  if (!std::isfinite(mean) || !std::isfinite(sd) || !(sd > 0.0)) {
    throw ConfigError("normal marginal needs a finite mean and sd > 0");
  }
}

double NormalMarginal::log_pdf(double x) const {
  const double z = (x - mean_) / sd_;
  return -0.5 * z * z - std::log(sd_) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double NormalMarginal::cdf(double x) const { return stats::norm_cdf((x - mean_) / sd_); }

double NormalMarginal::quantile(double p) const { return mean_ + sd_ * stats::norm_quantile(p); }

InputDistribution::InputDistribution(std::vector<NormalMarginal> marginals)
    : marginals_(std::move(marginals)) {}

InputDistribution InputDistribution::standard_normal(std::size_t dim) {
  return InputDistribution(std::vector<NormalMarginal>(dim, NormalMarginal(0.0, 1.0)));
}

double InputDistribution::log_density(std::span<const double> x) const {
  if (x.size() != marginals_.size()) throw std::invalid_argument("log_density: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw std::domain_error("log_density: non-finite coordinate");
    acc += marginals_[i].log_pdf(x[i]);
  }
  return acc;
}

PointMatrix sample_input(const InputDistribution& input, std::size_t m, RngStream& rng) {
  if (m == 0) throw std::invalid_argument("sample_input: m must be >= 1");
  const auto d = static_cast<Eigen::Index>(input.dim());
  PointMatrix out(static_cast<Eigen::Index>(m), d);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index k = 0; k < d; ++k) out(i, k) = input.marginal(k).sample(rng);
  }
  return out;
}

Problem normalize_direction(const Problem& problem) {
  if (problem.direction == Direction::Above) return problem;
  Problem out = problem;
  out.limit_state = [f = problem.limit_state](std::span<const double> x) { return -f(x); };
  out.threshold = -problem.threshold;
  out.direction = Direction::Above;
  return out;
}

void validate(const Problem& problem) {
  if (problem.dim() == 0) throw ConfigError("problem has no input dimension");
  if (!std::isfinite(problem.threshold)) throw ConfigError("problem threshold must be finite");
  if (!problem.limit_state) throw ConfigError("problem has no limit-state function");
}

ParticleSystem ParticleSystem::from_points(PointMatrix pts, const InputDistribution& input) {
  ParticleSystem ps;
  const Eigen::Index m = pts.rows();
  ps.points = std::move(pts);
  ps.log_weights = Vector::Constant(m, -std::log(static_cast<double>(m)));
  ps.cached_log_g = Vector::Zero(m);
  ps.cached_log_pdf.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    ps.cached_log_pdf[i] = input.log_density(row_span(ps.points, i));
  }
  ps.aux = Vector::Zero(m);
  return ps;
}

std::vector<double> ParticleSystem::weights() const {
  std::vector<double> w(size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[static_cast<Eigen::Index>(i)]);
  return w;
}

double log_sum_exp(const Vector& v) {
  if (v.size() == 0) return -std::numeric_limits<double>::infinity();
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

std::string to_string(Origin origin) {
  switch (origin) {
    case Origin::InitialDesign:
      return "initial-design";
    case Origin::Sur:
      return "sur";
    case Origin::SmcBaseline:
      return "smc-baseline";
  }
  return "unknown";
}

double EvaluationLedger::evaluate(const LimitState& f, std::span<const double> x, int stage,
                                  Origin origin) {
  const double value = f(x);
  bump(stage, 1);
  if (keep_records_) records_.push_back({std::vector<double>(x.begin(), x.end()), value, stage, origin});
  return value;
}

void EvaluationLedger::note_calls(int stage, Origin /*origin*/, std::size_t count) { bump(stage, count); }

std::size_t EvaluationLedger::stage_count(int stage) const {
  if (stage < 0 || static_cast<std::size_t>(stage) >= per_stage_.size()) return 0;
  return per_stage_[static_cast<std::size_t>(stage)];
}

void EvaluationLedger::bump(int stage, std::size_t count) {
  if (stage < 0) throw std::invalid_argument("ledger: negative stage");
  if (static_cast<std::size_t>(stage) >= per_stage_.size()) per_stage_.resize(stage + 1, 0);
  per_stage_[static_cast<std::size_t>(stage)] += count;
  total_ += count;
}

}  // namespace rareevent
