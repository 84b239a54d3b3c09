#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rareevent/rng.hpp"

namespace rareevent {

/// Points are stored one per row so that a row can be handed out as a contiguous span.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline std::span<const double> row_span(const PointMatrix& pts, Eigen::Index i) {
  return {pts.data() + i * pts.cols(), static_cast<std::size_t>(pts.cols())};
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration or arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An estimator could not complete (degenerate stage, stuck kernel, caps exceeded).
class EstimatorError : public Error {
 public:
  using Error::Error;
};

/// The limit-state function. Must be pure: it may be called concurrently.
using LimitState = std::function<double(std::span<const double>)>;

class NormalMarginal {
 public:
  NormalMarginal(double mean, double sd);

  double mean() const { return mean_; }
  double sd() const { return sd_; }
  double log_pdf(double x) const;
  double cdf(double x) const;
  double quantile(double p) const;
  double sample(RngStream& rng) const { return mean_ + sd_ * rng.normal(); }

 private:
  double mean_;
  double sd_;
};

/// Product of independent scalar marginals.
class InputDistribution {
 public:
  InputDistribution() = default;
  explicit InputDistribution(std::vector<NormalMarginal> marginals);

  /// d i.i.d. standard normal marginals.
  static InputDistribution standard_normal(std::size_t dim);

  std::size_t dim() const { return marginals_.size(); }
  const NormalMarginal& marginal(std::size_t i) const { return marginals_.at(i); }
  const std::vector<NormalMarginal>& marginals() const { return marginals_; }

  /// Sum of the marginal log-densities. Throws std::domain_error on non-finite input.
  double log_density(std::span<const double> x) const;

 private:
  std::vector<NormalMarginal> marginals_;
};

/// m rows drawn i.i.d. from the input distribution, row by row.
PointMatrix sample_input(const InputDistribution& input, std::size_t m, RngStream& rng);

enum class Direction { Above, Below };

/// Failure is f(x) > threshold (Above) or f(x) < threshold (Below).
struct Problem {
  std::string name;
  LimitState limit_state;
  InputDistribution input;
  double threshold = 0.0;
  Direction direction = Direction::Above;

  std::size_t dim() const { return input.dim(); }
  bool is_failure(double value) const {
    return direction == Direction::Above ? value > threshold : value < threshold;
  }
};

/// Returns the equivalent Above problem. Below problems get f' = -f and u' = -u.
Problem normalize_direction(const Problem& problem);

/// Throws ConfigError when the problem is malformed (no dimension, non-finite threshold).
void validate(const Problem& problem);

struct ParticleSystem {
  PointMatrix points;
  Vector log_weights;
  int stage = 0;
  Vector cached_log_g;    ///< log g_t at each particle
  Vector cached_log_pdf;  ///< log input density at each particle
  Vector aux;             ///< per-particle auxiliary value (the limit-state value for subset simulation)

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }

  /// Uniform weights, g = 1, cached log-densities computed from `input`.
  static ParticleSystem from_points(PointMatrix pts, const InputDistribution& input);
  std::vector<double> weights() const;
};

/// log(sum(exp(v))), stable; returns -inf for an all -inf input.
double log_sum_exp(const Vector& v);

enum class Origin { InitialDesign, Sur, SmcBaseline };
std::string to_string(Origin origin);

struct EvaluationRecord {
  std::vector<double> point;
  double value;
  int stage;
  Origin origin;
};

/// Counts every call to the limit-state function, per stage.
class EvaluationLedger {
 public:
  explicit EvaluationLedger(bool keep_records = true) : keep_records_(keep_records) {}

  double evaluate(const LimitState& f, std::span<const double> x, int stage, Origin origin);

  /// Accounts for `count` calls made elsewhere (batched or parallel evaluation).
  void note_calls(int stage, Origin origin, std::size_t count);

  std::size_t initial_count() const { return stage_count(0); }
  std::size_t stage_count(int stage) const;
  std::size_t total() const { return total_; }
  std::size_t num_stages() const { return per_stage_.size(); }
  const std::vector<EvaluationRecord>& records() const { return records_; }

 private:
  void bump(int stage, std::size_t count);

  bool keep_records_;
  std::vector<std::size_t> per_stage_;
  std::size_t total_ = 0;
  std::vector<EvaluationRecord> records_;
};

}  // namespace rareevent
