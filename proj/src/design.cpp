#include "rareevent/design.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "rareevent/kernels.hpp"

namespace rareevent::design {

TruncatedBox truncated_box(const InputDistribution& input, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ConfigError("truncated_box: epsilon must lie in (0, 0.5)");
  const auto d = static_cast<Eigen::Index>(input.dim());
  TruncatedBox box{Vector(d), Vector(d)};
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& marginal = input.marginal(static_cast<std::size_t>(i));
    box.lower[i] = marginal.quantile(epsilon);
    box.upper[i] = marginal.quantile(1.0 - epsilon);
  }
  return box;
}

PointMatrix lhs_unit_candidate(std::size_t n0, std::size_t dim, RngStream& rng) {
  const auto n = static_cast<Eigen::Index>(n0);
  PointMatrix out(n, static_cast<Eigen::Index>(dim));
  std::vector<std::size_t> perm(n0);
  for (std::size_t k = 0; k < dim; ++k) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    // Fisher-Yates with our own draws so the permutation does not depend on the library.
    for (std::size_t i = n0; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (std::size_t i = 0; i < n0; ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          (static_cast<double>(perm[i]) + 0.5) / static_cast<double>(n0);
    }
  }
  return out;
}

double min_pairwise_distance(const PointMatrix& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 1; i < pts.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) best = std::min(best, (pts.row(i) - pts.row(j)).squaredNorm());
  }
  return std::sqrt(best);
}

PointMatrix maximin_lhs(std::size_t n0, const TruncatedBox& box, std::size_t q, const RngStream& rng) {
  if (n0 < 2) throw ConfigError("maximin_lhs: n0 must be >= 2");
  if (q < 1) throw ConfigError("maximin_lhs: Q must be >= 1");
  const std::size_t d = box.dim();
  Vector scores;
  kernels::lhs_scores(n0, d, q, rng, scores);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  RngStream chosen = rng.substream(static_cast<std::uint64_t>(best));
  PointMatrix unit = lhs_unit_candidate(n0, d, chosen);
  for (Eigen::Index k = 0; k < unit.cols(); ++k) {
    const double width = box.upper[k] - box.lower[k];
    for (Eigen::Index i = 0; i < unit.rows(); ++i) unit(i, k) = box.lower[k] + width * unit(i, k);
  }
  return unit;
}

}  // namespace rareevent::design
