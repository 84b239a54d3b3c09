#pragma once

#include <cstddef>

#include "rareevent/core.hpp"

namespace rareevent::design {

struct TruncatedBox {
  Vector lower;
  Vector upper;
  std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }
};

/// Per-dimension [q_eps, q_{1-eps}] from the exact marginal quantiles. Requires 0 < eps < 0.5.
TruncatedBox truncated_box(const InputDistribution& input, double epsilon);

/// One Latin hypercube on [0,1]^dim with points at bin centers; each column is an
/// independent random permutation of the n0 bins.
PointMatrix lhs_unit_candidate(std::size_t n0, std::size_t dim, RngStream& rng);

/// Smallest Euclidean distance between two rows (+inf for fewer than two rows).
double min_pairwise_distance(const PointMatrix& pts);

/// Best of q random LHS designs by the maximin criterion (first one wins ties), mapped
/// affinely onto the box. Candidate i is drawn from rng.substream(i).
PointMatrix maximin_lhs(std::size_t n0, const TruncatedBox& box, std::size_t q, const RngStream& rng);

}  // namespace rareevent::design
