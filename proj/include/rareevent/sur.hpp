#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rareevent/core.hpp"
#include "rareevent/gp.hpp"

namespace rareevent::sur {

/// P_n(xi(x) > u) = Phi((mean - u) / sd); the indicator of mean > u when sd = 0.
double coverage_g(double mean, double sd, double u);
/// log of coverage_g, accurate in the far tail.
double log_coverage_g(double mean, double sd, double u);

/// min(g, 1 - g).
double misclass_tau(double g);

/// Expected misclassification probability at x after observing f(x_new).
double expected_misclass_after(const gp::GpModel& model, std::span<const double> x,
                               std::span<const double> x_new, double u);

/// Distinct particles with their merged integration weights w / g_{t-1} and scores w tau / g_{t-1}.
struct CandidateSet {
  std::vector<std::size_t> indices;  ///< first occurrence in the particle system
  Vector mean;
  Vector sd;
  Vector weight;
  Vector score;

  std::size_t size() const { return indices.size(); }
};

CandidateSet build_candidates(const ParticleSystem& particles, const Vector& mean,
                              const Vector& var, double u, double variance_floor);

/// Largest scores first (lower index on ties); keeps the shortest prefix carrying a
/// fraction rho of the total score, at most m0_max entries. With all scores zero the
/// single highest-weight candidate is kept.
CandidateSet prune(const CandidateSet& candidates, std::size_t m0_max, double rho);

struct SurConfig {
  std::size_t m0_max = 1000;
  double rho = 0.99;
};

struct Selection {
  std::size_t index = 0;  ///< particle index
  std::vector<double> point;
  double criterion = 0.0;
  std::size_t pruned_size = 0;
};

/// Exhaustive search over the pruned particles for the point minimizing the expected
/// weighted misclassification after one more evaluation. Uses the particle log weights and
/// cached log g_{t-1}.
Selection select_next_point(const gp::GpModel& model, const ParticleSystem& particles, double u_t,
                            const SurConfig& config = {});

}  // namespace rareevent::sur
