#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "rareevent/core.hpp"

namespace rareevent::smc {

/// log w' = log w + log g_new - log g_old, renormalized. Throws EstimatorError when every
/// new weight is zero.
Vector reweight(const Vector& log_weights, const Vector& log_g_new, const Vector& log_g_old);

/// Same, on a particle system; the cached log g becomes `log_g_new`.
ParticleSystem reweight(const ParticleSystem& particles, const Vector& log_g_new,
                        const Vector& log_g_old);

/// Residual resampling: floor(m w_j) copies of j, the remainder drawn multinomially from
/// the residual weights. Returned indices are sorted.
std::vector<std::size_t> residual_resample(const std::vector<double>& weights, RngStream& rng);

/// Rows picked by `indices`, caches carried over, weights reset to uniform.
ParticleSystem select(const ParticleSystem& particles, const std::vector<std::size_t>& indices);

struct RwmhConfig {
  int sweeps = 10;                      ///< S
  double c_init = 0.0;                  ///< 0 means 2 / sqrt(d)
  double delta_sigma = std::log(10.0);
  double a_target = 0.30;
  bool adapt = true;
};

/// Step sizes persist from one stage to the next; the adaptation index restarts at 1 on
/// every call to rwmh_move.
struct RwmhState {
  RwmhConfig config;
  Vector log_sigma;
  long total_sweeps = 0;

  static RwmhState initial(const InputDistribution& input, const RwmhConfig& config = {});
};

/// Evaluates the target at a batch of points: log input density, log g, and an auxiliary
/// value cached alongside (the limit-state value for subset simulation). The log target is
/// log_pdf + log_g; -inf rejects.
using BatchTarget =
    std::function<void(const PointMatrix& pts, Vector& log_pdf, Vector& log_g, Vector& aux)>;

struct MoveDiagnostics {
  std::vector<double> acceptance;  ///< population-average acceptance probability per sweep
};

/// S sweeps of Gaussian random-walk Metropolis with a joint d-dimensional proposal.
MoveDiagnostics rwmh_move(ParticleSystem& particles, const BatchTarget& target, RwmhState& state,
                          RngStream& rng);

}  // namespace rareevent::smc
