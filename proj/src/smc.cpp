#include "rareevent/smc.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace rareevent::smc {

Vector reweight(const Vector& log_weights, const Vector& log_g_new, const Vector& log_g_old) {
  if (log_weights.size() != log_g_new.size() || log_weights.size() != log_g_old.size()) {
    throw std::invalid_argument("reweight: size mismatch");
  }
  Vector out(log_weights.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (!std::isfinite(log_g_old[i])) throw std::invalid_argument("reweight: log g_old must be finite");
    out[i] = log_g_new[i] == -std::numeric_limits<double>::infinity()
                 ? log_g_new[i]
                 : log_weights[i] + log_g_new[i] - log_g_old[i];
  }
  const double total = log_sum_exp(out);
  if (!std::isfinite(total)) throw EstimatorError("reweight: all weights vanished");
  out.array() -= total;
  return out;
}

ParticleSystem reweight(const ParticleSystem& particles, const Vector& log_g_new,
                        const Vector& log_g_old) {
  ParticleSystem out = particles;
  out.log_weights = reweight(particles.log_weights, log_g_new, log_g_old);
  out.cached_log_g = log_g_new;
  return out;
}

std::vector<std::size_t> residual_resample(const std::vector<double>& weights, RngStream& rng) {
  const std::size_t m = weights.size();
  if (m == 0) throw std::invalid_argument("residual_resample: empty weights");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("residual_resample: weights sum to zero");

  std::vector<std::size_t> out;
  out.reserve(m);
  std::vector<double> residual(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double expected = static_cast<double>(m) * weights[j] / total;
    const auto copies = static_cast<std::size_t>(std::floor(expected));
    out.insert(out.end(), copies, j);
    residual[j] = expected - static_cast<double>(copies);
  }
  // Rounding can leave the deterministic part one short or over; trim to m.
  if (out.size() > m) out.resize(m);
  const std::size_t rest = m - out.size();
  if (rest > 0) {
    std::vector<double> cumulative(m);
    std::partial_sum(residual.begin(), residual.end(), cumulative.begin());
    const double mass = cumulative.back();
    for (std::size_t r = 0; r < rest; ++r) {
      const double u = rng.uniform() * mass;
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      std::size_t j = it == cumulative.end() ? m - 1 : static_cast<std::size_t>(it - cumulative.begin());
      while (residual[j] <= 0.0 && j > 0) --j;
      out.push_back(j);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ParticleSystem select(const ParticleSystem& particles, const std::vector<std::size_t>& indices) {
  ParticleSystem out;
  const auto m = static_cast<Eigen::Index>(indices.size());
  out.points.resize(m, particles.points.cols());
  out.cached_log_g.resize(m);
  out.cached_log_pdf.resize(m);
  out.aux.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto j = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(i)]);
    out.points.row(i) = particles.points.row(j);
    out.cached_log_g[i] = particles.cached_log_g[j];
    out.cached_log_pdf[i] = particles.cached_log_pdf[j];
    out.aux[i] = particles.aux[j];
  }
  out.log_weights = Vector::Constant(m, -std::log(static_cast<double>(m)));
  out.stage = particles.stage;
  return out;
}

RwmhState RwmhState::initial(const InputDistribution& input, const RwmhConfig& config) {
  if (config.sweeps < 1) throw ConfigError("rwmh: sweeps must be >= 1");
  const auto d = static_cast<Eigen::Index>(input.dim());
  const double c = config.c_init > 0.0 ? config.c_init : 2.0 / std::sqrt(static_cast<double>(d));
  RwmhState s;
  s.config = config;
  s.log_sigma.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    s.log_sigma[k] = std::log(c * input.marginal(static_cast<std::size_t>(k)).sd());
  }
  return s;
}

MoveDiagnostics rwmh_move(ParticleSystem& particles, const BatchTarget& target, RwmhState& state,
                          RngStream& rng) {
  const Eigen::Index m = particles.points.rows();
  const Eigen::Index d = particles.points.cols();
  if (state.log_sigma.size() != d) throw std::invalid_argument("rwmh_move: state dimension mismatch");
  MoveDiagnostics diag;
  PointMatrix proposal(m, d);
  Vector lp;
  Vector lg;
  Vector aux;
  for (int s = 1; s <= state.config.sweeps; ++s) {
    const Vector sigma = state.log_sigma.array().exp().matrix();
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) proposal(i, k) = particles.points(i, k) + sigma[k] * rng.normal();
    }
    target(proposal, lp, lg, aux);
    double acc_sum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double u = rng.uniform();
      const double next = lp[i] + lg[i];
      double log_a = -std::numeric_limits<double>::infinity();
      if (std::isfinite(next)) {
        log_a = std::min(0.0, next - (particles.cached_log_pdf[i] + particles.cached_log_g[i]));
      }
      acc_sum += std::exp(log_a);
      if (std::log(u) <= log_a) {
        particles.points.row(i) = proposal.row(i);
        particles.cached_log_pdf[i] = lp[i];
        particles.cached_log_g[i] = lg[i];
        particles.aux[i] = aux[i];
      }
    }
    const double a_bar = acc_sum / static_cast<double>(m);
    diag.acceptance.push_back(a_bar);
    ++state.total_sweeps;
    if (state.config.adapt) {
      const double step = state.config.delta_sigma / static_cast<double>(s);
      state.log_sigma.array() += a_bar > state.config.a_target ? step : -step;
    }
  }
  return diag;
}

}  // namespace rareevent::smc
