#include "rareevent/stats.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace rareevent::stats {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInvSqrt2 = 0.70710678118654752440;

// Phi without the NaN check, for internal use on already validated arguments.
inline double phi(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

// Gauss-Legendre half-rules (nodes on (0,1], weights) for 6, 12 and 20 points.
constexpr std::array<double, 3> kW6 = {0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
constexpr std::array<double, 3> kX6 = {0.9324695142031522, 0.6612093864662647, 0.2386191860831970};
constexpr std::array<double, 6> kW12 = {0.04717533638651177, 0.1069393259953183,
                                        0.1600783285433464,  0.2031674267230659,
                                        0.2334925365383547,  0.2491470458134029};
constexpr std::array<double, 6> kX12 = {0.9815606342467191, 0.9041172563704750,
                                        0.7699026741943050, 0.5873179542866171,
                                        0.3678314989981802, 0.1252334085114692};
constexpr std::array<double, 10> kW20 = {0.01761400713915212, 0.04060142980038694,
                                         0.06267204833410906, 0.08327674157670475,
                                         0.1019301198172404,  0.1181945319615184,
                                         0.1316886384491766,  0.1420961093183821,
                                         0.1491729864726037,  0.1527533871307259};
constexpr std::array<double, 10> kX20 = {0.9931285991850949, 0.9639719272779138,
                                         0.9122344282513259, 0.8391169718222188,
                                         0.7463319064601508, 0.6360536807265150,
                                         0.5108670019508271, 0.3737060887154196,
                                         0.2277858511416451, 0.07652652113349733};

// Upper orthant probability P(X > dh, Y > dk), Drezner-Wesolowsky quadrature
// over the correlation with Genz's refinements for |r| close to one.
template <std::size_t N>
double bvnu_rule(double dh, double dk, double r, const std::array<double, N>& w,
                 const std::array<double, N>& x) {
  double h = dh;
  double k = dk;
  double hk = h * k;
  double bvn = 0.0;

  if (std::abs(r) < 0.925) {
    const double hs = 0.5 * (h * h + k * k);
    const double asr = 0.5 * std::asin(r);
    for (std::size_t i = 0; i < N; ++i) {
      for (double node : {1.0 - x[i], 1.0 + x[i]}) {
        const double sn = std::sin(asr * node);
        bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    return bvn * asr / kTwoPi + phi(-h) * phi(-k);
  }

  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = 1.0 - r * r;
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 80.0;
    double asr = -0.5 * (bs / as + hk);
    if (asr > -100.0) {
      bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
    }
    if (hk > -100.0) {
      const double b = std::sqrt(bs);
      const double sp = std::sqrt(kTwoPi) * phi(-b / a);
      bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
    }
    a *= 0.5;
    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      for (double node : {1.0 - x[i], 1.0 + x[i]}) {
        const double xs = (a * node) * (a * node);
        asr = -0.5 * (bs / xs + hk);
        if (asr > -100.0) {
          const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
          const double rs = std::sqrt(1.0 - xs);
          const double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
          sum += w[i] * std::exp(asr) * (sp - ep);
        }
      }
    }
    bvn = (a * sum - bvn) / kTwoPi;
  }

  if (r > 0.0) return bvn + phi(-std::max(h, k));
  if (h >= k) return -bvn;
  const double l = h < 0.0 ? phi(k) - phi(h) : phi(-h) - phi(-k);
  return l - bvn;
}

double bvnu(double dh, double dk, double r) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (dh == inf || dk == inf) return 0.0;
  if (dh == -inf) return dk == -inf ? 1.0 : phi(-dk);
  if (dk == -inf) return phi(-dh);
  if (r == 0.0) return phi(-dh) * phi(-dk);

  double p;
  const double ar = std::abs(r);
  if (ar < 0.3) {
    p = bvnu_rule(dh, dk, r, kW6, kX6);
  } else if (ar < 0.75) {
    p = bvnu_rule(dh, dk, r, kW12, kX12);
  } else {
    p = bvnu_rule(dh, dk, r, kW20, kX20);
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace

double norm_cdf(double z) {
  if (std::isnan(z)) throw std::domain_error("norm_cdf: NaN argument");
  return phi(z);
}

double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(kTwoPi); }

double log_norm_cdf(double z) {
  if (std::isnan(z)) throw std::domain_error("log_norm_cdf: NaN argument");
  if (z > 5.0) return std::log1p(-phi(-z));
  if (z > -30.0) return std::log(phi(z));
  if (z == -std::numeric_limits<double>::infinity()) return z;
  // Asymptotic series of the Mills ratio.
  const double z2 = z * z;
  const double iz2 = 1.0 / z2;
  const double series = 1.0 - iz2 * (1.0 - 3.0 * iz2 * (1.0 - 5.0 * iz2 * (1.0 - 7.0 * iz2)));
  return -0.5 * z2 - std::log(-z) - 0.5 * std::log(kTwoPi) + std::log(series);
}

double norm_quantile(double p) {
  if (std::isnan(p) || p < 0.0 || p > 1.0) {
    throw std::domain_error("norm_quantile: probability outside [0, 1]");
  }
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double binorm_cdf(const BivariateArgs& args) {
  if (std::isnan(args.b1) || std::isnan(args.b2) || std::isnan(args.corr)) {
    throw std::domain_error("binorm_cdf: NaN argument");
  }
  double r = args.corr;
  if (std::abs(r) > 1.0) {
    if (std::abs(r) - 1.0 > 1e-12) throw std::domain_error("binorm_cdf: |corr| > 1");
    r = std::copysign(1.0, r);
  }
  return bvnu(-args.b1, -args.b2, r);
}

}  // namespace rareevent::stats
