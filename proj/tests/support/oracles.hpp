#pragma once

// Independent reference computations for the tests. Nothing here calls into the library's
// numerical code except where a test explicitly compares against it.

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double Phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// log Phi(z) in 50-digit arithmetic, valid deep in the tail where Phi underflows.
inline double log_Phi(double z) {
  using Big = boost::multiprecision::cpp_bin_float_50;
  const Big v = boost::multiprecision::erfc(Big(-z) / boost::multiprecision::sqrt(Big(2))) / 2;
  return static_cast<double>(boost::multiprecision::log(v));
}

/// Normal quantile from Boost, independent of the library's inverse.
inline double Phi_inv(double p) { return boost::math::quantile(boost::math::normal(), p); }

template <class F>
double integrate(F f, double a, double b, double tol = 1e-13, unsigned depth = 20) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, depth, tol, &err);
}

/// Adaptive bisection with an absolute error target per piece, the error being the change
/// from one GK61 panel to two. The relative rule above never settles on pieces where the
/// integrand is ~1e-30, and Boost's own error estimate has a floor near 3e-16 that does not
/// shrink with the piece.
template <class F>
double integrate_abs(F f, double a, double b, double abs_tol) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto panel = [&](double lo, double hi) { return Rule::integrate(f, lo, hi, 0, 0.0); };
  auto recurse = [&](auto&& self, double lo, double hi, double whole) -> double {
    const double mid = 0.5 * (lo + hi);
    const double left = panel(lo, mid);
    const double right = panel(mid, hi);
    const double split = left + right;
    const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(split);
    if (std::abs(split - whole) <= std::max(abs_tol, roundoff) || hi - lo <= 1e-14 * (1.0 + std::abs(lo))) {
      return split;
    }
    return self(self, lo, mid, left) + self(self, mid, hi, right);
  };
  return recurse(recurse, a, b, panel(a, b));
}

/// P(Z1 <= b1, Z2 <= b2) by nested 2-D quadrature of the bivariate normal density, written
/// as phi(x) times the conditional density of Z2 given Z1 = x.
inline double binorm_quadrature(double b1, double b2, double rho) {
  const double s = std::sqrt(1.0 - rho * rho);
  auto outer = [&](double x) {
    const double c = rho * x;
    auto inner = [&](double y) { return phi((y - c) / s) / s; };
    // Integrate the conditional density over (-inf, b2]; the bulk is within 12 s of c.
    const double lo = std::min(b2, c - 12.0 * s);
    const double hi = std::min(b2, c + 12.0 * s);
    const double mass = lo < hi ? integrate_abs(inner, lo, hi, 1e-16) : 0.0;
    return phi(x) * mass;
  };
  const double lo = std::min(b1, -12.0);
  if (!(lo < b1)) return 0.0;
  return integrate_abs(outer, lo, b1, 1e-14);
}

/// Kolmogorov-Smirnov statistic of a sample against a CDF.
template <class Cdf>
double ks_statistic(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

/// Asymptotic Kolmogorov p-value, P(sqrt(n) D > t).
inline double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double t = (sn + 0.12 + 0.11 / sn) * d;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * t * t);
    sum += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

/// Pearson chi-squared p-value for observed counts against expected counts.
inline double chi2_pvalue(const std::vector<double>& observed, const std::vector<double>& expected) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double dlt = observed[i] - expected[i];
    stat += dlt * dlt / expected[i];
  }
  const boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace oracle
