#pragma once

namespace rareevent::stats {

/// Standard normal CDF. Throws std::domain_error on NaN.
double norm_cdf(double z);

double norm_pdf(double z);

/// log Phi(z), accurate far into the lower tail (no underflow to -inf before z ~ -1e154).
double log_norm_cdf(double z);

/// Inverse of norm_cdf on (0, 1); returns -inf / +inf at 0 / 1.
double norm_quantile(double p);

struct BivariateArgs {
  double b1;
  double b2;
  double corr;
};

/// P(Z1 <= b1, Z2 <= b2) for standard normals with correlation corr.
/// |corr| may exceed 1 by at most 1e-12 (clamped); beyond that std::domain_error.
double binorm_cdf(const BivariateArgs& args);
inline double binorm_cdf(double b1, double b2, double corr) { return binorm_cdf({b1, b2, corr}); }

}  // namespace rareevent::stats
