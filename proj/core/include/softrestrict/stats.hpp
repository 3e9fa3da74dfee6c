#pragma once

namespace softrestrict {

/// Inverse standard normal CDF. Rational approximation (Acklam) refined by
/// one Halley step against erfc; absolute error below 1e-13 on (0,1).
double norm_ppf(double p);

/// Standard normal CDF.
double norm_cdf(double x);

/// Regularized lower incomplete gamma P(a,x), a > 0, x >= 0.
/// Series expansion for x < a+1, Lentz continued fraction otherwise.
double regularized_gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a,x) = 1 - P(a,x).
double regularized_gamma_q(double a, double x);

/// Chi-square CDF / survival function with df degrees of freedom.
double chi2_cdf(double x, double df);
double chi2_sf(double x, double df);

} // namespace softrestrict
