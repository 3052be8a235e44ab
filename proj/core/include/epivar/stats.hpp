#pragma once

namespace epivar {

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
/// Series expansion for x < a + 1, continued fraction otherwise.
double gamma_p(double a, double x);

/// Chi-squared CDF with df degrees of freedom, evaluated at x.
double chi2_cdf(int df, double x);

/// Quantile of the chi-squared distribution: the x with chi2_cdf(df, x) = p
/// to absolute CDF error <= 1e-10 (bracketing bisection, no table lookup).
/// Throws InputError unless 0 < p < 1 and df >= 1.
double chi2_quantile(int df, double p);

}  // namespace epivar
