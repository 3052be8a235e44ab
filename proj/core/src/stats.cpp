#include "epivar/stats.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "epivar/errors.hpp"

namespace epivar {

namespace {

// P(a,x) by its power series around 0. Converges fast for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Q(a,x) by the Lentz continued fraction. Converges fast for x > a + 1.
double gamma_q_cf(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (a <= 0.0) throw InputError("gamma_p: a must be positive");
  if (x < 0.0) throw InputError("gamma_p: x must be non-negative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double chi2_cdf(int df, double x) {
  if (df < 1) throw InputError("chi2_cdf: df must be >= 1");
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * df, 0.5 * x);
}

double chi2_quantile(int df, double p) {
  if (df < 1) throw InputError("chi2_quantile: df must be >= 1");
  if (!(p > 0.0 && p < 1.0))
    throw InputError("chi2_quantile: p must lie strictly in (0, 1), got " +
                     std::to_string(p));

  // Bracket: CDF is increasing in x; df + 10*sqrt(2 df) + 50 covers p up to
  // 1 - 1e-12 for all df, and doubling handles the rest.
  double lo = 0.0;
  double hi = df + 10.0 * std::sqrt(2.0 * df) + 50.0;
  while (chi2_cdf(df, hi) < p) hi *= 2.0;

  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (chi2_cdf(df, mid) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-13 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace epivar
