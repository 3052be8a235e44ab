#include <cmath>

#include "doctest.h"
#include "epivar/errors.hpp"
#include "epivar/stats.hpp"

using epivar::chi2_cdf;
using epivar::chi2_quantile;

TEST_CASE("chi2 quantile reference values") {
  // df = 2 has the closed form -2 ln(1 - p).
  CHECK(chi2_quantile(2, 0.95) ==
        doctest::Approx(-2.0 * std::log(0.05)).epsilon(1e-10));
  CHECK(chi2_quantile(2, 0.95) == doctest::Approx(5.991465).epsilon(1e-6));
  CHECK(chi2_quantile(4, 0.975) == doctest::Approx(11.143287).epsilon(1e-6));
  CHECK(chi2_quantile(4, 0.025) == doctest::Approx(0.484419).epsilon(1e-5));
  CHECK(chi2_quantile(1, 0.5) == doctest::Approx(0.4549364).epsilon(1e-6));
}

TEST_CASE("quantile/cdf round trip to 1e-8") {
  for (int df : {1, 2, 3, 5, 10, 20, 35, 50}) {
    for (double p : {0.005, 0.025, 0.5, 0.975, 0.995}) {
      const double x = chi2_quantile(df, p);
      CHECK(std::abs(chi2_cdf(df, x) - p) <= 1e-8);
    }
  }
}

TEST_CASE("quantile is strictly increasing in p") {
  for (int df : {1, 4, 17}) {
    double prev = 0.0;
    for (double p = 0.05; p < 1.0; p += 0.05) {
      const double q = chi2_quantile(df, p);
      CHECK(q > prev);
      prev = q;
    }
  }
}

TEST_CASE("cdf basics") {
  CHECK(chi2_cdf(3, 0.0) == 0.0);
  CHECK(chi2_cdf(3, -1.0) == 0.0);
  CHECK(chi2_cdf(3, 1e4) == doctest::Approx(1.0));
  // E[chi2_df] = df; the CDF at the mean is between 0.4 and 0.7 for small df
  for (int df : {1, 2, 5, 20}) {
    const double c = chi2_cdf(df, double(df));
    CHECK(c > 0.4);
    CHECK(c < 0.75);
  }
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS((void)chi2_quantile(0, 0.5), epivar::InputError);
  CHECK_THROWS_AS((void)chi2_quantile(3, 0.0), epivar::InputError);
  CHECK_THROWS_AS((void)chi2_quantile(3, 1.0), epivar::InputError);
  CHECK_THROWS_AS((void)chi2_quantile(3, -0.2), epivar::InputError);
  CHECK_THROWS_AS((void)chi2_cdf(0, 1.0), epivar::InputError);
  CHECK_THROWS_AS((void)epivar::gamma_p(-1.0, 1.0), epivar::InputError);
}
