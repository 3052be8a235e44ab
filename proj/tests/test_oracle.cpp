#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "epivar/errors.hpp"
#include "epivar/oracle.hpp"
#include "epivar/rng.hpp"
#include "testutil.hpp"

using epivar::Decomposition;
using epivar::GroundTruth;

TEST_CASE("empirical variance") {
  CHECK(epivar::empirical_variance({0, 0, 0}) == 0.0);
  CHECK(epivar::empirical_variance({0, 2}) == doctest::Approx(2.0));
  CHECK(epivar::empirical_variance({1, 2, 3, 4}) ==
        doctest::Approx(5.0 / 3.0).epsilon(1e-12));
  CHECK(epivar::empirical_variance({1, 2, 3, 4}) ==
        doctest::Approx(1.666667).epsilon(1e-5));
  CHECK_THROWS_AS((void)epivar::empirical_variance({1.0}), epivar::InputError);
}

TEST_CASE("decompose reference cases") {
  const Decomposition a = epivar::decompose(1.0, 0.4, 5);
  CHECK(a.tau2 == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(a.sigma2_over_n == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_FALSE(a.negative_warning);

  const Decomposition b = epivar::decompose(0.8, 0.8, 7);
  CHECK(b.tau2 == doctest::Approx(0.0));
  CHECK(b.sigma2_over_n == doctest::Approx(0.8));

  const Decomposition c = epivar::decompose(1.0, 0.2, 5);
  CHECK(c.tau2 == doctest::Approx(1.0));
  CHECK(c.sigma2_over_n == doctest::Approx(0.0));

  const Decomposition neg = epivar::decompose(1.0, 1.2, 5);
  CHECK(neg.negative_warning);
  CHECK(neg.tau2 < 0.0);

  CHECK_THROWS_AS((void)epivar::decompose(1.0, 0.5, 1), epivar::InputError);
}

TEST_CASE("decomposition identities hold to 1e-12") {
  epivar::Rng rng(71);
  for (int i = 0; i < 1000; ++i) {
    const double v1 = 3.0 * rng.next_double();
    const double ve = 3.0 * rng.next_double();
    const int mp = 2 + int(rng.next_u64() % 10);
    const Decomposition d = epivar::decompose(v1, ve, mp);
    CHECK(std::abs(d.tau2 + d.sigma2_over_n - v1) <=
          1e-12 * std::max(1.0, std::abs(v1)));
    CHECK(std::abs(d.sigma2_over_n + d.tau2 / mp - ve) <=
          1e-12 * std::max(1.0, std::abs(ve)));
  }
}

TEST_CASE("constant predictors give all-zero ground truth") {
  // max_epochs = 0 keeps every member at its initialization, and the test
  // point 0 forces every bias-free relu net to output exactly 0.
  epivar::NetConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_widths = {8};
  cfg.max_epochs = 0;
  const GroundTruth gt =
      epivar::ground_truth({epivar::Family::SinSum, 2}, cfg, 10,
                           Eigen::VectorXd::Zero(2), 2, 2, 5);
  CHECK(gt.var_single == 0.0);
  CHECK(gt.var_ensemble == 0.0);
  CHECK(gt.tau2 == 0.0);
  CHECK(gt.sigma2_over_n == 0.0);
}

TEST_CASE("small ground-truth run: identities, determinism, shape") {
  epivar::NetConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_widths = {16};
  cfg.learning_rate = 0.1;
  cfg.max_epochs = 40;
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(2, 0.1);
  const GroundTruth gt = epivar::ground_truth({epivar::Family::SinSum, 2}, cfg,
                                              20, x0, 4, 3, 99, 2);
  CHECK(gt.j == 4);
  CHECK(gt.m_prime == 3);
  CHECK(gt.predictions.rows() == 4);
  CHECK(gt.predictions.cols() == 3);
  CHECK(gt.seeds.size() == 4);
  CHECK(std::abs(gt.tau2 + gt.sigma2_over_n - gt.var_single) <=
        1e-12 * std::max(1.0, gt.var_single));
  CHECK(std::abs(gt.sigma2_over_n + gt.tau2 / 3 - gt.var_ensemble) <=
        1e-12 * std::max(1.0, gt.var_ensemble));
  CHECK(gt.var_single >= 0.0);
  CHECK(gt.var_ensemble >= 0.0);

  const GroundTruth again = epivar::ground_truth({epivar::Family::SinSum, 2},
                                                 cfg, 20, x0, 4, 3, 99, 1);
  CHECK(gt.predictions == again.predictions);

  CHECK_THROWS_AS(
      (void)epivar::ground_truth({epivar::Family::SinSum, 2}, cfg, 20, x0, 1,
                                 3, 99),
      epivar::InputError);
  CHECK_THROWS_AS(
      (void)epivar::ground_truth({epivar::Family::SinSum, 2}, cfg, 20, x0, 4,
                                 1, 99),
      epivar::InputError);
}

TEST_CASE("decomposition recovers the truth on a tractable linear model") {
  // Predictor stub: exact 1-d ridge regression plus synthetic procedural
  // noise. Var(E[h | data]) is then computable by direct resampling, and
  // E[Var(h | data)] is the injected noise variance. The ground-truth
  // aggregation must recover both from the J x m' prediction matrix.
  const long n = 60;
  const double ridge = 1.0;
  const double beta = 1.3, noise_sd = 0.5, x0v = 1.0;
  const double tau_true = 2.5e-3;  // injected procedural variance

  auto ridge_predict = [&](epivar::Rng& rng) {
    double sxx = 0, sxy = 0;
    for (long i = 0; i < n; ++i) {
      const double x = rng.next_normal();
      const double y = beta * x + noise_sd * rng.next_normal();
      sxx += x * x;
      sxy += x * y;
    }
    return x0v * sxy / (sxx + ridge);
  };

  // direct resampling value of Var(E[h | data])
  epivar::Rng resample_rng(1000);
  std::vector<double> preds;
  preds.reserve(20000);
  for (int r = 0; r < 20000; ++r) preds.push_back(ridge_predict(resample_rng));
  const double sigma_direct = epivar::empirical_variance(preds);

  const int J = 500, mp = 5;
  Eigen::MatrixXd matrix(J, mp);
  epivar::Rng rng(2000);
  for (int t = 0; t < J; ++t) {
    const double mean_pred = ridge_predict(rng);
    for (int k = 0; k < mp; ++k)
      matrix(t, k) = mean_pred + std::sqrt(tau_true) * rng.next_normal();
  }
  const GroundTruth gt = epivar::aggregate_ground_truth(matrix);
  CHECK(testutil::rel_err(gt.sigma2_over_n, sigma_direct) <= 0.20);
  CHECK(testutil::rel_err(gt.tau2, tau_true) <= 0.20);
}

TEST_CASE("trial halves give comparable variance estimates") {
  epivar::NetConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_widths = {16};
  cfg.learning_rate = 0.5;
  cfg.max_epochs = 300;
  cfg.loss_tol = 1e-12;
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(2, 0.1);
  const epivar::GroundTruth gt = epivar::ground_truth(
      {epivar::Family::SinSum, 2}, cfg, 30, x0, 100, 2, 123, 2);

  const epivar::GroundTruth first =
      epivar::aggregate_ground_truth(gt.predictions.topRows(50));
  const epivar::GroundTruth second =
      epivar::aggregate_ground_truth(gt.predictions.bottomRows(50));
  const double ratio = first.var_single / second.var_single;
  INFO("half-split var_single ratio ", ratio);
  CHECK(ratio >= 0.4);
  CHECK(ratio <= 2.5);
}
