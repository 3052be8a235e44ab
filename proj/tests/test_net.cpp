#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "epivar/data.hpp"
#include "epivar/errors.hpp"
#include "epivar/net.hpp"
#include "epivar/rng.hpp"
#include "testutil.hpp"

using epivar::Dataset;
using epivar::NetConfig;
using epivar::TrainedNet;

namespace {

Dataset toy_dataset(long n, int d, std::uint64_t seed) {
  epivar::SyntheticSpec spec{epivar::Family::SinSum, d};
  return epivar::sample(spec, n, seed);
}

}  // namespace

TEST_CASE("initialization is seed-deterministic") {
  NetConfig cfg;
  cfg.input_dim = 4;
  cfg.hidden_widths = {32, 16};
  const auto a = epivar::init_params(cfg, 77);
  const auto b = epivar::init_params(cfg, 77);
  REQUIRE(a.weights.size() == b.weights.size());
  for (std::size_t l = 0; l < a.weights.size(); ++l)
    CHECK(a.weights[l] == b.weights[l]);
  const auto c = epivar::init_params(cfg, 78);
  CHECK(a.weights[0] != c.weights[0]);
  for (std::size_t l = 0; l < a.weights.size(); ++l)
    CHECK(a.weights[l] == a.init_weights[l]);
}

TEST_CASE("initial weights are standard normal") {
  NetConfig cfg;
  cfg.input_dim = 25;
  cfg.hidden_widths = {4096};
  const auto net = epivar::init_params(cfg, 5);
  const auto& w = net.weights[0];  // 4096 x 25 >= 1e5 samples
  const long n = w.size();
  REQUIRE(n >= 100000);
  const double mean = w.sum() / n;
  const double var = (w.array() - mean).square().sum() / n;
  CHECK(std::abs(mean) <= 4.0 / std::sqrt(double(n)));
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("fresh networks are zero-mean at a fixed input") {
  NetConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_widths = {256};
  Eigen::VectorXd x(2);
  x << 0.1, 0.1;
  const int seeds = 200;
  double sum = 0, sum2 = 0;
  for (int s = 0; s < seeds; ++s) {
    const double v = epivar::forward(epivar::init_params(cfg, 1000 + s), x);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / seeds;
  const double sd = std::sqrt(sum2 / seeds - mean * mean);
  CHECK(std::abs(mean) <= 3.0 * sd / std::sqrt(double(seeds)));
}

TEST_CASE("forward evaluates the scaled relu stack") {
  // One hidden unit, weights forced to 1: h(1) = sqrt(2) * relu(1) * 1.
  NetConfig cfg;
  cfg.input_dim = 1;
  cfg.hidden_widths = {1};
  auto net = epivar::init_params(cfg, 0);
  net.weights[0](0, 0) = 1.0;
  net.weights[1](0, 0) = 1.0;
  Eigen::VectorXd one(1);
  one << 1.0;
  CHECK(epivar::forward(net, one) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(epivar::forward(net, one) == doctest::Approx(1.414214).epsilon(1e-6));

  // zero input and positive homogeneity
  NetConfig cfg2;
  cfg2.input_dim = 3;
  cfg2.hidden_widths = {16, 8};
  const auto net2 = epivar::init_params(cfg2, 9);
  CHECK(epivar::forward(net2, Eigen::VectorXd::Zero(3)) == 0.0);
  Eigen::VectorXd x(3);
  x << 0.4, -0.2, 1.1;
  CHECK(epivar::forward(net2, (2.0 * x).eval()) ==
        doctest::Approx(2.0 * epivar::forward(net2, x)).epsilon(1e-12));
}

TEST_CASE("max_epochs = 0 returns the initialization") {
  NetConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_widths = {8};
  cfg.max_epochs = 0;
  const Dataset data = toy_dataset(10, 2, 1);
  const auto net = epivar::train(cfg, data, 123);
  const auto fresh = epivar::init_params(cfg, 123);
  for (std::size_t l = 0; l < net.weights.size(); ++l)
    CHECK(net.weights[l] == fresh.weights[l]);
  CHECK(net.train_loss_trace.size() == 1);
}

TEST_CASE("one-point interpolation reaches 1e-6 loss") {
  NetConfig cfg;
  cfg.input_dim = 1;
  cfg.hidden_widths = {64};
  cfg.reg_lambda = 0.0;
  cfg.learning_rate = 0.2;
  cfg.max_epochs = 4000;
  cfg.loss_tol = 0.0;
  Dataset data;
  data.inputs = Eigen::MatrixXd::Ones(1, 1);
  data.labels = Eigen::VectorXd::Ones(1);
  const auto net = epivar::train(cfg, data, 3);
  CHECK(net.train_loss_trace.back() <= 1e-6);
}

TEST_CASE("training is bit-deterministic") {
  NetConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_widths = {32};
  cfg.learning_rate = 0.05;
  cfg.max_epochs = 50;
  const Dataset data = toy_dataset(20, 2, 4);
  const auto a = epivar::train(cfg, data, 99);
  const auto b = epivar::train(cfg, data, 99);
  for (std::size_t l = 0; l < a.weights.size(); ++l)
    CHECK(a.weights[l] == b.weights[l]);
  REQUIRE(a.train_loss_trace.size() == b.train_loss_trace.size());
  for (std::size_t i = 0; i < a.train_loss_trace.size(); ++i)
    CHECK(a.train_loss_trace[i] == b.train_loss_trace[i]);
}

TEST_CASE("training gradient matches finite differences of the loss") {
  // One gradient-descent step recovers the gradient exactly:
  // G = (theta0 - theta1) / lr.
  const double lr = 1e-3;
  epivar::Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    NetConfig cfg;
    cfg.input_dim = 2;
    cfg.hidden_widths = {3, 2};
    cfg.reg_lambda = 0.05;
    cfg.learning_rate = lr;
    cfg.max_epochs = 1;
    cfg.loss_tol = 0.0;
    const Dataset data = toy_dataset(6, 2, 40 + trial);
    const std::uint64_t seed = 70 + trial;
    const auto before = epivar::init_params(cfg, seed);
    const auto after = epivar::train(cfg, data, seed);

    const double h = 1e-5;
    auto probe = before;
    for (std::size_t l = 0; l < probe.weights.size(); ++l) {
      for (long r = 0; r < probe.weights[l].rows(); ++r) {
        for (long c = 0; c < probe.weights[l].cols(); ++c) {
          const double grad =
              (before.weights[l](r, c) - after.weights[l](r, c)) / lr;
          const double keep = probe.weights[l](r, c);
          probe.weights[l](r, c) = keep + h;
          const double up = epivar::regularized_loss(probe, cfg, data);
          probe.weights[l](r, c) = keep - h;
          const double dn = epivar::regularized_loss(probe, cfg, data);
          probe.weights[l](r, c) = keep;
          const double fd = (up - dn) / (2 * h);
          if (std::abs(fd) > 1e-7)
            CHECK(testutil::rel_err(grad, fd) <= 1e-5);
          else
            CHECK(std::abs(grad - fd) <= 1e-7);
        }
      }
    }
  }
}

TEST_CASE("loss is non-increasing after the first epoch at a small step") {
  int monotone = 0;
  const int runs = 20;
  for (int s = 0; s < runs; ++s) {
    NetConfig cfg;
    cfg.input_dim = 2;
    cfg.hidden_widths = {64};
    cfg.learning_rate = 1e-2;
    cfg.max_epochs = 120;
    cfg.loss_tol = 0.0;
    const Dataset data = toy_dataset(200, 2, 60 + s);
    const auto net = epivar::train(cfg, data, 600 + s);
    bool ok = true;
    for (std::size_t i = 2; i < net.train_loss_trace.size(); ++i)
      ok = ok && net.train_loss_trace[i] <= net.train_loss_trace[i - 1] + 1e-15;
    monotone += ok;
  }
  CHECK(monotone >= int(0.95 * runs));
}

TEST_CASE("regularizer keeps parameters anchored to the initialization") {
  auto drift = [&](double lambda, std::uint64_t seed) {
    NetConfig cfg;
    cfg.input_dim = 2;
    cfg.hidden_widths = {32};
    cfg.reg_lambda = lambda;
    cfg.learning_rate = 0.05;
    cfg.max_epochs = 800;
    cfg.loss_tol = 0.0;
    const Dataset data = toy_dataset(50, 2, 7);
    const auto net = epivar::train(cfg, data, seed);
    double d2 = 0.0;
    for (std::size_t l = 0; l < net.weights.size(); ++l)
      d2 += (net.weights[l] - net.init_weights[l]).squaredNorm();
    return std::sqrt(d2);
  };
  for (int s = 0; s < 10; ++s) {
    const double d1 = drift(1e-3, 900 + s);
    const double d2 = drift(2e-3, 900 + s);
    CHECK(std::isfinite(d1));
    CHECK(d2 <= d1 * (1.0 + 1e-9));
  }
}

TEST_CASE("divergence is reported with its epoch") {
  NetConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_widths = {16};
  cfg.learning_rate = 1e5;
  cfg.max_epochs = 200;
  const Dataset data = toy_dataset(20, 2, 8);
  CHECK_THROWS_AS((void)epivar::train(cfg, data, 1),
                  epivar::DivergedTrainingError);
  try {
    (void)epivar::train(cfg, data, 1);
  } catch (const epivar::DivergedTrainingError& e) {
    CHECK(e.epoch() >= 1);
  }
}

TEST_CASE("input validation") {
  NetConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_widths = {};
  const Dataset data = toy_dataset(5, 2, 9);
  CHECK_THROWS_AS((void)epivar::train(cfg, data, 1), epivar::InputError);
  cfg.hidden_widths = {8};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS((void)epivar::train(cfg, data, 1), epivar::InputError);
  cfg.learning_rate = 0.1;
  const auto net = epivar::init_params(cfg, 1);
  CHECK_THROWS_AS((void)epivar::forward(net, Eigen::VectorXd::Zero(3)),
                  epivar::InputError);
  const Dataset wrong = toy_dataset(5, 3, 9);
  CHECK_THROWS_AS((void)epivar::train(cfg, wrong, 1), epivar::InputError);
}

TEST_CASE("stable_learning_rate sits below the divergence threshold") {
  // lr at 0.45x the bound trains stably; lr at 2.2x the bound diverges.
  const Dataset data = toy_dataset(100, 2, 10);
  const auto gram = epivar::ntk_gram(data.inputs, {1, 0.0});
  const double eigmax = epivar::top_eigenvalue(gram.entries);
  NetConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_widths = {128};
  cfg.max_epochs = 300;
  cfg.loss_tol = 0.0;
  cfg.learning_rate =
      epivar::stable_learning_rate(eigmax, data.n(), cfg.reg_lambda);
  const auto net = epivar::train(cfg, data, 11);
  CHECK(std::isfinite(net.train_loss_trace.back()));
  CHECK(net.train_loss_trace.back() < net.train_loss_trace.front());

  cfg.learning_rate = epivar::stable_learning_rate(eigmax, data.n(),
                                                   cfg.reg_lambda, 50.0);
  CHECK_THROWS_AS((void)epivar::train(cfg, data, 11),
                  epivar::DivergedTrainingError);
}
