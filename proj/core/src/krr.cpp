#include "epivar/krr.hpp"

#include <cmath>
#include <string>

#include "epivar/errors.hpp"
#include "epivar/rng.hpp"

namespace epivar {

Eigen::VectorXd h0_baseline(const H0Spec& h0,
                            const Eigen::Ref<const Eigen::MatrixXd>& points) {
  if (h0.mode == H0Mode::AnalyticZero)
    return Eigen::VectorXd::Zero(points.rows());
  if (h0.m0 < 1)
    throw InputError("h0_baseline: empirical-average mode needs m0 >= 1");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(points.rows());
  for (int i = 0; i < h0.m0; ++i) {
    const TrainedNet net = init_params(h0.net, derive_seed(h0.seed, i));
    acc += forward_batch(net, points);
  }
  return acc / double(h0.m0);
}

namespace {

// Smallest eigenvalue of the factorized system by inverse power iteration.
double min_eigenvalue_estimate(const Eigen::LLT<Eigen::MatrixXd>& llt, long n) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(double(n));
  double eig = 0.0;
  for (int it = 0; it < 64; ++it) {
    Eigen::VectorXd w = llt.solve(v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double rayleigh = 1.0 / llt.solve(w).dot(w);
    if (it > 8 && std::abs(rayleigh - eig) <= 1e-8 * std::abs(rayleigh)) {
      eig = rayleigh;
      break;
    }
    eig = rayleigh;
    v = w;
  }
  return eig;
}

}  // namespace

KrrModel KrrModel::fit(const Dataset& data, double lambda,
                       const KernelConfig& config, const H0Spec& h0) {
  config.validate();
  if (data.n() < 1) throw InputError("KrrModel::fit: empty dataset");
  if (!(lambda >= 0.0)) throw InputError("KrrModel::fit: lambda must be >= 0");

  KrrModel model;
  model.config_ = config;
  model.lambda_ = lambda;
  model.labels_ = data.labels;
  model.h0_ = h0;
  model.gram_ = ntk_gram(data.inputs, config);
  const long n = data.n();

  if (h0.mode == H0Mode::EmpiricalAverage) {
    if (h0.m0 < 1)
      throw InputError("KrrModel::fit: empirical-average h0 needs m0 >= 1");
    model.h0_nets_.reserve(h0.m0);
    for (int i = 0; i < h0.m0; ++i)
      model.h0_nets_.push_back(init_params(h0.net, derive_seed(h0.seed, i)));
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
    for (const auto& net : model.h0_nets_) acc += forward_batch(net, data.inputs);
    model.h0_values_ = acc / double(h0.m0);
  } else {
    model.h0_values_ = Eigen::VectorXd::Zero(n);
  }

  const double mean_diag = model.gram_.entries.diagonal().mean();
  if (config.jitter > 1e-6 * mean_diag)
    throw InputError("KrrModel::fit: jitter exceeds 1e-6 * mean Gram diagonal");

  const Eigen::VectorXd rhs = data.labels - model.h0_values_;
  const double rhs_norm = rhs.norm();
  double jitter =
      config.jitter > 0.0 ? config.jitter : 1e-10 * std::max(mean_diag, 1e-300);

  for (int attempt = 0; attempt < 4; ++attempt, jitter *= 10.0) {
    Eigen::MatrixXd system = model.gram_.entries;
    system.diagonal().array() += lambda * double(n) + jitter;
    model.llt_.compute(system);
    if (model.llt_.info() != Eigen::Success) continue;

    model.alpha_ = model.llt_.solve(rhs);
    const double residual =
        (system * model.alpha_ - rhs).norm();
    if (residual > 1e-8 * std::max(rhs_norm, 1e-300)) continue;

    if (lambda == 0.0) {
      // Condition estimate of the raw Gram: the smallest eigenvalue of the
      // factorized system minus the jitter that made it factorizable.
      const double eig_max = top_eigenvalue(system);
      const double eig_min =
          min_eigenvalue_estimate(model.llt_, n) - jitter;
      if (eig_min <= 0.0 || eig_max / eig_min >= 1e12)
        throw IllConditionedError(
            "KrrModel::fit: lambda = 0 requires condition estimate < 1e12 "
            "(got " +
            std::to_string(eig_min > 0 ? eig_max / eig_min : -1.0) + ")");
    }
    model.jitter_ = jitter;
    model.gram_alpha_ = model.gram_.entries * model.alpha_;
    return model;
  }
  throw IllConditionedError(
      "KrrModel::fit: factorization failed after jitter escalation");
}

double KrrModel::h0_at(const Eigen::Ref<const Eigen::VectorXd>& x0) const {
  if (h0_.mode == H0Mode::AnalyticZero) return 0.0;
  double acc = 0.0;
  for (const auto& net : h0_nets_) acc += forward(net, x0);
  return acc / double(h0_nets_.size());
}

double KrrModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x0) const {
  const Eigen::VectorXd k0 = ntk_cross(x0, gram_.inputs, config_);
  return h0_at(x0) + k0.dot(alpha_);
}

Eigen::VectorXd KrrModel::solve(
    const Eigen::Ref<const Eigen::VectorXd>& rhs) const {
  return llt_.solve(rhs);
}

Eigen::MatrixXd KrrModel::solve_columns(
    const Eigen::Ref<const Eigen::MatrixXd>& rhs) const {
  return llt_.solve(rhs);
}

}  // namespace epivar
