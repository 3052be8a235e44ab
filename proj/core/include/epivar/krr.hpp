#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "epivar/data.hpp"
#include "epivar/kernel.hpp"
#include "epivar/net.hpp"

namespace epivar {

/// How the initialization-average h0(x) = E[h(theta0; x)] is evaluated.
/// Under the standard-normal initialization the final layer is independent
/// zero-mean, so the expectation is exactly zero; AnalyticZero uses that.
/// EmpiricalAverage instead averages m0 freshly initialized networks, for
/// parameterizations where the symmetry argument does not apply.
enum class H0Mode { AnalyticZero, EmpiricalAverage };

struct H0Spec {
  H0Mode mode = H0Mode::AnalyticZero;
  NetConfig net;       // architecture for EmpiricalAverage draws
  int m0 = 0;          // number of initializations to average
  std::uint64_t seed = 0;
};

/// h0 evaluated at each row of points: zeros in AnalyticZero mode, the
/// seeded mean of m0 untrained networks in EmpiricalAverage mode.
Eigen::VectorXd h0_baseline(const H0Spec& h0,
                            const Eigen::Ref<const Eigen::MatrixXd>& points);

/// NTK kernel-ridge model: the procedural-noise-averaged predictor
///   hbar(x0) = h0(x0) + K(x0, X)^T (K + lambda n I)^{-1} (y - h0(X)).
///
/// The regularized Gram factorization is kept for reuse (prediction and the
/// influence-function solves share it). Immutable after fit; concurrent
/// predict calls are safe.
class KrrModel {
 public:
  /// Solves (K + lambda n I + jitter I) alpha = y - h0(X) by Cholesky and
  /// verifies the reconstruction residual to 1e-8 relative, escalating
  /// jitter x10 up to 3 times from max(config.jitter, 1e-10 * mean diag).
  /// lambda = 0 is accepted only when the condition estimate of the
  /// factorized system stays below 1e12.
  /// Throws IllConditionedError when no acceptable factorization exists.
  static KrrModel fit(const Dataset& data, double lambda,
                      const KernelConfig& config,
                      const H0Spec& h0 = H0Spec{});

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x0) const;

  /// h0 at an arbitrary point under this model's h0 mode.
  double h0_at(const Eigen::Ref<const Eigen::VectorXd>& x0) const;

  /// Solve (K + lambda n I + jitter I) u = rhs with the cached factorization.
  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& rhs) const;
  /// Same solve with one right-hand side per column.
  Eigen::MatrixXd solve_columns(const Eigen::Ref<const Eigen::MatrixXd>& rhs) const;

  const GramMatrix& gram() const { return gram_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  /// K * alpha, i.e. hbar(X) - h0(X) at the training inputs.
  const Eigen::VectorXd& gram_alpha() const { return gram_alpha_; }
  const Eigen::VectorXd& h0_values() const { return h0_values_; }
  const Eigen::VectorXd& labels() const { return labels_; }
  double lambda() const { return lambda_; }
  double jitter() const { return jitter_; }
  long n() const { return labels_.size(); }
  const KernelConfig& kernel_config() const { return config_; }
  H0Mode h0_mode() const { return h0_.mode; }

 private:
  KrrModel() = default;

  GramMatrix gram_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd gram_alpha_;
  Eigen::VectorXd h0_values_;
  Eigen::VectorXd labels_;
  double lambda_ = 0.0;
  double jitter_ = 0.0;
  KernelConfig config_;
  H0Spec h0_;
  std::vector<TrainedNet> h0_nets_;  // kept only in EmpiricalAverage mode
};

}  // namespace epivar
