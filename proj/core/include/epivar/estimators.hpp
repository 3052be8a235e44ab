#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "epivar/data.hpp"
#include "epivar/krr.hpp"
#include "epivar/net.hpp"

namespace epivar {

enum class Method { IF, EV, BA };

std::string to_string(Method method);

struct EstimateMeta {
  long n = 0;          // training-set size
  int m = 0;           // ensemble size m, or batch count m' = K
  double lambda = 0.0;
  std::uint64_t seed = 0;
};

/// A variance point estimate with an optional chi-squared confidence
/// interval. value is always >= 0; when a CI is present, 0 <= lower <= upper.
struct VarianceEstimate {
  double value = 0.0;
  std::optional<std::pair<double, double>> ci;
  double ci_level = 0.0;
  Method method = Method::IF;
  EstimateMeta meta;
};

/// Influence function of the kernel-ridge predictor at x0 under epsilon-
/// contamination of the training distribution at z = (z_x, z_y):
///
///   IF(z) = K(x0, X)^T (K + lambda n I)^{-1} M_z(X) - M_z(x0)
///   M_z(x) = hbar(x) - h0(x) - (1/lambda) (z_y - hbar(z_x)) K(z_x, x)
///
/// One extra linear solve against the model's cached factorization per call.
/// Requires lambda > 0 (the 1/lambda factor); lambda = 0 models are rejected.
double influence(const KrrModel& model,
                 const Eigen::Ref<const Eigen::VectorXd>& z_x, double z_y,
                 const Eigen::Ref<const Eigen::VectorXd>& x0);

/// Plug-in data-variance estimate (1/n^2) sum_i IF((x_i, y_i))^2.
/// Point estimate only; the factorization is reused so the whole sum costs
/// one n-column triangular solve.
VarianceEstimate data_variance_if(const KrrModel& model,
                                  const Eigen::Ref<const Eigen::VectorXd>& x0);

/// Sample variance of m ensemble predictions with the chi-squared pivot CI
///   [ EV / (chi2_{m-1,1-a/2}/(m-1)), EV / (chi2_{m-1,a/2}/(m-1)) ].
/// Throws InputError when fewer than two predictions are given.
VarianceEstimate ensemble_variance(const std::vector<double>& predictions,
                                   double ci_level);

/// Batching estimator for the epistemic variance of an m'-member deep
/// ensemble (sigma^2/n + tau^2/m'): shuffle, split into k equal batches of
/// floor(n/k) points (remainder discarded), train one network per batch,
/// and form S^2/k from the k batch predictions with the chi-squared CI of
/// the self-normalizing pivot. The seed drives the shuffle and the per-batch
/// training seeds; batch trainings may run on `workers` threads without
/// affecting the result.
VarianceEstimate batching(const Dataset& data, int k,
                          const NetConfig& net_config,
                          const Eigen::Ref<const Eigen::VectorXd>& x0,
                          double ci_level, std::uint64_t seed, int workers = 1);

/// Batch predictions underlying `batching` (exposed for diagnostics/tests).
std::vector<double> batch_predictions(
    const Dataset& data, int k, const NetConfig& net_config,
    const Eigen::Ref<const Eigen::VectorXd>& x0, std::uint64_t seed,
    int workers = 1);

/// Predictions at x0 of m networks independently trained on the same data
/// (member i uses seed derive_seed(seed, i)). The raw material for
/// ensemble_variance and for ensemble-mean diagnostics.
std::vector<double> ensemble_predictions(
    const Dataset& data, const NetConfig& net_config, int m,
    const Eigen::Ref<const Eigen::VectorXd>& x0, std::uint64_t seed,
    int workers = 1);

}  // namespace epivar
