#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "epivar/data.hpp"
#include "epivar/net.hpp"

namespace epivar {

/// Result of decomposing single-model and ensemble variances into the
/// procedural and data components via the m'-ensemble identities:
///   tau2           = m'/(m'-1) * (var_single - var_ensemble)
///   sigma2_over_n  = m'/(m'-1) * var_ensemble - 1/(m'-1) * var_single
/// Sampling noise can make either component negative; values are returned
/// as-is (clipping would bias downstream comparisons) with the flag set.
struct Decomposition {
  double tau2 = 0.0;
  double sigma2_over_n = 0.0;
  bool negative_warning = false;
};

/// Retraining-based ground truth for the epistemic variance at a test point.
struct GroundTruth {
  double var_single = 0.0;    // Var of a single trained model's prediction
  double var_ensemble = 0.0;  // Var of the m'-ensemble mean prediction
  double tau2 = 0.0;          // procedural component E[Var(h | data)]
  double sigma2_over_n = 0.0; // data component Var(E[h | data])
  int j = 0;                  // number of retraining trials
  int m_prime = 0;            // ensemble size per trial
  std::vector<std::uint64_t> seeds;  // per-trial dataset seeds
  bool negative_warning = false;
  /// All J x m' member predictions (row = trial), kept so consumers can form
  /// nested sub-ensembles without retraining.
  Eigen::MatrixXd predictions;
};

/// Unbiased sample variance over at least two values.
double empirical_variance(const std::vector<double>& values);

Decomposition decompose(double var_single, double var_ensemble, int m_prime);

/// Aggregates a J x m' prediction matrix (row = trial) into a GroundTruth:
/// var_single averages the per-member across-trial variances, var_ensemble
/// is the variance of the row means, and tau2/sigma2_over_n follow from
/// decompose. Factored out so any predictor (not just the net trainer) can
/// be pushed through the identical arithmetic.
GroundTruth aggregate_ground_truth(const Eigen::MatrixXd& predictions);

/// Retraining ground-truth procedure: for each of j trials draw a fresh
/// dataset (seeded), train m_prime independent networks on it, and record
/// their predictions at x0. var_ensemble is the empirical variance of the
/// per-trial ensemble means. var_single averages the per-member empirical
/// variances across the m_prime member columns; every column is an
/// identically distributed single-model predictor, so this estimates the
/// same quantity as any one column with far less noise and no extra
/// training. Deterministic given seed; trials x members run on `workers`
/// threads.
GroundTruth ground_truth(const SyntheticSpec& spec, const NetConfig& net_config,
                         long n, const Eigen::Ref<const Eigen::VectorXd>& x0,
                         int j, int m_prime, std::uint64_t seed,
                         int workers = 1);

}  // namespace epivar
