#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "epivar/data.hpp"

namespace epivar {

/// Fully-connected bias-free ReLU network under the NTK parameterization:
/// every layer output is scaled by sqrt(2 / fan_out) in the forward pass and
/// all weights are drawn i.i.d. standard normal, which together realize He
/// initialization.
struct NetConfig {
  int input_dim = 1;
  std::vector<int> hidden_widths = {1024};
  double reg_lambda = 1e-3;
  /// Fixed gradient-descent step. Stability requires
  /// learning_rate < 2 / (2 * eigmax(K)/n + 2 * reg_lambda) where eigmax(K)
  /// is the largest NTK Gram eigenvalue; see stable_learning_rate(). Not
  /// enforced; divergence is detected at run time instead.
  double learning_rate = 1e-2;
  int max_epochs = 5000;
  double loss_tol = 1e-8;

  void validate() const;
};

struct TrainedNet {
  /// weights[l] has shape (d_{l+1} x d_l); the last layer has one row.
  std::vector<Eigen::MatrixXd> weights;
  /// Snapshot of the parameters the run started from (same shapes).
  std::vector<Eigen::MatrixXd> init_weights;
  std::uint64_t seed = 0;
  /// Loss at the start of every epoch plus one final value after the last
  /// update; empty trailing updates never happen (trace size = updates + 1).
  std::vector<double> train_loss_trace;
};

/// Freshly initialized network: weights == init_weights, entries i.i.d.
/// standard normal from the counter-based stream of `seed` (one substream
/// per layer, row-major fill). Identical seeds give bit-identical nets, and
/// a narrower net's first hidden rows coincide with a wider net's.
TrainedNet init_params(const NetConfig& config, std::uint64_t seed);

/// Network output at a single point.
double forward(const TrainedNet& net,
               const Eigen::Ref<const Eigen::VectorXd>& x);

/// Network outputs for a batch of inputs (rows of x).
Eigen::VectorXd forward_batch(const TrainedNet& net,
                              const Eigen::Ref<const Eigen::MatrixXd>& x);

/// Gradient of the scalar output with respect to every weight matrix.
std::vector<Eigen::MatrixXd> param_gradient(
    const TrainedNet& net, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Mean squared error plus reg_lambda * |theta - theta0|^2.
double regularized_loss(const TrainedNet& net, const NetConfig& config,
                        const Dataset& data);

/// Full-batch gradient descent on the regularized square loss, starting from
/// init_params(config, seed), until max_epochs or the absolute epoch-to-epoch
/// loss change falls below loss_tol. Deterministic in (config, data, seed):
/// the only randomness is the initialization.
/// Throws DivergedTrainingError (carrying the epoch) when the loss becomes
/// non-finite or exceeds 1e6 times its initial value.
TrainedNet train(const NetConfig& config, const Dataset& data,
                 std::uint64_t seed);

/// Step size at `safety` times the gradient-descent stability bound
/// 2 / (2 * gram_eigmax / n + 2 * reg_lambda).
double stable_learning_rate(double gram_eigmax, long n, double reg_lambda,
                            double safety = 0.45);

}  // namespace epivar
