#include "epivar/net.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "epivar/errors.hpp"
#include "epivar/rng.hpp"

namespace epivar {

void NetConfig::validate() const {
  if (input_dim < 1) throw InputError("NetConfig: input_dim must be >= 1");
  if (hidden_widths.empty())
    throw InputError("NetConfig: hidden_widths must be non-empty");
  for (int w : hidden_widths)
    if (w < 1) throw InputError("NetConfig: hidden widths must be >= 1");
  if (!(reg_lambda >= 0.0))
    throw InputError("NetConfig: reg_lambda must be >= 0");
  if (!(learning_rate > 0.0))
    throw InputError("NetConfig: learning_rate must be > 0");
  if (max_epochs < 0) throw InputError("NetConfig: max_epochs must be >= 0");
  if (!(loss_tol >= 0.0)) throw InputError("NetConfig: loss_tol must be >= 0");
}

TrainedNet init_params(const NetConfig& config, std::uint64_t seed) {
  config.validate();
  TrainedNet net;
  net.seed = seed;
  Rng base(seed);
  std::vector<int> dims;
  dims.push_back(config.input_dim);
  for (int w : config.hidden_widths) dims.push_back(w);
  dims.push_back(1);
  net.weights.reserve(dims.size() - 1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Eigen::MatrixXd w(dims[l + 1], dims[l]);
    Rng stream = base.derive(l);
    for (long r = 0; r < w.rows(); ++r)
      for (long c = 0; c < w.cols(); ++c) w(r, c) = stream.next_normal();
    net.weights.push_back(std::move(w));
  }
  net.init_weights = net.weights;
  return net;
}

namespace {

void check_input_dim(const TrainedNet& net, long dim) {
  if (net.weights.empty()) throw InputError("net has no layers");
  if (net.weights.front().cols() != dim)
    throw InputError("forward: input dimension " + std::to_string(dim) +
                     " does not match network input dimension " +
                     std::to_string(net.weights.front().cols()));
}

}  // namespace

Eigen::VectorXd forward_batch(const TrainedNet& net,
                              const Eigen::Ref<const Eigen::MatrixXd>& x) {
  check_input_dim(net, x.cols());
  Eigen::MatrixXd act = x;
  const std::size_t layers = net.weights.size();
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    const double scale = std::sqrt(2.0 / net.weights[l].rows());
    act = (act * net.weights[l].transpose()).cwiseMax(0.0) * scale;
  }
  return act * net.weights.back().transpose().col(0);
}

double forward(const TrainedNet& net,
               const Eigen::Ref<const Eigen::VectorXd>& x) {
  return forward_batch(net, x.transpose())[0];
}

std::vector<Eigen::MatrixXd> param_gradient(
    const TrainedNet& net, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_input_dim(net, x.size());
  const std::size_t layers = net.weights.size();
  // forward, caching pre-activations
  std::vector<Eigen::VectorXd> acts(layers);      // post-activation inputs per layer
  std::vector<Eigen::VectorXd> preacts(layers - 1);
  Eigen::VectorXd a = x;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    acts[l] = a;
    preacts[l] = net.weights[l] * a;
    const double scale = std::sqrt(2.0 / net.weights[l].rows());
    a = scale * preacts[l].cwiseMax(0.0);
  }
  acts[layers - 1] = a;

  std::vector<Eigen::MatrixXd> grads(layers);
  Eigen::VectorXd delta = Eigen::VectorXd::Ones(1);
  for (std::size_t l = layers; l-- > 0;) {
    grads[l] = delta * acts[l].transpose();
    if (l == 0) break;
    const double scale = std::sqrt(2.0 / net.weights[l - 1].rows());
    Eigen::VectorXd back = net.weights[l].transpose() * delta;
    delta = scale *
            (preacts[l - 1].array() > 0.0).cast<double>().matrix().cwiseProduct(
                back);
  }
  return grads;
}

double regularized_loss(const TrainedNet& net, const NetConfig& config,
                        const Dataset& data) {
  const Eigen::VectorXd out = forward_batch(net, data.inputs);
  double loss = (out - data.labels).squaredNorm() / double(data.n());
  for (std::size_t l = 0; l < net.weights.size(); ++l)
    loss += config.reg_lambda *
            (net.weights[l] - net.init_weights[l]).squaredNorm();
  return loss;
}

TrainedNet train(const NetConfig& config, const Dataset& data,
                 std::uint64_t seed) {
  config.validate();
  if (data.n() < 1) throw InputError("train: empty dataset");
  if (!data.labels.allFinite()) throw InputError("train: non-finite labels");
  if (data.dim() != config.input_dim)
    throw InputError("train: dataset dimension " + std::to_string(data.dim()) +
                     " does not match config input_dim " +
                     std::to_string(config.input_dim));

  TrainedNet net = init_params(config, seed);
  const std::size_t layers = net.weights.size();
  const long n = data.n();
  const double lr = config.learning_rate;
  const double lambda = config.reg_lambda;

  std::vector<Eigen::MatrixXd> preacts(layers - 1), acts(layers);
  std::vector<Eigen::MatrixXd> grads(layers);
  double prev_loss = std::numeric_limits<double>::infinity();
  double initial_loss = 0.0;

  for (int epoch = 0; epoch <= config.max_epochs; ++epoch) {
    // forward over the whole batch, caching activations
    Eigen::MatrixXd act = data.inputs;
    for (std::size_t l = 0; l + 1 < layers; ++l) {
      acts[l] = act;
      preacts[l] = act * net.weights[l].transpose();
      const double scale = std::sqrt(2.0 / net.weights[l].rows());
      act = preacts[l].cwiseMax(0.0) * scale;
    }
    acts[layers - 1] = act;
    const Eigen::VectorXd out = act * net.weights.back().transpose().col(0);
    const Eigen::VectorXd residual = out - data.labels;

    double loss = residual.squaredNorm() / double(n);
    for (std::size_t l = 0; l < layers; ++l)
      loss +=
          lambda * (net.weights[l] - net.init_weights[l]).squaredNorm();
    net.train_loss_trace.push_back(loss);

    if (epoch == 0) initial_loss = loss;
    if (!std::isfinite(loss) || loss > 1e6 * initial_loss)
      throw DivergedTrainingError(
          "training diverged at epoch " + std::to_string(epoch) + " (loss " +
              std::to_string(loss) + ")",
          epoch);
    if (epoch == config.max_epochs) break;
    if (std::abs(loss - prev_loss) < config.loss_tol) break;
    prev_loss = loss;

    // backward
    Eigen::MatrixXd delta = (2.0 / double(n)) * residual;  // n x 1
    for (std::size_t l = layers; l-- > 0;) {
      grads[l] = delta.transpose() * acts[l];
      grads[l] += 2.0 * lambda * (net.weights[l] - net.init_weights[l]);
      if (l == 0) break;
      const double scale = std::sqrt(2.0 / net.weights[l - 1].rows());
      Eigen::MatrixXd back = delta * net.weights[l];
      delta = scale * (preacts[l - 1].array() > 0.0)
                          .cast<double>()
                          .matrix()
                          .cwiseProduct(back);
    }
    for (std::size_t l = 0; l < layers; ++l) net.weights[l] -= lr * grads[l];
  }
  return net;
}

double stable_learning_rate(double gram_eigmax, long n, double reg_lambda,
                            double safety) {
  const double curvature = 2.0 * gram_eigmax / double(n) + 2.0 * reg_lambda;
  if (curvature <= 0.0) throw InputError("stable_learning_rate: zero curvature");
  return safety * 2.0 / curvature;
}

}  // namespace epivar
