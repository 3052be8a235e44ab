#include "epivar/estimators.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "epivar/errors.hpp"
#include "epivar/parallel.hpp"
#include "epivar/rng.hpp"
#include "epivar/stats.hpp"

namespace epivar {

std::string to_string(Method method) {
  switch (method) {
    case Method::IF: return "IF";
    case Method::EV: return "EV";
    case Method::BA: return "BA";
  }
  return "?";
}

double influence(const KrrModel& model,
                 const Eigen::Ref<const Eigen::VectorXd>& z_x, double z_y,
                 const Eigen::Ref<const Eigen::VectorXd>& x0) {
  if (model.lambda() <= 0.0)
    throw InputError("influence: requires lambda > 0");
  const auto& cfg = model.kernel_config();
  const Eigen::VectorXd k_z = ntk_cross(z_x, model.gram().inputs, cfg);
  const Eigen::VectorXd k0 = ntk_cross(x0, model.gram().inputs, cfg);

  const double hbar_z = model.h0_at(z_x) + k_z.dot(model.alpha());
  const double scale = (z_y - hbar_z) / model.lambda();

  // M_z at the training inputs; hbar(X) - h0(X) is the cached K * alpha.
  const Eigen::VectorXd m_train = model.gram_alpha() - scale * k_z;
  const double k_z_x0 = population_ntk(z_x, x0, cfg);
  const double m_x0 = (model.predict(x0) - model.h0_at(x0)) - scale * k_z_x0;

  return k0.dot(model.solve(m_train)) - m_x0;
}

VarianceEstimate data_variance_if(
    const KrrModel& model, const Eigen::Ref<const Eigen::VectorXd>& x0) {
  if (model.lambda() <= 0.0)
    throw InputError("data_variance_if: requires lambda > 0");
  const long n = model.n();
  const auto& cfg = model.kernel_config();
  const Eigen::VectorXd k0 = ntk_cross(x0, model.gram().inputs, cfg);
  const double hbar_x0 = model.predict(x0);
  const double h0_x0 = model.h0_at(x0);

  // Column i holds M_{z_i}(X); z_i is a training point, so K(z_i, X) is the
  // i-th Gram column and no new kernel evaluations are needed.
  Eigen::MatrixXd m_cols(n, n);
  Eigen::VectorXd m_x0(n);
  for (long i = 0; i < n; ++i) {
    const double scale =
        (model.labels()[i] - (model.h0_values()[i] + model.gram_alpha()[i])) /
        model.lambda();
    m_cols.col(i) = model.gram_alpha() - scale * model.gram().entries.col(i);
    m_x0[i] = (hbar_x0 - h0_x0) - scale * k0[i];
  }
  const Eigen::VectorXd ifs =
      (model.solve_columns(m_cols).transpose() * k0) - m_x0;

  VarianceEstimate est;
  est.value = ifs.squaredNorm() / (double(n) * double(n));
  est.method = Method::IF;
  est.meta.n = n;
  est.meta.lambda = model.lambda();
  return est;
}

VarianceEstimate ensemble_variance(const std::vector<double>& predictions,
                                   double ci_level) {
  const int m = static_cast<int>(predictions.size());
  if (m < 2)
    throw InputError("ensemble_variance: need at least 2 predictions, got " +
                     std::to_string(m));
  if (!(ci_level > 0.0 && ci_level < 1.0))
    throw InputError("ensemble_variance: ci_level must lie in (0, 1)");

  const double mean =
      std::accumulate(predictions.begin(), predictions.end(), 0.0) / m;
  double ss = 0.0;
  for (double p : predictions) ss += (p - mean) * (p - mean);
  const double value = ss / (m - 1);

  const double alpha = 1.0 - ci_level;
  const double hi_q = chi2_quantile(m - 1, 1.0 - alpha / 2.0) / (m - 1);
  const double lo_q = chi2_quantile(m - 1, alpha / 2.0) / (m - 1);

  VarianceEstimate est;
  est.value = value;
  est.ci = std::make_pair(value / hi_q, value / lo_q);
  est.ci_level = ci_level;
  est.method = Method::EV;
  est.meta.m = m;
  return est;
}

std::vector<double> batch_predictions(
    const Dataset& data, int k, const NetConfig& net_config,
    const Eigen::Ref<const Eigen::VectorXd>& x0, std::uint64_t seed,
    int workers) {
  if (k < 2) throw InputError("batching: need k >= 2 batches");
  const long n = data.n();
  if (n < 2L * k)
    throw InputError("batching: batch too small, need n >= 2k (n = " +
                     std::to_string(n) + ", k = " + std::to_string(k) + ")");

  // Seeded uniform shuffle, then contiguous split into k batches of
  // floor(n/k); the remainder (at most k-1 points) is discarded so batch
  // sizes are exactly equal.
  std::vector<long> index(n);
  std::iota(index.begin(), index.end(), 0L);
  Rng shuffle_rng = Rng(seed).derive(0xB0);
  for (long i = n - 1; i > 0; --i) {
    const long j = static_cast<long>(shuffle_rng.next_u64() % (i + 1));
    std::swap(index[i], index[j]);
  }
  const long batch_size = n / k;

  std::vector<double> psi(k);
  parallel_for(
      k,
      [&](std::size_t b) {
        Dataset batch;
        batch.inputs.resize(batch_size, data.dim());
        batch.labels.resize(batch_size);
        for (long r = 0; r < batch_size; ++r) {
          const long src = index[b * batch_size + r];
          batch.inputs.row(r) = data.inputs.row(src);
          batch.labels[r] = data.labels[src];
        }
        batch.provenance = data.provenance;
        try {
          const TrainedNet net =
              train(net_config, batch, derive_seed(seed, 0xBA, b));
          psi[b] = forward(net, x0);
        } catch (const DivergedTrainingError& e) {
          throw DivergedTrainingError(
              "batch " + std::to_string(b) + ": " + e.what(), e.epoch());
        }
      },
      workers);
  return psi;
}

std::vector<double> ensemble_predictions(
    const Dataset& data, const NetConfig& net_config, int m,
    const Eigen::Ref<const Eigen::VectorXd>& x0, std::uint64_t seed,
    int workers) {
  if (m < 1) throw InputError("ensemble_predictions: need m >= 1");
  std::vector<double> preds(m);
  const Eigen::VectorXd x0_copy = x0;
  parallel_for(
      m,
      [&](std::size_t i) {
        const TrainedNet net = train(net_config, data, derive_seed(seed, i));
        preds[i] = forward(net, x0_copy);
      },
      workers);
  return preds;
}

VarianceEstimate batching(const Dataset& data, int k,
                          const NetConfig& net_config,
                          const Eigen::Ref<const Eigen::VectorXd>& x0,
                          double ci_level, std::uint64_t seed, int workers) {
  const std::vector<double> psi =
      batch_predictions(data, k, net_config, x0, seed, workers);

  const double mean = std::accumulate(psi.begin(), psi.end(), 0.0) / k;
  double ss = 0.0;
  for (double p : psi) ss += (p - mean) * (p - mean);
  const double s2 = ss / (k - 1);

  const double alpha = 1.0 - ci_level;
  const double hi_q = chi2_quantile(k - 1, 1.0 - alpha / 2.0) / (k - 1);
  const double lo_q = chi2_quantile(k - 1, alpha / 2.0) / (k - 1);

  VarianceEstimate est;
  est.value = s2 / k;
  est.ci = std::make_pair(est.value / hi_q, est.value / lo_q);
  est.ci_level = ci_level;
  est.method = Method::BA;
  est.meta.n = data.n();
  est.meta.m = k;
  est.meta.lambda = net_config.reg_lambda;
  est.meta.seed = seed;
  return est;
}

}  // namespace epivar
