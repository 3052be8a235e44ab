#include "epivar/oracle.hpp"

#include <string>

#include "epivar/errors.hpp"
#include "epivar/parallel.hpp"
#include "epivar/rng.hpp"

namespace epivar {

double empirical_variance(const std::vector<double>& values) {
  const long j = static_cast<long>(values.size());
  if (j < 2)
    throw InputError("empirical_variance: need at least 2 trials, got " +
                     std::to_string(j));
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= double(j);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / double(j - 1);
}

Decomposition decompose(double var_single, double var_ensemble, int m_prime) {
  if (m_prime < 2) throw InputError("decompose: m_prime must be >= 2");
  const double mp = m_prime;
  Decomposition out;
  out.tau2 = mp / (mp - 1.0) * (var_single - var_ensemble);
  out.sigma2_over_n = mp / (mp - 1.0) * var_ensemble - var_single / (mp - 1.0);
  out.negative_warning = out.tau2 < 0.0 || out.sigma2_over_n < 0.0;
  return out;
}

GroundTruth aggregate_ground_truth(const Eigen::MatrixXd& predictions) {
  const int j = static_cast<int>(predictions.rows());
  const int m_prime = static_cast<int>(predictions.cols());
  if (j < 2) throw InputError("aggregate_ground_truth: need >= 2 trials");
  if (m_prime < 2) throw InputError("aggregate_ground_truth: need m' >= 2");

  GroundTruth gt;
  gt.j = j;
  gt.m_prime = m_prime;
  gt.predictions = predictions;

  // Member-averaged single-model variance: each column is an identically
  // distributed single predictor, so averaging the per-column variances
  // estimates Var(h_1(x0)) with the data-driven noise shared against the
  // ensemble column cancelling in the decomposition.
  double v1 = 0.0;
  for (int k = 0; k < m_prime; ++k) {
    std::vector<double> col(predictions.col(k).data(),
                            predictions.col(k).data() + j);
    v1 += empirical_variance(col);
  }
  gt.var_single = v1 / double(m_prime);

  std::vector<double> means(j);
  for (int t = 0; t < j; ++t) means[t] = predictions.row(t).mean();
  gt.var_ensemble = empirical_variance(means);

  const Decomposition dec = decompose(gt.var_single, gt.var_ensemble, m_prime);
  gt.tau2 = dec.tau2;
  gt.sigma2_over_n = dec.sigma2_over_n;
  gt.negative_warning = dec.negative_warning;
  return gt;
}

GroundTruth ground_truth(const SyntheticSpec& spec, const NetConfig& net_config,
                         long n, const Eigen::Ref<const Eigen::VectorXd>& x0,
                         int j, int m_prime, std::uint64_t seed, int workers) {
  if (j < 2) throw InputError("ground_truth: need j >= 2 trials");
  if (m_prime < 2) throw InputError("ground_truth: need m_prime >= 2");

  std::vector<std::uint64_t> seeds(j);
  std::vector<Dataset> datasets(j);
  for (int t = 0; t < j; ++t) {
    seeds[t] = derive_seed(seed, 0xDA, t);
    datasets[t] = sample(spec, n, seeds[t]);
  }

  Eigen::MatrixXd predictions(j, m_prime);
  const Eigen::VectorXd x0_copy = x0;
  parallel_for(
      static_cast<std::size_t>(j) * m_prime,
      [&](std::size_t task) {
        const int t = static_cast<int>(task / m_prime);
        const int k = static_cast<int>(task % m_prime);
        try {
          const TrainedNet net =
              train(net_config, datasets[t], derive_seed(seed, 0x4E, t, k));
          predictions(t, k) = forward(net, x0_copy);
        } catch (const DivergedTrainingError& e) {
          throw DivergedTrainingError("trial " + std::to_string(t) +
                                          ", member " + std::to_string(k) +
                                          ": " + e.what(),
                                      e.epoch());
        }
      },
      workers);

  GroundTruth gt = aggregate_ground_truth(predictions);
  gt.seeds = std::move(seeds);
  return gt;
}

}  // namespace epivar
