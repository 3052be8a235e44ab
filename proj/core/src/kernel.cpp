#include "epivar/kernel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "epivar/errors.hpp"
#include "epivar/net.hpp"

namespace epivar {

void KernelConfig::validate() const {
  if (depth < 1) throw InputError("KernelConfig: depth must be >= 1");
  if (!(jitter >= 0.0)) throw InputError("KernelConfig: jitter must be >= 0");
}

double population_ntk(const Eigen::Ref<const Eigen::VectorXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& x_prime,
                      const KernelConfig& config, bool* degenerate) {
  config.validate();
  if (x.size() != x_prime.size())
    throw InputError("population_ntk: dimension mismatch (" +
                     std::to_string(x.size()) + " vs " +
                     std::to_string(x_prime.size()) + ")");
  if (x.size() < 1) throw InputError("population_ntk: empty input");
  if (degenerate) *degenerate = false;

  const double a = x.squaredNorm();
  const double b = x_prime.squaredNorm();
  if (a == 0.0 || b == 0.0) {
    // K(0, x') = 0 by continuity of the closed form.
    if (degenerate && a == 0.0 && b == 0.0) *degenerate = true;
    return 0.0;
  }

  constexpr double pi = std::numbers::pi;
  const double root_ab = std::sqrt(a * b);
  const double c = x.dot(x_prime);

  // Correlation of the first pre-activations. acos is infinitely steep at
  // +-1, so exact collinearity must enter as an exact +-1: the Lagrange
  // identity |x|^2 |x'|^2 - (x.x')^2 = sum_{i<j} (x_i x'_j - x_j x'_i)^2
  // decides it without cancellation. +-1 are fixed points of the layer map
  // below, so the exactness survives depth.
  double cos_t = std::clamp(c / root_ab, -1.0, 1.0);
  if (std::abs(cos_t) >= 1.0 - 1e-12) {
    double cross2 = 0.0;
    for (long i = 0; i < x.size(); ++i)
      for (long j = i + 1; j < x.size(); ++j) {
        const double cr = x[i] * x_prime[j] - x[j] * x_prime[i];
        cross2 += cr * cr;
      }
    if (cross2 == 0.0) cos_t = c > 0.0 ? 1.0 : -1.0;
  }

  double k = c;  // Sigma^(0)
  for (int l = 1; l <= config.depth; ++l) {
    double sigma_dot;
    if (cos_t == 1.0) {
      sigma_dot = 1.0;  // theta = 0: Sigma = root_ab exactly
    } else if (cos_t == -1.0) {
      sigma_dot = 0.0;  // theta = pi: Sigma = 0 exactly
      cos_t = 0.0;
    } else {
      const double t = std::acos(cos_t);
      cos_t = (std::sin(t) + (pi - t) * cos_t) / pi;
      sigma_dot = (pi - t) / pi;
    }
    k = k * sigma_dot + root_ab * cos_t;
  }
  return k;
}

GramMatrix ntk_gram(const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                    const KernelConfig& config) {
  config.validate();
  const long n = inputs.rows();
  if (n < 1 || inputs.cols() < 1)
    throw InputError("ntk_gram: need at least one row and one column");
  GramMatrix gram;
  gram.inputs = inputs;
  gram.entries.resize(n, n);
  for (long i = 0; i < n; ++i) {
    for (long j = i; j < n; ++j) {
      const double v = population_ntk(inputs.row(i).transpose(),
                                      inputs.row(j).transpose(), config);
      gram.entries(i, j) = v;
      gram.entries(j, i) = v;
    }
  }
  return gram;
}

Eigen::VectorXd ntk_cross(const Eigen::Ref<const Eigen::VectorXd>& x0,
                          const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                          const KernelConfig& config) {
  const long n = inputs.rows();
  Eigen::VectorXd k(n);
  for (long i = 0; i < n; ++i)
    k[i] = population_ntk(x0, inputs.row(i).transpose(), config);
  return k;
}

double empirical_ntk(const TrainedNet& net,
                     const Eigen::Ref<const Eigen::VectorXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& x_prime) {
  const auto gx = param_gradient(net, x);
  const auto gxp = param_gradient(net, x_prime);
  double dot = 0.0;
  for (std::size_t l = 0; l < gx.size(); ++l)
    dot += gx[l].cwiseProduct(gxp[l]).sum();
  return dot;
}

double top_eigenvalue(const Eigen::Ref<const Eigen::MatrixXd>& sym,
                      int iterations) {
  const long n = sym.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(double(n));
  double eig = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd w = sym * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double next = w.dot(sym * w);
    if (it > 8 && std::abs(next - eig) <= 1e-10 * std::abs(next)) {
      eig = next;
      break;
    }
    eig = next;
    v = w;
  }
  return eig;
}

}  // namespace epivar
