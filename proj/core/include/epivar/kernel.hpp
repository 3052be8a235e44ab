#pragma once

#include <Eigen/Core>

namespace epivar {

struct TrainedNet;  // net.hpp

/// Configuration of the ReLU NTK: depth is the number of hidden layers L.
/// jitter is an absolute value added to Gram diagonals before factorization;
/// 0 means "let the solver pick", and values above 1e-6 times the mean Gram
/// diagonal are rejected by the solver as they would visibly bias results.
struct KernelConfig {
  int depth = 1;
  double jitter = 0.0;

  void validate() const;
};

/// Kernel matrix over a set of inputs, kept together with the inputs it was
/// built from so downstream consumers can evaluate cross-kernels.
struct GramMatrix {
  Eigen::MatrixXd entries;  // n x n, symmetric PSD
  Eigen::MatrixXd inputs;   // n x d
};

/// Infinite-width NTK of a depth-L bias-free ReLU network.
///
/// The layer maps are evaluated with the ReLU arc-cosine closed forms:
/// with a, b the previous-layer self-covariances and c the cross term,
/// cos t = clamp(c / sqrt(a b), -1, 1),
///   next c  = (sqrt(a b) / pi) * (sin t + (pi - t) cos t)
///   deriv   = (pi - t) / pi
/// and the kernel accumulates K <- K * deriv + next_c per layer starting
/// from K = x . x'. Self-covariances are ReLU-invariant, so K(x, x) is
/// exactly (L + 1) * |x|^2.
///
/// A zero input makes the angle undefined; the closed form's limit is 0 and
/// that value is returned, with *degenerate set when both inputs are zero.
double population_ntk(const Eigen::Ref<const Eigen::VectorXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& x_prime,
                      const KernelConfig& config, bool* degenerate = nullptr);

/// Gram matrix of population_ntk over the rows of inputs. Only the upper
/// triangle is evaluated and mirrored, so symmetry is exact.
GramMatrix ntk_gram(const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                    const KernelConfig& config);

/// Kernel vector (K(x0, x_1), ..., K(x0, x_n)) against the rows of inputs.
Eigen::VectorXd ntk_cross(const Eigen::Ref<const Eigen::VectorXd>& x0,
                          const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                          const KernelConfig& config);

/// Finite-width NTK of a concrete network: the inner product of the
/// parameter gradients of the output at x and x_prime.
double empirical_ntk(const TrainedNet& net,
                     const Eigen::Ref<const Eigen::VectorXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& x_prime);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration
/// (deterministic start vector). Used for learning-rate suggestions.
double top_eigenvalue(const Eigen::Ref<const Eigen::MatrixXd>& sym,
                      int iterations = 128);

}  // namespace epivar
