#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>

namespace epivar {

/// The synthetic regression families used throughout the experiments.
///
/// SinSum:   X ~ Unif([0, 0.2]^d),      Y = sum_i sin(x_i)            + N(0, 0.1^2)
/// ExpQuad:  X ~ N(0, 0.1^2 I_d),       Y = sum_i exp(x_i) + x_i^2    + N(0, (0.1 d)^2)
/// CosCubic: X ~ N(0, 0.1^2 I_d),       Y = sum_i cos(x_i) + x_i^3    + N(0, (0.1 d)^2)
enum class Family { SinSum, ExpQuad, CosCubic };

Family family_from_string(const std::string& name);
std::string to_string(Family family);

struct SyntheticSpec {
  Family family = Family::SinSum;
  int dim = 1;
};

/// Per-column affine transforms applied by load_csv when standardize is on.
struct Standardization {
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_std;
  double label_mean = 0.0;
  double label_std = 1.0;
};

struct Provenance {
  enum class Kind { Synthetic, Csv } kind = Kind::Synthetic;
  // Synthetic
  SyntheticSpec spec;
  std::uint64_t seed = 0;
  // Csv
  std::string path;
  std::string label_column;
  std::optional<Standardization> standardization;
};

struct Dataset {
  Eigen::MatrixXd inputs;  // n x d, one row per observation
  Eigen::VectorXd labels;  // n
  Provenance provenance;

  long n() const { return inputs.rows(); }
  int dim() const { return static_cast<int>(inputs.cols()); }
};

/// Draws n i.i.d. observations from the family. The stream is consumed one
/// row at a time (all d input coordinates, then the label noise), so for a
/// fixed seed the first rows of sample(spec, n1, seed) and
/// sample(spec, n2, seed) coincide, so trials at different n share draws.
Dataset sample(const SyntheticSpec& spec, long n, std::uint64_t seed);

/// Noiseless regression function of the family at x.
double regression_mean(const SyntheticSpec& spec,
                       const Eigen::Ref<const Eigen::VectorXd>& x);

/// Fixed test point for synthetic data: the constant-0.1 vector.
Eigen::VectorXd test_point(const SyntheticSpec& spec);

/// Test point for a concrete dataset: the constant-0.1 vector when the data
/// is synthetic, the column-wise mean feature vector when it came from CSV.
Eigen::VectorXd test_point(const Dataset& data);

/// Reads a numeric CSV (optional header row). label_column selects the label
/// by header name, or by zero-based index when it is not a header name.
/// With standardize, inputs and labels are z-scored per column and the
/// transforms recorded in the dataset's provenance.
/// Throws ParseError (with row/column) on structural or numeric problems.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 bool standardize);

/// Writes inputs plus a final label column, round-trippable bit-exactly by
/// load_csv (shortest-representation float formatting).
void write_csv(const Dataset& data, const std::string& path);

}  // namespace epivar
