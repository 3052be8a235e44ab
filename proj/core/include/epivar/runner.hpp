#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "epivar/data.hpp"
#include "epivar/kernel.hpp"
#include "epivar/krr.hpp"
#include "epivar/net.hpp"

namespace epivar {

/// Which estimators a run executes, with their replication parameters.
struct EstimatorSelection {
  bool ev = true;
  bool infl = true;
  bool ba = true;
  int m = 50;             // EV ensemble size
  int k = 5;              // BA batch count (= m')
  double ci_level = 0.95;
};

struct OracleSettings {
  int j = 100;
  int m_prime = 5;
};

/// Exactly one dataset source per run.
struct DataSource {
  enum class Kind { Synthetic, Csv } kind = Kind::Synthetic;
  SyntheticSpec synthetic{Family::SinSum, 2};
  long n = 200;
  std::string csv_path;
  std::string label_column = "y";
  bool standardize = true;
};

struct RunConfig {
  DataSource dataset;
  NetConfig net;           // input_dim is overwritten from the dataset
  bool auto_learning_rate = true;  // derive the step from the Gram spectrum
  KernelConfig kernel;
  double krr_lambda = 1e-3;
  H0Mode h0_mode = H0Mode::AnalyticZero;
  int h0_m0 = 500;  // initializations averaged in EmpiricalAverage mode
  EstimatorSelection estimators;
  OracleSettings oracle;
  std::uint64_t seed = 42;
  // sweep grid for the `table` command; defaults mirror a single cell
  std::vector<int> table_dims;
  std::vector<long> table_sizes;
  // execution knobs (not part of the semantic hash)
  std::string out_dir = ".";
  int workers = 0;  // 0 = default_worker_count()

  void validate() const;
};

/// One output record: method x quantity x grid cell.
struct ResultRow {
  int d = 0;
  long n = 0;
  std::string method;    // GT | IF | EV | BA
  std::string quantity;  // tau2 | sigma2_over_n | ensemble_total | var_single | var_ensemble
  double value = 0.0;
  std::optional<double> ci_lower;
  std::optional<double> ci_upper;
  std::optional<double> gt_value;  // matching ground truth, when available
  std::optional<double> diff;      // value - gt_value
  std::uint64_t seed = 0;
  std::string config_hash;
  double seconds = 0.0;  // serialized to JSON only; CSV stays rerun-identical
};

struct CellInfo {
  int d = 0;
  long n = 0;
  bool failed = false;
  std::string error;
  double effective_learning_rate = 0.0;
  double krr_predict = 0.0;   // when IF ran
  double ev_mean = 0.0;       // when EV ran
  bool gt_negative_warning = false;
};

struct TableResult {
  std::vector<ResultRow> rows;
  std::vector<CellInfo> cells;  // grid order (dims outer, sizes inner)
  int total_cells = 0;
  int failed_cells = 0;
  std::vector<std::string> cell_errors;
  /// Per-dim least-squares slope of log(IF sigma2_over_n) against log(n);
  /// set when the sweep has at least two sizes and IF ran.
  std::vector<std::pair<int, double>> scaling_slopes;
};

/// Substream tags under a cell seed; fixed so external tooling can replay
/// exactly the draws a pipeline made.
namespace streams {
inline constexpr std::uint64_t kData = 1;  // dataset sampling
inline constexpr std::uint64_t kEv = 2;    // EV ensemble member training
inline constexpr std::uint64_t kBa = 3;    // batching shuffle + training
inline constexpr std::uint64_t kGt = 4;    // ground-truth trials
inline constexpr std::uint64_t kH0 = 5;    // empirical h0 initializations
}  // namespace streams

/// 64-bit FNV-1a hash of the canonical (key-sorted) JSON form of the
/// semantic config fields, as a 16-hex-digit string. Reordering keys in the
/// config file does not change it; changing any semantic value does.
std::string config_hash(const RunConfig& config);

/// Parses the declarative JSON config file (schema in the README).
RunConfig load_run_config(const std::string& path);

/// Runs the selected estimators on the configured dataset and test point,
/// writes <out_dir>/estimate.csv and estimate.json, and returns the rows.
std::vector<ResultRow> run_estimate(const RunConfig& config);

/// Retraining ground truth (synthetic sources only), writes
/// <out_dir>/ground_truth.{csv,json}. CSV-backed configs are rejected.
std::vector<ResultRow> run_ground_truth(const RunConfig& config);

/// Sweeps the dims x sizes grid: per cell runs ground truth plus the
/// selected estimators and emits GT/estimate/Diff rows in grid order.
/// Failures are recorded per cell and do not abort the sweep. Writes
/// <out_dir>/table.csv and table.json.
TableResult run_table(const RunConfig& config);

/// Fast invariant suites (kernel identities, chi-squared round trip,
/// decomposition algebra, estimator symmetries, stream determinism).
/// Prints one line per suite; returns true when everything holds.
bool selfcheck(std::ostream& log);

/// Deterministic per-cell seed, shared by every pipeline so that identical
/// (config seed, d, n) always replays identical work.
std::uint64_t cell_seed(std::uint64_t config_seed, int d, long n);

/// CSV serialization of rows (stable column set, shortest round-trip float
/// formatting). The same rows always serialize to the same bytes.
std::string rows_to_csv(const std::vector<ResultRow>& rows);

}  // namespace epivar
