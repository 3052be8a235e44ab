// Command-line front end: estimate | ground-truth | table | selfcheck.
// Exit codes: 0 success, 1 config error, 2 numeric failure, 3 partial grid
// failure.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "epivar/errors.hpp"
#include "epivar/runner.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::int64_t seed = -1;
  std::string out_dir;
  int workers = 0;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
  auto* opt = cmd->add_option("-c,--config", flags.config_path,
                              "Declarative JSON run configuration");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "Override the config seed");
  cmd->add_option("--out-dir", flags.out_dir, "Override the output directory");
  cmd->add_option("--workers", flags.workers,
                  "Worker threads (default: EPIVAR_WORKERS or all cores)");
  cmd->add_option("--format", flags.format, "Result echo format on stdout")
      ->check(CLI::IsMember({"csv", "json"}));
}

epivar::RunConfig resolve(const CommonFlags& flags) {
  epivar::RunConfig config = epivar::load_run_config(flags.config_path);
  if (flags.seed >= 0) config.seed = static_cast<std::uint64_t>(flags.seed);
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  if (flags.workers > 0) config.workers = flags.workers;
  return config;
}

void echo_rows(const std::vector<epivar::ResultRow>& rows,
               const std::string& format) {
  if (format == "csv") {
    std::cout << epivar::rows_to_csv(rows);
  } else {
    std::cout << "{\n  \"rows\": [\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      std::cout << "    {\"method\": \"" << r.method << "\", \"quantity\": \""
                << r.quantity << "\", \"value\": " << r.value << "}"
                << (i + 1 < rows.size() ? ",\n" : "\n");
    }
    std::cout << "  ]\n}\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Epistemic-variance estimation for wide ReLU networks"};
  app.require_subcommand(1);

  CommonFlags est_flags, gt_flags, table_flags;
  auto* est = app.add_subcommand(
      "estimate", "Run the selected estimators (IF, EV, BA) on one dataset");
  add_common(est, est_flags, true);
  auto* gt = app.add_subcommand(
      "ground-truth", "Retraining-based ground-truth variances (synthetic only)");
  add_common(gt, gt_flags, true);
  auto* table = app.add_subcommand(
      "table", "Sweep a dims x sizes grid and emit GT/estimate/Diff rows");
  add_common(table, table_flags, true);
  app.add_subcommand("selfcheck", "Run the fast invariant suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (est->parsed()) {
      echo_rows(epivar::run_estimate(resolve(est_flags)), est_flags.format);
    } else if (gt->parsed()) {
      echo_rows(epivar::run_ground_truth(resolve(gt_flags)), gt_flags.format);
    } else if (table->parsed()) {
      const epivar::TableResult result =
          epivar::run_table(resolve(table_flags));
      echo_rows(result.rows, table_flags.format);
      for (const auto& err : result.cell_errors)
        std::cerr << "cell failed: " << err << "\n";
      if (result.failed_cells > 0) return 3;
    } else {
      if (!epivar::selfcheck(std::cout)) return 2;
    }
  } catch (const epivar::InputError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const epivar::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 2;
  } catch (const epivar::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
