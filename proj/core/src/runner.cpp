#include "epivar/runner.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <Eigen/Dense>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "epivar/errors.hpp"
#include "epivar/estimators.hpp"
#include "epivar/oracle.hpp"
#include "epivar/parallel.hpp"
#include "epivar/rng.hpp"
#include "epivar/stats.hpp"

namespace epivar {

namespace {

using nlohmann::json;

using streams::kBa;
using streams::kData;
using streams::kEv;
using streams::kGt;
using streams::kH0;

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

json semantic_json(const RunConfig& c) {
  json j;
  if (c.dataset.kind == DataSource::Kind::Synthetic) {
    j["dataset"] = {{"family", to_string(c.dataset.synthetic.family)},
                    {"dim", c.dataset.synthetic.dim},
                    {"n", c.dataset.n}};
  } else {
    j["dataset"] = {{"csv", c.dataset.csv_path},
                    {"label_column", c.dataset.label_column},
                    {"standardize", c.dataset.standardize}};
  }
  j["net"] = {{"hidden_widths", c.net.hidden_widths},
              {"reg_lambda", c.net.reg_lambda},
              {"learning_rate", c.auto_learning_rate ? 0.0 : c.net.learning_rate},
              {"auto_learning_rate", c.auto_learning_rate},
              {"max_epochs", c.net.max_epochs},
              {"loss_tol", c.net.loss_tol}};
  j["kernel"] = {{"depth", c.kernel.depth}, {"jitter", c.kernel.jitter}};
  j["krr"] = {{"lambda", c.krr_lambda},
              {"h0_mode", c.h0_mode == H0Mode::AnalyticZero ? "analytic-zero"
                                                            : "empirical-average"},
              {"m0", c.h0_m0}};
  j["estimators"] = {{"ev", c.estimators.ev},
                     {"if", c.estimators.infl},
                     {"ba", c.estimators.ba},
                     {"m", c.estimators.m},
                     {"k", c.estimators.k},
                     {"ci_level", c.estimators.ci_level}};
  j["oracle"] = {{"j", c.oracle.j}, {"m_prime", c.oracle.m_prime}};
  j["seed"] = c.seed;
  j["table"] = {{"dims", c.table_dims}, {"sizes", c.table_sizes}};
  return j;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

std::string config_hash(const RunConfig& config) {
  const std::uint64_t h = fnv1a(semantic_json(config).dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

void RunConfig::validate() const {
  if (dataset.kind == DataSource::Kind::Synthetic) {
    if (dataset.synthetic.dim < 1)
      throw InputError("config: dataset dim must be >= 1");
    if (dataset.n < 1) throw InputError("config: dataset n must be >= 1");
  } else if (dataset.csv_path.empty()) {
    throw InputError("config: csv dataset needs a path");
  }
  kernel.validate();
  if (!(krr_lambda >= 0.0)) throw InputError("config: krr lambda must be >= 0");
  if (estimators.ev && estimators.m < 2)
    throw InputError("config: EV needs m >= 2");
  if (estimators.ba && estimators.k < 2)
    throw InputError("config: BA needs k >= 2");
  if (!(estimators.ci_level > 0.0 && estimators.ci_level < 1.0))
    throw InputError("config: ci_level must lie in (0, 1)");
  if (oracle.j < 2) throw InputError("config: oracle j must be >= 2");
  if (oracle.m_prime < 2) throw InputError("config: oracle m_prime must be >= 2");
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError("config file " + path + ": " + e.what());
  }

  RunConfig c;
  try {
    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      if (d.contains("csv") == d.contains("family"))
        throw InputError(
            "config: dataset must name exactly one source (family or csv)");
      if (d.contains("csv")) {
        c.dataset.kind = DataSource::Kind::Csv;
        c.dataset.csv_path = d["csv"].get<std::string>();
        c.dataset.label_column = d.value("label_column", std::string("y"));
        c.dataset.standardize = d.value("standardize", true);
      } else {
        c.dataset.kind = DataSource::Kind::Synthetic;
        c.dataset.synthetic.family =
            family_from_string(d.value("family", std::string("sin-sum")));
        c.dataset.synthetic.dim = d.value("dim", 2);
        c.dataset.n = d.value("n", 200L);
      }
    }
    if (j.contains("net")) {
      const auto& n = j["net"];
      if (n.contains("hidden_widths"))
        c.net.hidden_widths = n["hidden_widths"].get<std::vector<int>>();
      c.net.reg_lambda = n.value("reg_lambda", c.net.reg_lambda);
      c.net.max_epochs = n.value("max_epochs", c.net.max_epochs);
      c.net.loss_tol = n.value("loss_tol", c.net.loss_tol);
      if (n.contains("learning_rate")) {
        if (n["learning_rate"].is_string()) {
          if (n["learning_rate"].get<std::string>() != "auto")
            throw InputError("config: learning_rate must be a number or \"auto\"");
          c.auto_learning_rate = true;
        } else {
          c.net.learning_rate = n["learning_rate"].get<double>();
          c.auto_learning_rate = false;
        }
      }
    }
    if (j.contains("kernel")) {
      c.kernel.depth = j["kernel"].value("depth", c.kernel.depth);
      c.kernel.jitter = j["kernel"].value("jitter", c.kernel.jitter);
    }
    if (j.contains("krr")) {
      c.krr_lambda = j["krr"].value("lambda", c.krr_lambda);
      const std::string mode =
          j["krr"].value("h0_mode", std::string("analytic-zero"));
      if (mode == "analytic-zero")
        c.h0_mode = H0Mode::AnalyticZero;
      else if (mode == "empirical-average")
        c.h0_mode = H0Mode::EmpiricalAverage;
      else
        throw InputError("config: unknown h0_mode '" + mode + "'");
      c.h0_m0 = j["krr"].value("m0", c.h0_m0);
    }
    if (j.contains("estimators")) {
      const auto& e = j["estimators"];
      c.estimators.ev = e.contains("ev");
      c.estimators.infl = e.contains("if");
      c.estimators.ba = e.contains("ba");
      if (c.estimators.ev) c.estimators.m = e["ev"].value("m", c.estimators.m);
      if (c.estimators.ba) c.estimators.k = e["ba"].value("k", c.estimators.k);
      c.estimators.ci_level = e.value("ci_level", c.estimators.ci_level);
    }
    if (j.contains("oracle")) {
      c.oracle.j = j["oracle"].value("j", c.oracle.j);
      c.oracle.m_prime = j["oracle"].value("m_prime", c.oracle.m_prime);
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("table")) {
      if (j["table"].contains("dims"))
        c.table_dims = j["table"]["dims"].get<std::vector<int>>();
      if (j["table"].contains("sizes"))
        c.table_sizes = j["table"]["sizes"].get<std::vector<long>>();
    }
    c.out_dir = j.value("out_dir", c.out_dir);
    c.workers = j.value("workers", c.workers);
  } catch (const json::exception& e) {
    throw InputError("config file " + path + ": " + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t cell_seed(std::uint64_t config_seed, int d, long n) {
  return derive_seed(config_seed, 0xCE11, static_cast<std::uint64_t>(d),
                     static_cast<std::uint64_t>(n));
}

namespace {

struct CellDiagnostics {
  double effective_learning_rate = 0.0;
  double krr_predict = 0.0;
  double ev_mean = 0.0;
  bool gt_negative_warning = false;
  double seconds_gt = 0.0, seconds_ev = 0.0, seconds_if = 0.0, seconds_ba = 0.0;
  json gt_record;  // full GroundTruth record when the oracle ran
  std::vector<std::pair<int, double>> ev_curve;  // EV over nested prefixes
};

// Shared per-cell pipeline. Ground truth runs only for synthetic sources.
std::vector<ResultRow> run_cell(const RunConfig& config, int d, long n,
                                bool with_gt, bool with_estimators,
                                const std::string& hash, int workers,
                                CellDiagnostics* diag_out) {
  const std::uint64_t cseed = cell_seed(config.seed, d, n);

  Dataset data;
  SyntheticSpec spec = config.dataset.synthetic;
  if (config.dataset.kind == DataSource::Kind::Synthetic) {
    spec.dim = d;
    data = sample(spec, n, derive_seed(cseed, kData));
  } else {
    data = load_csv(config.dataset.csv_path, config.dataset.label_column,
                    config.dataset.standardize);
    d = data.dim();
    n = data.n();
  }
  const Eigen::VectorXd x0 = test_point(data);

  NetConfig net = config.net;
  net.input_dim = data.dim();

  const GramMatrix gram = ntk_gram(data.inputs, config.kernel);
  if (config.auto_learning_rate) {
    net.learning_rate = stable_learning_rate(top_eigenvalue(gram.entries),
                                             data.n(), net.reg_lambda);
  }

  CellDiagnostics diag;
  diag.effective_learning_rate = net.learning_rate;

  auto annotate = [&hash](const std::string& where, const auto& fn) {
    try {
      fn();
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what() + " [config " + hash + "]");
    } catch (const DivergedTrainingError& e) {
      throw DivergedTrainingError(
          where + ": " + e.what() + " [config " + hash + "]", e.epoch());
    } catch (const NumericError& e) {
      throw NumericError(where + ": " + e.what() + " [config " + hash + "]");
    }
  };

  std::vector<ResultRow> rows;
  auto push = [&](const std::string& method, const std::string& quantity,
                  double value, double seconds) -> ResultRow& {
    ResultRow row;
    row.d = d;
    row.n = n;
    row.method = method;
    row.quantity = quantity;
    row.value = value;
    row.seed = config.seed;
    row.config_hash = hash;
    row.seconds = seconds;
    rows.push_back(std::move(row));
    return rows.back();
  };

  GroundTruth gt;
  if (with_gt) {
    annotate("GT", [&] {
      const double t0 = now_seconds();
      gt = ground_truth(spec, net, n, x0, config.oracle.j,
                        config.oracle.m_prime, derive_seed(cseed, kGt),
                        workers);
      diag.seconds_gt = now_seconds() - t0;
    });
    diag.gt_negative_warning = gt.negative_warning;
    diag.gt_record = {{"j", gt.j},
                      {"m_prime", gt.m_prime},
                      {"var_single", gt.var_single},
                      {"var_ensemble", gt.var_ensemble},
                      {"tau2", gt.tau2},
                      {"sigma2_over_n", gt.sigma2_over_n},
                      {"negative_warning", gt.negative_warning},
                      {"trial_seeds", gt.seeds}};
    push("GT", "tau2", gt.tau2, diag.seconds_gt);
    push("GT", "sigma2_over_n", gt.sigma2_over_n, 0.0);
    push("GT", "ensemble_total", gt.sigma2_over_n + gt.tau2 / gt.m_prime, 0.0);
    push("GT", "var_single", gt.var_single, 0.0);
    push("GT", "var_ensemble", gt.var_ensemble, 0.0);
  }
  auto gt_for = [&](const std::string& quantity) -> std::optional<double> {
    if (!with_gt) return std::nullopt;
    if (quantity == "tau2") return gt.tau2;
    if (quantity == "sigma2_over_n") return gt.sigma2_over_n;
    if (quantity == "ensemble_total")
      return gt.sigma2_over_n + gt.tau2 / gt.m_prime;
    return std::nullopt;
  };
  auto attach_gt = [&](ResultRow& row) {
    if (const auto g = gt_for(row.quantity)) {
      row.gt_value = *g;
      row.diff = row.value - *g;
    }
  };

  if (with_estimators && config.estimators.infl) {
    annotate("IF", [&] {
      const double t0 = now_seconds();
      H0Spec h0;
      if (config.h0_mode == H0Mode::EmpiricalAverage) {
        h0.mode = H0Mode::EmpiricalAverage;
        h0.net = net;
        h0.m0 = config.h0_m0;
        h0.seed = derive_seed(cseed, kH0);
      }
      const KrrModel model =
          KrrModel::fit(data, config.krr_lambda, config.kernel, h0);
      diag.krr_predict = model.predict(x0);
      const VarianceEstimate est = data_variance_if(model, x0);
      diag.seconds_if = now_seconds() - t0;
      auto& row = push("IF", "sigma2_over_n", est.value, diag.seconds_if);
      attach_gt(row);
    });
  }
  if (with_estimators && config.estimators.ev) {
    annotate("EV", [&] {
      const double t0 = now_seconds();
      const std::vector<double> preds = ensemble_predictions(
          data, net, config.estimators.m, x0, derive_seed(cseed, kEv),
          workers);
      const VarianceEstimate est =
          ensemble_variance(preds, config.estimators.ci_level);
      diag.seconds_ev = now_seconds() - t0;
      double mean = 0.0;
      for (double p : preds) mean += p;
      diag.ev_mean = mean / preds.size();
      // EV as a function of ensemble size, from nested prefixes of the
      // same member predictions (how many training runs EV really needs).
      for (int m_sub = 2; m_sub <= int(preds.size()); ++m_sub) {
        const std::vector<double> prefix(preds.begin(), preds.begin() + m_sub);
        diag.ev_curve.emplace_back(
            m_sub, ensemble_variance(prefix, config.estimators.ci_level).value);
      }
      auto& row = push("EV", "tau2", est.value, diag.seconds_ev);
      row.ci_lower = est.ci->first;
      row.ci_upper = est.ci->second;
      attach_gt(row);
    });
  }
  if (with_estimators && config.estimators.ba) {
    annotate("BA", [&] {
      const double t0 = now_seconds();
      const VarianceEstimate est =
          batching(data, config.estimators.k, net, x0,
                   config.estimators.ci_level, derive_seed(cseed, kBa),
                   workers);
      diag.seconds_ba = now_seconds() - t0;
      auto& row = push("BA", "ensemble_total", est.value, diag.seconds_ba);
      row.ci_lower = est.ci->first;
      row.ci_upper = est.ci->second;
      attach_gt(row);
    });
  }

  if (diag_out) *diag_out = diag;
  return rows;
}

json row_to_json(const ResultRow& r) {
  json j;
  j["d"] = r.d;
  j["n"] = r.n;
  j["method"] = r.method;
  j["quantity"] = r.quantity;
  j["value"] = r.value;
  if (r.ci_lower) j["ci_lower"] = *r.ci_lower;
  if (r.ci_upper) j["ci_upper"] = *r.ci_upper;
  if (r.gt_value) j["gt_value"] = *r.gt_value;
  if (r.diff) j["diff"] = *r.diff;
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["seconds"] = r.seconds;
  return j;
}

void write_outputs(const RunConfig& config, const std::string& stem,
                   const std::vector<ResultRow>& rows, const json& extra) {
  std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path base =
      std::filesystem::path(config.out_dir) / stem;
  {
    std::ofstream csv(base.string() + ".csv");
    if (!csv) throw InputError("cannot write " + base.string() + ".csv");
    csv << rows_to_csv(rows);
  }
  json j = extra;
  j["config_hash"] = config_hash(config);
  j["rows"] = json::array();
  for (const auto& r : rows) j["rows"].push_back(row_to_json(r));
  std::ofstream js(base.string() + ".json");
  if (!js) throw InputError("cannot write " + base.string() + ".json");
  js << j.dump(2) << "\n";
}

}  // namespace

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "d,n,method,quantity,value,ci_lower,ci_upper,gt_value,diff,seed,"
         "config_hash\n";
  for (const auto& r : rows) {
    out << r.d << ',' << r.n << ',' << r.method << ',' << r.quantity << ','
        << format_double(r.value) << ',';
    if (r.ci_lower) out << format_double(*r.ci_lower);
    out << ',';
    if (r.ci_upper) out << format_double(*r.ci_upper);
    out << ',';
    if (r.gt_value) out << format_double(*r.gt_value);
    out << ',';
    if (r.diff) out << format_double(*r.diff);
    out << ',' << r.seed << ',' << r.config_hash << '\n';
  }
  return out.str();
}

std::vector<ResultRow> run_estimate(const RunConfig& config) {
  config.validate();
  const std::string hash = config_hash(config);
  const int workers =
      config.workers > 0 ? config.workers : default_worker_count();
  CellDiagnostics diag;
  const int d = config.dataset.kind == DataSource::Kind::Synthetic
                    ? config.dataset.synthetic.dim
                    : 0;
  std::vector<ResultRow> rows =
      run_cell(config, d, config.dataset.n, /*with_gt=*/false,
               /*with_estimators=*/true, hash, workers, &diag);
  json extra;
  extra["diagnostics"] = {
      {"effective_learning_rate", diag.effective_learning_rate},
      {"krr_predict", diag.krr_predict},
      {"ev_mean", diag.ev_mean}};
  if (!diag.ev_curve.empty()) {
    json curve = json::array();
    std::filesystem::create_directories(config.out_dir);
    std::ofstream curve_csv(std::filesystem::path(config.out_dir) /
                            "ev_curve.csv");
    curve_csv << "m,ev\n";
    for (const auto& [m_sub, value] : diag.ev_curve) {
      curve.push_back({{"m", m_sub}, {"ev", value}});
      curve_csv << m_sub << ',' << format_double(value) << '\n';
    }
    extra["ev_curve"] = curve;
  }
  write_outputs(config, "estimate", rows, extra);
  return rows;
}

std::vector<ResultRow> run_ground_truth(const RunConfig& config) {
  config.validate();
  if (config.dataset.kind != DataSource::Kind::Synthetic)
    throw InputError(
        "ground truth is unsupported for CSV-backed datasets (no generative "
        "process to redraw from)");
  const std::string hash = config_hash(config);
  const int workers =
      config.workers > 0 ? config.workers : default_worker_count();
  CellDiagnostics diag;
  std::vector<ResultRow> rows =
      run_cell(config, config.dataset.synthetic.dim, config.dataset.n,
               /*with_gt=*/true, /*with_estimators=*/false, hash, workers,
               &diag);
  json extra;
  extra["diagnostics"] = {
      {"effective_learning_rate", diag.effective_learning_rate},
      {"gt_negative_warning", diag.gt_negative_warning}};
  extra["ground_truth"] = diag.gt_record;
  write_outputs(config, "ground_truth", rows, extra);
  return rows;
}

TableResult run_table(const RunConfig& config) {
  config.validate();
  if (config.dataset.kind != DataSource::Kind::Synthetic)
    throw InputError("table sweeps need a synthetic dataset source");
  if (config.table_dims.empty() || config.table_sizes.empty())
    throw InputError("table: empty grid (need dims and sizes lists)");

  const std::string hash = config_hash(config);
  const int workers =
      config.workers > 0 ? config.workers : default_worker_count();

  struct Cell {
    int d;
    long n;
    std::vector<ResultRow> rows;
    CellDiagnostics diag;
    std::string error;
    bool failed = false;
  };
  std::vector<Cell> cells;
  for (int d : config.table_dims)
    for (long n : config.table_sizes) cells.push_back({d, n, {}, {}, "", false});

  parallel_for(
      cells.size(),
      [&](std::size_t i) {
        Cell& cell = cells[i];
        try {
          cell.rows = run_cell(config, cell.d, cell.n, /*with_gt=*/true,
                               /*with_estimators=*/true, hash, workers,
                               &cell.diag);
        } catch (const Error& e) {
          cell.failed = true;
          cell.error = e.what();
        }
      },
      workers);

  TableResult result;
  result.total_cells = static_cast<int>(cells.size());
  json cell_json = json::array();
  for (const auto& cell : cells) {
    CellInfo info;
    info.d = cell.d;
    info.n = cell.n;
    info.failed = cell.failed;
    info.error = cell.error;
    info.effective_learning_rate = cell.diag.effective_learning_rate;
    info.krr_predict = cell.diag.krr_predict;
    info.ev_mean = cell.diag.ev_mean;
    info.gt_negative_warning = cell.diag.gt_negative_warning;
    result.cells.push_back(std::move(info));
    if (cell.failed) {
      ++result.failed_cells;
      result.cell_errors.push_back("d=" + std::to_string(cell.d) +
                                   ",n=" + std::to_string(cell.n) + ": " +
                                   cell.error);
    } else {
      result.rows.insert(result.rows.end(), cell.rows.begin(), cell.rows.end());
    }
    json cj = {{"d", cell.d},
               {"n", cell.n},
               {"status", cell.failed ? "failed" : "ok"}};
    if (cell.failed)
      cj["error"] = cell.error;
    else
      cj["diagnostics"] = {
          {"effective_learning_rate", cell.diag.effective_learning_rate},
          {"krr_predict", cell.diag.krr_predict},
          {"ev_mean", cell.diag.ev_mean},
          {"gt_negative_warning", cell.diag.gt_negative_warning},
          {"seconds",
           {{"gt", cell.diag.seconds_gt},
            {"ev", cell.diag.seconds_ev},
            {"if", cell.diag.seconds_if},
            {"ba", cell.diag.seconds_ba}}}};
    cell_json.push_back(cj);
  }

  // Data-variance scaling fit: least-squares slope of log(IF estimate)
  // against log(n) per dimension.
  json slopes = json::array();
  if (config.table_sizes.size() >= 2 && config.estimators.infl) {
    for (int d : config.table_dims) {
      std::vector<double> lx, ly;
      for (const auto& r : result.rows)
        if (r.d == d && r.method == "IF" && r.quantity == "sigma2_over_n" &&
            r.value > 0)
          lx.push_back(std::log(double(r.n))), ly.push_back(std::log(r.value));
      if (lx.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
        mx /= lx.size();
        my /= ly.size();
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
          sxy += (lx[i] - mx) * (ly[i] - my);
          sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        const double slope = sxy / sxx;
        result.scaling_slopes.emplace_back(d, slope);
        slopes.push_back({{"d", d}, {"slope", slope}});
      }
    }
  }

  json extra;
  extra["cells"] = cell_json;
  extra["failed_cells"] = result.failed_cells;
  extra["scaling_slopes"] = slopes;
  write_outputs(config, "table", result.rows, extra);
  return result;
}

bool selfcheck(std::ostream& log) {
  bool all_ok = true;
  auto report = [&](const std::string& name, bool ok, const std::string& note) {
    log << (ok ? "ok:   " : "FAIL: ") << name;
    if (!note.empty()) log << " (" << note << ")";
    log << "\n";
    all_ok = all_ok && ok;
  };

  {  // stream determinism and substream independence
    Rng a(123), b(123);
    bool same = true;
    for (int i = 0; i < 1000; ++i) same = same && a.next_u64() == b.next_u64();
    Rng c = Rng(123).derive(1), e = Rng(123).derive(2);
    report("rng determinism", same && c.next_u64() != e.next_u64(), "");
  }
  {  // kernel identities on random inputs
    Rng rng(7);
    bool ok = true;
    double worst = 0.0;
    for (int trial = 0; trial < 50 && ok; ++trial) {
      const int d = 1 + static_cast<int>(rng.next_u64() % 5);
      KernelConfig cfg{1 + static_cast<int>(rng.next_u64() % 3), 0.0};
      Eigen::VectorXd x(d), y(d);
      for (int i = 0; i < d; ++i) x[i] = rng.next_normal();
      for (int i = 0; i < d; ++i) y[i] = rng.next_normal();
      const double kxy = population_ntk(x, y, cfg);
      const double kyx = population_ntk(y, x, cfg);
      const double kxx = population_ntk(x, x, cfg);
      const double kyy = population_ntk(y, y, cfg);
      ok = ok && kxy == kyx;
      const double diag_err =
          std::abs(kxx - (cfg.depth + 1) * x.squaredNorm()) /
          ((cfg.depth + 1) * x.squaredNorm());
      worst = std::max(worst, diag_err);
      ok = ok && diag_err <= 1e-12;
      for (double c : {0.5, 2.0, 10.0}) {
        const double scaled = population_ntk((c * x).eval(), (c * y).eval(), cfg);
        if (kxy != 0.0)
          ok = ok && std::abs(scaled - c * c * kxy) <= 1e-12 * std::abs(c * c * kxy);
      }
      ok = ok && kxy * kxy <= kxx * kyy * (1 + 1e-12);
    }
    report("kernel symmetry/diagonal/homogeneity/Cauchy-Schwarz", ok,
           "worst diag rel err " + format_double(worst));
  }
  {  // Gram PSD on random sets
    Rng rng(11);
    bool ok = true;
    for (int trial = 0; trial < 10 && ok; ++trial) {
      const int n = 4 + static_cast<int>(rng.next_u64() % 13);
      const int d = 1 + static_cast<int>(rng.next_u64() % 4);
      Eigen::MatrixXd pts(n, d);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) pts(i, j) = rng.next_normal();
      const GramMatrix gram = ntk_gram(pts, KernelConfig{2, 0.0});
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram.entries);
      ok = ok && eig.eigenvalues().minCoeff() >=
                     -1e-10 * gram.entries.diagonal().maxCoeff();
    }
    report("gram positive semidefinite", ok, "");
  }
  {  // chi-squared round trip
    bool ok = true;
    double worst = 0.0;
    for (int df = 1; df <= 50; ++df)
      for (double p : {0.005, 0.025, 0.5, 0.975, 0.995}) {
        const double err = std::abs(chi2_cdf(df, chi2_quantile(df, p)) - p);
        worst = std::max(worst, err);
        ok = ok && err <= 1e-8;
      }
    report("chi2 quantile/cdf round trip", ok,
           "worst abs err " + format_double(worst));
  }
  {  // decomposition identities
    Rng rng(13);
    bool ok = true;
    for (int i = 0; i < 1000 && ok; ++i) {
      const double v1 = std::abs(rng.next_normal());
      const double ve = std::abs(rng.next_normal());
      const int mp = 2 + static_cast<int>(rng.next_u64() % 9);
      const Decomposition dec = decompose(v1, ve, mp);
      ok = ok && std::abs(dec.tau2 + dec.sigma2_over_n - v1) <=
                     1e-12 * std::max(1.0, std::abs(v1));
      ok = ok && std::abs(dec.sigma2_over_n + dec.tau2 / mp - ve) <=
                     1e-12 * std::max(1.0, std::abs(ve));
    }
    report("decomposition identities", ok, "");
  }
  {  // ensemble variance affine equivariance and CI ordering
    Rng rng(17);
    bool ok = true;
    for (int trial = 0; trial < 20 && ok; ++trial) {
      const int m = 2 + static_cast<int>(rng.next_u64() % 20);
      std::vector<double> p(m), q(m);
      const double a = 0.25 + rng.next_double() * 3.0, b = rng.next_normal();
      for (int i = 0; i < m; ++i) {
        p[i] = rng.next_normal();
        q[i] = a * p[i] + b;
      }
      const auto ep = ensemble_variance(p, 0.9);
      const auto eq = ensemble_variance(q, 0.9);
      auto close_to = [](double u, double v) {
        return std::abs(u - v) <= 1e-10 * std::max({1.0, std::abs(u), std::abs(v)});
      };
      ok = ok && close_to(eq.value, a * a * ep.value) &&
           close_to(eq.ci->first, a * a * ep.ci->first) &&
           close_to(eq.ci->second, a * a * ep.ci->second) &&
           ep.ci->first <= ep.value && ep.value <= ep.ci->second;
    }
    report("ensemble variance equivariance and CI ordering", ok, "");
  }
  {  // forward positive homogeneity and zero-input rule
    NetConfig cfg;
    cfg.input_dim = 3;
    cfg.hidden_widths = {32, 16};
    const TrainedNet net = init_params(cfg, 99);
    Rng rng(19);
    Eigen::VectorXd x(3);
    for (int i = 0; i < 3; ++i) x[i] = rng.next_normal();
    const double f1 = forward(net, x);
    const double f2 = forward(net, (2.0 * x).eval());
    const bool ok = std::abs(f2 - 2.0 * f1) <= 1e-12 * std::abs(f1) &&
                    forward(net, Eigen::VectorXd::Zero(3)) == 0.0;
    report("relu net positive homogeneity", ok, "");
  }
  return all_ok;
}

}  // namespace epivar
