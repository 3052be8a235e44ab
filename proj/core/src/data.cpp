#include "epivar/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "epivar/errors.hpp"
#include "epivar/rng.hpp"

namespace epivar {

Family family_from_string(const std::string& name) {
  if (name == "sin-sum") return Family::SinSum;
  if (name == "exp-quad") return Family::ExpQuad;
  if (name == "cos-cubic") return Family::CosCubic;
  throw InputError("unknown synthetic family: " + name);
}

std::string to_string(Family family) {
  switch (family) {
    case Family::SinSum: return "sin-sum";
    case Family::ExpQuad: return "exp-quad";
    case Family::CosCubic: return "cos-cubic";
  }
  return "?";
}

double regression_mean(const SyntheticSpec& spec,
                       const Eigen::Ref<const Eigen::VectorXd>& x) {
  double y = 0.0;
  switch (spec.family) {
    case Family::SinSum:
      for (int i = 0; i < x.size(); ++i) y += std::sin(x[i]);
      break;
    case Family::ExpQuad:
      for (int i = 0; i < x.size(); ++i) y += std::exp(x[i]) + x[i] * x[i];
      break;
    case Family::CosCubic:
      for (int i = 0; i < x.size(); ++i) y += std::cos(x[i]) + x[i] * x[i] * x[i];
      break;
  }
  return y;
}

Dataset sample(const SyntheticSpec& spec, long n, std::uint64_t seed) {
  if (spec.dim < 1) throw InputError("sample: dim must be >= 1");
  if (n < 1) throw InputError("sample: n must be >= 1");
  const int d = spec.dim;
  const bool uniform_inputs = spec.family == Family::SinSum;
  const double noise_std = uniform_inputs ? 0.1 : 0.1 * d;

  Dataset data;
  data.inputs.resize(n, d);
  data.labels.resize(n);
  Rng rng(seed);
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      data.inputs(i, j) =
          uniform_inputs ? 0.2 * rng.next_double() : 0.1 * rng.next_normal();
    }
    data.labels[i] =
        regression_mean(spec, data.inputs.row(i).transpose()) +
        noise_std * rng.next_normal();
  }
  data.provenance.kind = Provenance::Kind::Synthetic;
  data.provenance.spec = spec;
  data.provenance.seed = seed;
  return data;
}

Eigen::VectorXd test_point(const SyntheticSpec& spec) {
  return Eigen::VectorXd::Constant(spec.dim, 0.1);
}

Eigen::VectorXd test_point(const Dataset& data) {
  if (data.provenance.kind == Provenance::Kind::Synthetic)
    return test_point(data.provenance.spec);
  return data.inputs.colwise().mean().transpose();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column,
                 bool standardize) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open CSV file: " + path);

  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  bool has_header = false;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    const auto cells = split_csv_line(line);
    std::vector<double> vals(cells.size());
    bool numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_double(cells[c], vals[c])) {
        numeric = false;
        bad_col = c;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty() && header.empty()) {
        header = cells;
        has_header = true;
        continue;
      }
      throw ParseError("non-numeric cell '" + cells[bad_col] + "' at row " +
                           std::to_string(lineno) + ", column " +
                           std::to_string(bad_col + 1),
                       lineno, static_cast<long>(bad_col + 1));
    }
    if (!rows.empty() && vals.size() != rows.front().size())
      throw ParseError("row " + std::to_string(lineno) + " has " +
                           std::to_string(vals.size()) + " cells, expected " +
                           std::to_string(rows.front().size()),
                       lineno, static_cast<long>(vals.size()));
    if (has_header && vals.size() != header.size())
      throw ParseError("row " + std::to_string(lineno) +
                           " does not match header width",
                       lineno, static_cast<long>(vals.size()));
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ParseError("CSV file has no data rows: " + path);

  const long ncols = static_cast<long>(rows.front().size());
  long label_idx = -1;
  if (has_header) {
    for (long c = 0; c < ncols; ++c)
      if (header[c] == label_column) label_idx = c;
  }
  if (label_idx < 0) {
    double idx;
    if (parse_double(label_column, idx) && idx == std::floor(idx) && idx >= 0 &&
        idx < static_cast<double>(ncols)) {
      label_idx = static_cast<long>(idx);
    } else {
      throw ParseError("label column '" + label_column +
                       "' not found in CSV " + path);
    }
  }

  const long n = static_cast<long>(rows.size());
  const long d = ncols - 1;
  if (d < 1) throw ParseError("CSV needs at least one input column: " + path);
  Dataset data;
  data.inputs.resize(n, d);
  data.labels.resize(n);
  for (long i = 0; i < n; ++i) {
    long k = 0;
    for (long c = 0; c < ncols; ++c) {
      if (c == label_idx)
        data.labels[i] = rows[i][c];
      else
        data.inputs(i, k++) = rows[i][c];
    }
    if (!std::isfinite(data.labels[i]))
      throw ParseError("non-finite value at row " + std::to_string(i + 1),
                       i + 1, label_idx + 1);
  }
  if (!data.inputs.allFinite())
    throw ParseError("non-finite input value in CSV " + path);

  data.provenance.kind = Provenance::Kind::Csv;
  data.provenance.path = path;
  data.provenance.label_column = label_column;

  if (standardize) {
    Standardization st;
    st.input_mean = data.inputs.colwise().mean().transpose();
    st.input_std.resize(d);
    for (long c = 0; c < d; ++c) {
      const double var =
          (data.inputs.col(c).array() - st.input_mean[c]).square().sum() /
          static_cast<double>(n);
      st.input_std[c] = var > 0 ? std::sqrt(var) : 1.0;
      data.inputs.col(c) =
          (data.inputs.col(c).array() - st.input_mean[c]) / st.input_std[c];
    }
    st.label_mean = data.labels.mean();
    const double lvar =
        (data.labels.array() - st.label_mean).square().sum() /
        static_cast<double>(n);
    st.label_std = lvar > 0 ? std::sqrt(lvar) : 1.0;
    data.labels = (data.labels.array() - st.label_mean) / st.label_std;
    data.provenance.standardization = st;
  }
  return data;
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open for writing: " + path);
  for (long c = 0; c < data.inputs.cols(); ++c) out << "x" << c << ",";
  out << "y\n";
  for (long i = 0; i < data.n(); ++i) {
    for (long c = 0; c < data.inputs.cols(); ++c)
      out << format_double(data.inputs(i, c)) << ",";
    out << format_double(data.labels[i]) << "\n";
  }
}

}  // namespace epivar
