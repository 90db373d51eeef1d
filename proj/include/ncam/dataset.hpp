#pragma once

// Data ingestion, z-score scaling and a frozen synthetic nonlinear
// process generator for desk-scale experiments.

#include <Eigen/Dense>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ncam/errors.hpp"

namespace ncam {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Rows are samples, columns are process variables.
struct DataMatrix {
  Matrix values;

  Eigen::Index n_samples() const { return values.rows(); }
  Eigen::Index n_vars() const { return values.cols(); }
};

// Per-variable mean and sample standard deviation (divisor N-1).
struct Scaler {
  Vector means;
  Vector stds;

  Eigen::Index dim() const { return means.size(); }
};

// A test run with an optional fault onset (0-based sample index).
struct LabeledRun {
  DataMatrix data;
  std::optional<Eigen::Index> fault_onset;
};

namespace detail {

inline bool parse_double(const std::string& tok, double& out) {
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  while (begin != end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
  while (end != begin && std::isspace(static_cast<unsigned char>(end[-1]))) --end;
  if (begin == end) return false;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end && std::isfinite(out);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace detail

inline DataMatrix load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open file: " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t n_cols = 0;
  bool first_data_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);

    std::vector<double> row(fields.size());
    bool all_numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!detail::parse_double(fields[j], row[j])) {
        all_numeric = false;
        bad_col = j;
        break;
      }
    }
    if (first_data_row) {
      if (!all_numeric) continue;  // header row, skip
      n_cols = fields.size();
      first_data_row = false;
    } else {
      if (fields.size() != n_cols)
        throw FormatError("ragged row " + std::to_string(line_no) + ": expected " +
                          std::to_string(n_cols) + " fields, got " +
                          std::to_string(fields.size()));
      if (!all_numeric)
        throw ParseError("non-numeric cell at row " + std::to_string(line_no) +
                         ", column " + std::to_string(bad_col + 1));
    }
    if (all_numeric) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("empty input: " + path);

  DataMatrix m;
  m.values.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(n_cols));
  for (Eigen::Index i = 0; i < m.values.rows(); ++i)
    for (Eigen::Index j = 0; j < m.values.cols(); ++j)
      m.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

// Full-precision writer so load_csv round-trips exactly.
inline void save_csv(const std::string& path, const Matrix& values) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open file for writing: " + path);
  char buf[64];
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", values(i, j));
      out << buf;
      if (j + 1 < values.cols()) out << ',';
    }
    out << '\n';
  }
}

inline Scaler fit_scaler(const DataMatrix& train) {
  const Eigen::Index n = train.n_samples();
  if (n < 2) throw InsufficientSamplesError("fit_scaler needs at least 2 samples");
  Scaler s;
  s.means = train.values.colwise().mean();
  Matrix centered = train.values.rowwise() - s.means.transpose();
  s.stds = (centered.array().square().colwise().sum() / double(n - 1)).sqrt();
  for (Eigen::Index j = 0; j < s.stds.size(); ++j) {
    if (!(s.stds[j] > 0.0))
      throw DegenerateError("degenerate variable: column " + std::to_string(j + 1) +
                            " is constant");
  }
  return s;
}

inline DataMatrix apply_scaler(const Scaler& scaler, const DataMatrix& data) {
  if (data.n_vars() != scaler.dim())
    throw ShapeError("scaler dimension " + std::to_string(scaler.dim()) +
                     " does not match data with " + std::to_string(data.n_vars()) +
                     " variables");
  DataMatrix out;
  out.values = (data.values.rowwise() - scaler.means.transpose()).array().rowwise() /
               scaler.stds.transpose().array();
  return out;
}

enum class FaultKind { None, Step, Drift };

struct FaultSpec {
  FaultKind kind = FaultKind::None;
  double magnitude = 0.0;
  Eigen::Index onset = 0;
};

// Frozen construction (all draws from one mt19937_64 seeded stream, in
// this order):
//   1. mixing matrix M (3 x n_vars), entries U(-1, 1), row-major order;
//   2. per training sample: latent t ~ U(0, 2.5), then n_vars noise
//      values N(0, 0.05);
//   3. per test sample: same draws, continuing the stream.
// Observation: x = [sin t, cos t, sin 2t] * M + noise. A step fault adds
// `magnitude` to the latent drive from `onset` onward; a drift ramps
// linearly from 0 at `onset` to `magnitude` at the last sample. Faults
// perturb the latent after it is drawn, so magnitude 0 reproduces the
// normal stream exactly.
inline std::pair<DataMatrix, LabeledRun> generate_synthetic(Eigen::Index n_vars,
                                                            Eigen::Index n_train,
                                                            Eigen::Index n_test,
                                                            const FaultSpec& fault,
                                                            std::uint64_t seed) {
  if (n_vars < 3) throw ValidationError("generate_synthetic requires n_vars >= 3");
  if (fault.kind != FaultKind::None && fault.onset >= n_test)
    throw ValidationError("fault onset must be < n_test");
  if (fault.kind != FaultKind::None && fault.onset < 0)
    throw ValidationError("fault onset must be nonnegative");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> latent(0.0, 2.5);
  std::normal_distribution<double> noise(0.0, 0.05);

  Matrix mixing(3, n_vars);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < n_vars; ++j) mixing(i, j) = unit(rng);

  auto observe = [&](double t, Matrix& dst, Eigen::Index row) {
    Eigen::RowVector3d basis(std::sin(t), std::cos(t), std::sin(2.0 * t));
    dst.row(row) = basis * mixing;
    for (Eigen::Index j = 0; j < n_vars; ++j) dst(row, j) += noise(rng);
  };

  DataMatrix train;
  train.values.resize(n_train, n_vars);
  for (Eigen::Index i = 0; i < n_train; ++i) observe(latent(rng), train.values, i);

  LabeledRun test;
  test.data.values.resize(n_test, n_vars);
  for (Eigen::Index i = 0; i < n_test; ++i) {
    double t = latent(rng);
    if (fault.kind == FaultKind::Step && i >= fault.onset) {
      t += fault.magnitude;
    } else if (fault.kind == FaultKind::Drift && i >= fault.onset) {
      const double span = double(n_test - fault.onset);
      t += fault.magnitude * double(i - fault.onset + 1) / span;
    }
    observe(t, test.data.values, i);
  }
  if (fault.kind != FaultKind::None) test.fault_onset = fault.onset;
  return {std::move(train), std::move(test)};
}

}  // namespace ncam
