#pragma once

// Missed-detection / false-alarm rates, the multi-method benchmark
// protocol and the decoder-diagnostics matrices.

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ncam/detector.hpp"

namespace ncam {

enum class Statistic { T2, Spe };

struct BenchmarkRow {
  std::string fault_id;
  std::string method;
  double t2_mdr = 0.0;
  double t2_far = 0.0;
  double spe_mdr = 0.0;
  double spe_far = 0.0;
  std::string error;  // nonempty when the method failed on this run
};

namespace detail {

inline bool alarmed(const MonitorRecord& r, Statistic s) {
  return s == Statistic::T2 ? r.t2_alarm : r.spe_alarm;
}

}  // namespace detail

// Percent of fault-region samples (index >= onset) without an alarm.
inline double mdr(const std::vector<MonitorRecord>& records, Eigen::Index onset,
                  Statistic statistic) {
  const auto n = static_cast<Eigen::Index>(records.size());
  if (onset >= n) throw ValidationError("mdr: empty fault region (onset past end)");
  long misses = 0, total = 0;
  for (Eigen::Index i = onset; i < n; ++i) {
    ++total;
    if (!detail::alarmed(records[static_cast<std::size_t>(i)], statistic)) ++misses;
  }
  return 100.0 * double(misses) / double(total);
}

// Percent of normal-region samples (index < onset) with an alarm.
inline double far_rate(const std::vector<MonitorRecord>& records, Eigen::Index onset,
                       Statistic statistic) {
  if (onset < 1) throw ValidationError("far: empty normal region (onset 0)");
  const auto n = static_cast<Eigen::Index>(records.size());
  long alarms = 0, total = 0;
  for (Eigen::Index i = 0; i < std::min(onset, n); ++i) {
    ++total;
    if (detail::alarmed(records[static_cast<std::size_t>(i)], statistic)) ++alarms;
  }
  if (total == 0) throw ValidationError("far: empty normal region");
  return 100.0 * double(alarms) / double(total);
}

struct BenchmarkConfig {
  std::vector<std::string> methods;  // subset of pca/kpca/autoencoder/nca
  Eigen::Index p = 0;                // 0 -> choose by CPV
  double cpv_energy = 0.85;
  double confidence = 0.99;
  TrainConfig train;
};

// Fits every method once on the scaled training data, derives limits
// from the training statistics and monitors every labeled run. One row
// per (fault, method); a failing method yields a marked row.
inline std::vector<BenchmarkRow> run_benchmark(const DataMatrix& train,
                                               const std::vector<LabeledRun>& runs,
                                               const BenchmarkConfig& cfg) {
  if (runs.empty()) throw ValidationError("run_benchmark: no test runs");
  for (const auto& r : runs)
    if (!r.fault_onset) throw ValidationError("run_benchmark: every run needs a fault onset");

  Scaler scaler = fit_scaler(train);
  DataMatrix Xs = apply_scaler(scaler, train);

  Eigen::Index p = cfg.p;
  if (p == 0) {
    PcaModel full = fit_pca(Xs, Xs.n_vars());
    p = select_dimension_cpv(full.all_eigenvalues, cfg.cpv_energy);
  }

  struct Fitted {
    std::string method;
    std::unique_ptr<Detector> det;
    ControlLimits limits;
    std::string error;
  };
  std::vector<Fitted> fitted;
  for (const auto& method : cfg.methods) {
    Fitted f;
    f.method = method;
    try {
      f.det = fit_detector(method, Xs, p, cfg.train);
      f.limits = fit_limits_for(*f.det, Xs, cfg.confidence);
    } catch (const Error& e) {
      f.error = e.what();
    }
    fitted.push_back(std::move(f));
  }

  std::vector<BenchmarkRow> rows;
  for (std::size_t ri = 0; ri < runs.size(); ++ri) {
    const auto onset = *runs[ri].fault_onset;
    DataMatrix test_scaled = apply_scaler(scaler, runs[ri].data);
    for (const auto& f : fitted) {
      BenchmarkRow row;
      row.fault_id = std::to_string(ri + 1);
      row.method = f.method;
      if (!f.error.empty()) {
        row.error = f.error;
      } else {
        try {
          auto records = monitor(*f.det, f.det->feature_stats(), f.limits, test_scaled);
          row.t2_mdr = mdr(records, onset, Statistic::T2);
          row.t2_far = far_rate(records, onset, Statistic::T2);
          row.spe_mdr = mdr(records, onset, Statistic::Spe);
          row.spe_far = far_rate(records, onset, Statistic::Spe);
        } catch (const Error& e) {
          row.error = e.what();
        }
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// B^T B (orthonormality check) and B^T U (NCA decoder vs PCA loadings).
inline std::pair<Matrix, Matrix> orthogonality_report(const NcaModel& model,
                                                      const PcaModel& pca) {
  if (model.decoder.rows() != pca.loadings.rows() ||
      model.decoder.cols() != pca.loadings.cols())
    throw ShapeError("orthogonality_report: decoder and loadings shapes differ");
  return {model.decoder.transpose() * model.decoder,
          model.decoder.transpose() * pca.loadings};
}

}  // namespace ncam
