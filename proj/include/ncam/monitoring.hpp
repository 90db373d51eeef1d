#pragma once

// T^2 and SPE statistics, Gaussian-kernel density estimation, KDE-based
// control limits and the per-sample monitoring decision.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <vector>

#include "ncam/encoder.hpp"
#include "ncam/errors.hpp"

namespace ncam {

struct FeatureStats {
  Matrix covariance_inverse;  // p x p, symmetric
  Vector feature_mean;
  double ridge_used = 0.0;
};

struct ControlLimits {
  double t2_limit = 0.0;
  double spe_limit = 0.0;
  double h_t2 = 0.0;
  double h_spe = 0.0;
  double confidence = 0.99;
};

struct MonitorRecord {
  Eigen::Index sample_index = 0;
  double t2 = 0.0;
  double spe = 0.0;
  bool t2_alarm = false;
  bool spe_alarm = false;
};

// Centered feature covariance (divisor N-1); ill-conditioned matrices
// get a recorded diagonal ridge before inversion.
inline FeatureStats fit_feature_stats(const FeatureMatrix& G) {
  const Eigen::Index N = G.rows();
  const Eigen::Index p = G.cols();
  if (N <= p)
    throw InsufficientSamplesError("fit_feature_stats requires more samples than features");

  FeatureStats s;
  s.feature_mean = G.colwise().mean();
  Matrix centered = G.rowwise() - s.feature_mean.transpose();
  Matrix cov = centered.transpose() * centered / double(N - 1);

  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmin > 0.0) || lmax / lmin > 1e12) {
    s.ridge_used = 1e-8 * cov.trace() / double(p);
    cov.diagonal().array() += s.ridge_used;
    es.compute(cov);
  }
  Matrix inv_diag = es.eigenvalues().cwiseInverse().asDiagonal();
  s.covariance_inverse = es.eigenvectors() * inv_diag * es.eigenvectors().transpose();
  // keep it exactly symmetric
  s.covariance_inverse = 0.5 * (s.covariance_inverse + s.covariance_inverse.transpose()).eval();
  return s;
}

inline double t2_statistic(const Vector& g, const FeatureStats& stats) {
  if (g.size() != stats.feature_mean.size())
    throw ShapeError("t2_statistic: feature dimension mismatch");
  Vector d = g - stats.feature_mean;
  return d.dot(stats.covariance_inverse * d);
}

inline double spe_statistic(const Vector& x, const Vector& x_reconstructed) {
  if (x.size() != x_reconstructed.size())
    throw ShapeError("spe_statistic: vector lengths differ");
  return (x - x_reconstructed).squaredNorm();
}

// Silverman's rule: h = 1.06 * sigma * N^(-1/5).
inline double kde_bandwidth(const std::vector<double>& samples) {
  const std::size_t N = samples.size();
  if (N < 2) throw InsufficientSamplesError("kde_bandwidth needs at least 2 samples");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= double(N);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sigma = std::sqrt(ss / double(N - 1));
  if (!(sigma > 0.0)) throw DegenerateError("kde_bandwidth: all samples are equal");
  return 1.06 * sigma * std::pow(double(N), -0.2);
}

// Fallback for degenerate (all-equal) statistic samples.
inline double kde_bandwidth_or_fallback(const std::vector<double>& samples) {
  try {
    return kde_bandwidth(samples);
  } catch (const DegenerateError&) {
    const double v = samples.empty() ? 0.0 : samples.front();
    return std::max(1e-6, 1e-3 * std::abs(v));
  }
}

inline double kde_density(const std::vector<double>& samples, double h, double query) {
  if (!(h > 0.0)) throw ValidationError("kde bandwidth must be positive");
  double acc = 0.0;
  for (double s : samples) {
    const double z = (query - s) / h;
    acc += std::exp(-0.5 * z * z);
  }
  return acc / (std::sqrt(2.0 * M_PI) * h * double(samples.size()));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Exact KDE cumulative at t: mean of Phi((t - s_i) / h).
inline double kde_cdf(const std::vector<double>& samples, double h, double t) {
  double acc = 0.0;
  for (double s : samples) acc += normal_cdf((t - s) / h);
  return acc / double(samples.size());
}

// Upper control limit: solves kde_cdf(L) = confidence by bisection on
// [min - 8h, max + 8h], tolerance 1e-10 in the cumulative.
inline double control_limit(const std::vector<double>& samples, double h,
                            double confidence) {
  if (!(h > 0.0)) throw ValidationError("control_limit: bandwidth must be positive");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw ValidationError("control_limit: confidence must lie in (0, 1)");
  if (samples.empty()) throw InsufficientSamplesError("control_limit: no samples");
  auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  double lo = *mn - 8.0 * h;
  double hi = *mx + 8.0 * h;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = kde_cdf(samples, h, mid);
    if (std::abs(f - confidence) < 1e-10) return mid;
    (f < confidence ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Shared detector surface over PCA / KPCA / autoencoder / NCA.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::string kind() const = 0;
  virtual Eigen::Index feature_dim() const = 0;
  virtual FeatureMatrix extract(const Matrix& X) const = 0;
  // Per-row squared reconstruction residual.
  virtual Vector spe_rows(const Matrix& X) const = 0;
  // Feature statistics of the training set this detector was fit on.
  virtual const FeatureStats& feature_stats() const = 0;
  virtual const FeatureMatrix& training_features() const = 0;
};

// Alarm iff statistic strictly exceeds its limit (equality is normal).
inline std::vector<MonitorRecord> monitor(const Detector& model, const FeatureStats& stats,
                                          const ControlLimits& limits,
                                          const DataMatrix& X_new) {
  FeatureMatrix G = model.extract(X_new.values);
  Vector spe = model.spe_rows(X_new.values);
  std::vector<MonitorRecord> records;
  records.reserve(static_cast<std::size_t>(X_new.n_samples()));
  for (Eigen::Index i = 0; i < X_new.n_samples(); ++i) {
    MonitorRecord r;
    r.sample_index = i;
    r.t2 = t2_statistic(G.row(i).transpose(), stats);
    r.spe = spe(i);
    r.t2_alarm = r.t2 > limits.t2_limit;
    r.spe_alarm = r.spe > limits.spe_limit;
    records.push_back(r);
  }
  return records;
}

// Bandwidths and limits from the training-set statistic samples.
inline ControlLimits fit_control_limits(const std::vector<double>& t2_samples,
                                        const std::vector<double>& spe_samples,
                                        double confidence) {
  ControlLimits lim;
  lim.confidence = confidence;
  lim.h_t2 = kde_bandwidth_or_fallback(t2_samples);
  lim.h_spe = kde_bandwidth_or_fallback(spe_samples);
  lim.t2_limit = control_limit(t2_samples, lim.h_t2, confidence);
  lim.spe_limit = control_limit(spe_samples, lim.h_spe, confidence);
  return lim;
}

}  // namespace ncam
