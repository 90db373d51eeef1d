#pragma once

// Concrete Detector adapters for the four methods and the shared
// offline-modeling pipeline (fit -> feature stats -> control limits).

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ncam/baselines.hpp"
#include "ncam/monitoring.hpp"
#include "ncam/nca.hpp"

namespace ncam {

namespace detail {

inline std::vector<double> column_to_vector(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace detail

class PcaDetector : public Detector {
 public:
  PcaDetector(PcaModel model, const DataMatrix& X_train) : model_(std::move(model)) {
    g_train_ = pca_extract(model_, X_train.values);
    // PCA scores are uncorrelated with variances equal to the
    // eigenvalues, so the exact covariance is diagonal.
    stats_.feature_mean = g_train_.colwise().mean();
    Vector inv = model_.eigenvalues.cwiseMax(1e-12).cwiseInverse();
    stats_.covariance_inverse = inv.asDiagonal();
  }

  // Deserialization path: trusts previously stored statistics.
  PcaDetector(PcaModel model, FeatureStats stats)
      : model_(std::move(model)), stats_(std::move(stats)) {}

  std::string kind() const override { return "pca"; }
  Eigen::Index feature_dim() const override { return model_.loadings.cols(); }
  FeatureMatrix extract(const Matrix& X) const override { return pca_extract(model_, X); }
  Vector spe_rows(const Matrix& X) const override {
    return (X - pca_reconstruct(model_, pca_extract(model_, X))).rowwise().squaredNorm();
  }
  const FeatureStats& feature_stats() const override { return stats_; }
  const FeatureMatrix& training_features() const override { return g_train_; }
  const PcaModel& model() const { return model_; }

 private:
  PcaModel model_;
  FeatureMatrix g_train_;
  FeatureStats stats_;
};

class KpcaDetector : public Detector {
 public:
  explicit KpcaDetector(KpcaModel model) : model_(std::move(model)) {
    g_train_ = kpca_extract(model_, model_.train_data);
    stats_ = fit_feature_stats(g_train_);
  }

  KpcaDetector(KpcaModel model, FeatureStats stats)
      : model_(std::move(model)), stats_(std::move(stats)) {
    g_train_ = kpca_extract(model_, model_.train_data);
  }

  std::string kind() const override { return "kpca"; }
  Eigen::Index feature_dim() const override { return model_.alphas.cols(); }
  FeatureMatrix extract(const Matrix& X) const override { return kpca_extract(model_, X); }
  Vector spe_rows(const Matrix& X) const override { return kpca_spe_rows(model_, X); }
  const FeatureStats& feature_stats() const override { return stats_; }
  const FeatureMatrix& training_features() const override { return g_train_; }
  const KpcaModel& model() const { return model_; }

 private:
  KpcaModel model_;
  FeatureMatrix g_train_;
  FeatureStats stats_;
};

class AutoencoderDetector : public Detector {
 public:
  AutoencoderDetector(AutoencoderModel model, const DataMatrix& X_train)
      : model_(std::move(model)) {
    g_train_ = ae_extract(model_, X_train.values);
    stats_ = fit_feature_stats(g_train_);
  }

  AutoencoderDetector(AutoencoderModel model, FeatureStats stats)
      : model_(std::move(model)), stats_(std::move(stats)) {}

  std::string kind() const override { return "autoencoder"; }
  Eigen::Index feature_dim() const override { return model_.encoder.output_dim(); }
  FeatureMatrix extract(const Matrix& X) const override { return ae_extract(model_, X); }
  Vector spe_rows(const Matrix& X) const override {
    return (X - ae_reconstruct(model_, ae_extract(model_, X))).rowwise().squaredNorm();
  }
  const FeatureStats& feature_stats() const override { return stats_; }
  const FeatureMatrix& training_features() const override { return g_train_; }
  const AutoencoderModel& model() const { return model_; }

 private:
  AutoencoderModel model_;
  FeatureMatrix g_train_;
  FeatureStats stats_;
};

class NcaDetector : public Detector {
 public:
  NcaDetector(NcaModel model, const DataMatrix& X_train) : model_(std::move(model)) {
    g_train_ = nca_extract(model_, X_train.values);
    stats_ = fit_feature_stats(g_train_);
  }

  NcaDetector(NcaModel model, FeatureStats stats)
      : model_(std::move(model)), stats_(std::move(stats)) {}

  std::string kind() const override { return "nca"; }
  Eigen::Index feature_dim() const override { return model_.decoder.cols(); }
  FeatureMatrix extract(const Matrix& X) const override { return nca_extract(model_, X); }
  Vector spe_rows(const Matrix& X) const override {
    return (X - nca_reconstruct(model_, nca_extract(model_, X))).rowwise().squaredNorm();
  }
  const FeatureStats& feature_stats() const override { return stats_; }
  const FeatureMatrix& training_features() const override { return g_train_; }
  const NcaModel& model() const { return model_; }

 private:
  NcaModel model_;
  FeatureMatrix g_train_;
  FeatureStats stats_;
};

// Fits the requested method on (already scaled) training data.
inline std::unique_ptr<Detector> fit_detector(const std::string& method,
                                              const DataMatrix& X_scaled, Eigen::Index p,
                                              const TrainConfig& train_cfg) {
  if (method == "pca") {
    return std::make_unique<PcaDetector>(fit_pca(X_scaled, p), X_scaled);
  }
  if (method == "kpca") {
    return std::make_unique<KpcaDetector>(fit_kpca(X_scaled, p, kpca_auto_width(X_scaled)));
  }
  if (method == "autoencoder") {
    return std::make_unique<AutoencoderDetector>(fit_autoencoder(X_scaled, p, train_cfg),
                                                 X_scaled);
  }
  if (method == "nca") {
    NcaFitConfig cfg;
    cfg.p = p;
    cfg.train = train_cfg;
    return std::make_unique<NcaDetector>(fit_nca(X_scaled, cfg), X_scaled);
  }
  throw ValidationError("unknown method: " + method);
}

// Training-set statistic samples for the KDE limit fit.
inline std::pair<std::vector<double>, std::vector<double>> training_statistics(
    const Detector& det, const DataMatrix& X_train_scaled) {
  const FeatureMatrix& G = det.training_features();
  const FeatureStats& stats = det.feature_stats();
  std::vector<double> t2(static_cast<std::size_t>(G.rows()));
  for (Eigen::Index i = 0; i < G.rows(); ++i)
    t2[static_cast<std::size_t>(i)] = t2_statistic(G.row(i).transpose(), stats);
  Vector spe = det.spe_rows(X_train_scaled.values);
  std::vector<double> spe_v(spe.data(), spe.data() + spe.size());
  return {std::move(t2), std::move(spe_v)};
}

// Offline modeling in one call: limits fit on the training statistics.
inline ControlLimits fit_limits_for(const Detector& det, const DataMatrix& X_train_scaled,
                                    double confidence) {
  auto [t2, spe] = training_statistics(det, X_train_scaled);
  return fit_control_limits(t2, spe, confidence);
}

}  // namespace ncam
