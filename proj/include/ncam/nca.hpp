#pragma once

// Reduced-rank Procrustes rotation and the alternating fit loop:
// backpropagation updates the nonlinear encoder, an SVD-based rotation
// updates the orthonormal linear decoder.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <optional>
#include <vector>

#include "ncam/baselines.hpp"
#include "ncam/encoder.hpp"
#include "ncam/errors.hpp"

namespace ncam {

struct ProcrustesResult {
  Matrix rotation;  // n x p, orthonormal columns
  bool degenerate = false;
};

// Minimizes ||M - T * H^T||_F over H with orthonormal columns: with
// M^T * T = U D V^T (thin SVD), the minimizer is H = U * V^T. When
// M^T * T is rank-deficient the minimizer is not unique; the SVD's
// orthonormal completion of the zero singular directions is returned
// and the result is flagged degenerate.
inline ProcrustesResult procrustes_rotation(const Matrix& M, const Matrix& T) {
  if (M.rows() != T.rows()) throw ShapeError("procrustes_rotation: row counts differ");
  if (T.cols() > M.cols())
    throw ShapeError("procrustes_rotation: second operand has more columns than first");
  Matrix C = M.transpose() * T;  // n x p
  Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ProcrustesResult r;
  r.rotation = svd.matrixU() * svd.matrixV().transpose();
  const auto& sv = svd.singularValues();
  const double tol = 1e-12 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  r.degenerate = sv.size() == 0 || sv(sv.size() - 1) <= tol;
  return r;
}

struct NcaFitConfig {
  Eigen::Index p = 2;
  double epsilon = 1e-4;    // convergence tolerance on ||B - B_hat||_F
  int max_outer = 50;
  TrainConfig train;
  // Empty -> default one-hidden-layer architecture for (n, p).
  std::vector<Eigen::Index> layer_dims;
  // Single linear layer only: start the encoder at the PCA projection
  // instead of a random Glorot draw.
  bool init_at_pca = false;
};

struct NcaModel {
  FeedforwardEncoder encoder;
  Matrix decoder;       // B, n x p, orthonormal columns
  Vector feature_mean;  // training-set column mean of G
  std::vector<double> loss_trace;  // loss at the updated decoder, per outer iteration
  // Fit diagnostics, one entry per outer iteration.
  std::vector<double> decoder_deltas;      // ||B - B_hat||_F
  std::vector<double> orth_defects;        // ||B_hat^T B_hat - I||_F
  std::vector<double> pre_update_losses;   // loss at the previous decoder
  bool converged = false;
};

inline NcaModel fit_nca(const DataMatrix& X, const NcaFitConfig& cfg) {
  const Eigen::Index n = X.n_vars();
  const Eigen::Index N = X.n_samples();
  if (cfg.p < 1 || cfg.p >= n) throw ValidationError("fit_nca requires 1 <= p < n");
  if (N <= cfg.p) throw InsufficientSamplesError("fit_nca requires more samples than p");
  if (!(cfg.epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  if (cfg.max_outer < 1) throw ValidationError("max_outer must be at least 1");

  PcaModel pca = fit_pca(X, cfg.p);
  Matrix B = pca.loadings;

  auto dims = cfg.layer_dims.empty() ? default_encoder_dims(n, cfg.p) : cfg.layer_dims;
  if (dims.front() != n || dims.back() != cfg.p)
    throw ValidationError("layer_dims must run from n_vars to p");
  NcaModel model;
  model.encoder = init_encoder(dims, cfg.train.seed);
  if (cfg.init_at_pca) {
    if (dims.size() != 2)
      throw ValidationError("init_at_pca requires a single linear layer");
    model.encoder.stack.weights[0] = B;
    model.encoder.stack.biases[0].setZero();
  }

  FeatureMatrix G;
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    auto [enc, epoch_trace] = train_encoder(model.encoder, X.values, B, cfg.train);
    model.encoder = std::move(enc);
    G = forward(model.encoder, X.values);
    Matrix b_hat = procrustes_rotation(X.values, G).rotation;

    model.pre_update_losses.push_back(nca_loss(X.values, G, B));
    model.loss_trace.push_back(nca_loss(X.values, G, b_hat));
    model.orth_defects.push_back(
        (b_hat.transpose() * b_hat - Matrix::Identity(cfg.p, cfg.p)).norm());
    const double delta = (B - b_hat).norm();
    model.decoder_deltas.push_back(delta);
    B = std::move(b_hat);
    if (delta < cfg.epsilon) {
      model.converged = true;
      break;
    }
  }
  model.decoder = std::move(B);
  model.feature_mean = G.colwise().mean();
  return model;
}

inline FeatureMatrix nca_extract(const NcaModel& model, const Matrix& X) {
  return forward(model.encoder, X);
}

inline Matrix nca_reconstruct(const NcaModel& model, const FeatureMatrix& G) {
  if (G.cols() != model.decoder.cols())
    throw ShapeError("nca_reconstruct: feature dimension does not match decoder");
  return G * model.decoder.transpose();
}

}  // namespace ncam
