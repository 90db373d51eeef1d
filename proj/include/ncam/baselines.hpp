#pragma once

// Linear PCA, Gaussian-kernel KPCA and a symmetric autoencoder, all
// sharing the extract/reconstruct surface used by the monitoring layer,
// plus the CPV rule for choosing the feature dimension.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "ncam/dataset.hpp"
#include "ncam/encoder.hpp"
#include "ncam/errors.hpp"

namespace ncam {

struct PcaModel {
  Matrix loadings;          // n x p, orthonormal columns, descending eigenvalues
  Vector eigenvalues;       // top p
  Vector all_eigenvalues;   // full spectrum, descending
};

inline PcaModel fit_pca(const DataMatrix& X, Eigen::Index p) {
  const Eigen::Index n = X.n_vars();
  const Eigen::Index N = X.n_samples();
  if (p < 1 || p > n) throw ValidationError("fit_pca requires 1 <= p <= n_vars");
  if (N < 2) throw InsufficientSamplesError("fit_pca needs at least 2 samples");

  Vector mean = X.values.colwise().mean();
  Matrix centered = X.values.rowwise() - mean.transpose();
  Matrix cov = centered.transpose() * centered / double(N - 1);

  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.info() != Eigen::Success) throw Error("fit_pca: eigendecomposition failed");

  PcaModel m;
  m.all_eigenvalues.resize(n);
  Matrix vecs(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // solver returns ascending order; flip to descending, clamp the
    // tiny negative values rounding can produce
    m.all_eigenvalues(i) = std::max(0.0, es.eigenvalues()(n - 1 - i));
    vecs.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  // sign convention: largest-magnitude entry of each loading positive
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index imax;
    vecs.col(i).cwiseAbs().maxCoeff(&imax);
    if (vecs(imax, i) < 0.0) vecs.col(i) = -vecs.col(i);
  }
  m.loadings = vecs.leftCols(p);
  m.eigenvalues = m.all_eigenvalues.head(p);
  return m;
}

inline FeatureMatrix pca_extract(const PcaModel& m, const Matrix& X) {
  if (X.cols() != m.loadings.rows())
    throw ShapeError("pca_extract: variable count does not match loadings");
  return X * m.loadings;
}

inline Matrix pca_reconstruct(const PcaModel& m, const FeatureMatrix& G) {
  if (G.cols() != m.loadings.cols())
    throw ShapeError("pca_reconstruct: feature dimension does not match loadings");
  return G * m.loadings.transpose();
}

// Smallest p whose leading eigenvalues reach `energy` of the total.
inline Eigen::Index select_dimension_cpv(const Vector& eigenvalues, double energy) {
  if (!(energy > 0.0 && energy <= 1.0))
    throw ValidationError("cpv energy must lie in (0, 1]");
  const double total = eigenvalues.sum();
  if (!(total > 0.0)) throw DegenerateError("cpv: all-zero eigenvalue spectrum");
  if (energy == 1.0) {
    Eigen::Index last = 0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
      if (eigenvalues(i) > 0.0) last = i;
    return last + 1;
  }
  double cum = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    cum += eigenvalues(i);
    if (cum / total >= energy) return i + 1;
  }
  return eigenvalues.size();
}

struct KpcaModel {
  Matrix train_data;        // scaled training samples (kernel anchors)
  double c = 0.0;           // Gaussian kernel width: k = exp(-d^2 / c)
  Matrix alphas;            // N x p dual coefficients, alpha^T Kc alpha = I
  Vector eigenvalues;       // top p positive eigenvalues of Kc
  Vector row_means;         // per-row mean of the uncentered training Gram
  double grand_mean = 0.0;  // overall mean of the uncentered training Gram
  bool p_reduced = false;   // fewer positive components than requested
};

// Kernel width per the 10 * n * mean-of-stds rule.
inline double kpca_auto_width(const DataMatrix& X) {
  Scaler s = fit_scaler(X);
  return 10.0 * double(X.n_vars()) * s.stds.mean();
}

inline Matrix kpca_gram(const Matrix& A, const Matrix& B_rows, double c) {
  Matrix d2 = (-2.0 * A * B_rows.transpose()).colwise() + A.rowwise().squaredNorm();
  d2.rowwise() += B_rows.rowwise().squaredNorm().transpose();
  return (-d2.cwiseMax(0.0) / c).array().exp();
}

inline KpcaModel fit_kpca(const DataMatrix& X, Eigen::Index p, double c) {
  const Eigen::Index N = X.n_samples();
  if (p < 1 || p > N) throw ValidationError("fit_kpca requires 1 <= p <= N");
  if (!(c > 0.0)) throw ValidationError("kernel width c must be positive");

  KpcaModel m;
  m.train_data = X.values;
  m.c = c;
  Matrix K = kpca_gram(X.values, X.values, c);
  m.row_means = K.rowwise().mean();
  m.grand_mean = K.mean();
  Matrix Kc = K;
  Kc.colwise() -= m.row_means;
  Kc.rowwise() -= m.row_means.transpose();
  Kc.array() += m.grand_mean;

  Eigen::SelfAdjointEigenSolver<Matrix> es(Kc);
  if (es.info() != Eigen::Success) throw Error("fit_kpca: eigendecomposition failed");

  constexpr double kEigFloor = 1e-12;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = N - 1; i >= 0 && static_cast<Eigen::Index>(keep.size()) < p; --i)
    if (es.eigenvalues()(i) > kEigFloor) keep.push_back(i);
  if (static_cast<Eigen::Index>(keep.size()) < p) m.p_reduced = true;

  const Eigen::Index kept = static_cast<Eigen::Index>(keep.size());
  if (kept == 0) throw DegenerateError("fit_kpca: no positive eigenvalues");
  m.alphas.resize(N, kept);
  m.eigenvalues.resize(kept);
  for (Eigen::Index j = 0; j < kept; ++j) {
    const double lambda = es.eigenvalues()(keep[static_cast<std::size_t>(j)]);
    m.eigenvalues(j) = lambda;
    // unit feature-space norm: alpha^T Kc alpha = 1
    m.alphas.col(j) =
        es.eigenvectors().col(keep[static_cast<std::size_t>(j)]) / std::sqrt(lambda);
  }
  return m;
}

// Centered cross-kernel rows against the training anchors.
inline Matrix kpca_centered_cross(const KpcaModel& m, const Matrix& X_new) {
  if (X_new.cols() != m.train_data.cols())
    throw ShapeError("kpca: variable count does not match training data");
  Matrix K = kpca_gram(X_new, m.train_data, m.c);
  Vector new_row_means = K.rowwise().mean();
  K.colwise() -= new_row_means;
  K.rowwise() -= m.row_means.transpose();
  K.array() += m.grand_mean;
  return K;
}

inline FeatureMatrix kpca_extract(const KpcaModel& m, const Matrix& X_new) {
  return kpca_centered_cross(m, X_new) * m.alphas;
}

// Feature-space residual: centered self-kernel minus the retained score
// energy, clamped at zero against rounding.
inline Vector kpca_spe_rows(const KpcaModel& m, const Matrix& X_new) {
  Matrix Kc = kpca_centered_cross(m, X_new);
  Matrix scores = Kc * m.alphas;
  Matrix K = kpca_gram(X_new, m.train_data, m.c);
  Vector self(X_new.rows());
  for (Eigen::Index i = 0; i < X_new.rows(); ++i) {
    // k(x,x) = 1 for the Gaussian kernel
    self(i) = 1.0 - 2.0 * K.row(i).mean() + m.grand_mean;
  }
  Vector spe = self - scores.rowwise().squaredNorm();
  return spe.cwiseMax(0.0);
}

inline double kpca_spe(const KpcaModel& m, const Vector& x_new) {
  return kpca_spe_rows(m, x_new.transpose())(0);
}

struct AutoencoderModel {
  FeedforwardEncoder encoder;  // n -> h -> p, tanh hidden, identity output
  LayerStack decoder;          // p -> h -> n, tanh hidden, identity output
  std::vector<double> loss_trace;
};

// Symmetric architecture n -> h -> p -> h -> n with h = ceil((n+p)/2).
inline AutoencoderModel fit_autoencoder(const DataMatrix& X, Eigen::Index p,
                                        const TrainConfig& cfg) {
  const Eigen::Index n = X.n_vars();
  if (p < 1 || p >= n) throw ValidationError("fit_autoencoder requires 1 <= p < n_vars");
  const Eigen::Index h = (n + p + 1) / 2;

  LayerStack full = detail::make_stack(
      {n, h, p, h, n},
      {Activation::Tanh, Activation::Identity, Activation::Tanh, Activation::Identity},
      cfg.seed);
  auto grad_fn = [&](const Matrix& out) {
    double loss = (X.values - out).squaredNorm();
    Matrix d = 2.0 * (out - X.values);
    return std::make_pair(loss, std::move(d));
  };
  auto trace = detail::train_stack(full, X.values, grad_fn, cfg);

  AutoencoderModel m;
  m.loss_trace = std::move(trace);
  m.encoder.stack.dims = {n, h, p};
  m.encoder.stack.weights = {full.weights[0], full.weights[1]};
  m.encoder.stack.biases = {full.biases[0], full.biases[1]};
  m.encoder.stack.activations = {Activation::Tanh, Activation::Identity};
  m.decoder.dims = {p, h, n};
  m.decoder.weights = {full.weights[2], full.weights[3]};
  m.decoder.biases = {full.biases[2], full.biases[3]};
  m.decoder.activations = {Activation::Tanh, Activation::Identity};
  return m;
}

inline FeatureMatrix ae_extract(const AutoencoderModel& m, const Matrix& X) {
  return forward(m.encoder, X);
}

inline Matrix ae_reconstruct(const AutoencoderModel& m, const FeatureMatrix& G) {
  return detail::forward_trace(m.decoder, G).back();
}

}  // namespace ncam
