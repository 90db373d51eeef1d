#pragma once

// Feedforward layer stack with tanh/identity activations, exact
// backpropagated gradients of the orthogonal-decoder reconstruction
// loss, and a deterministic full-batch momentum trainer.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ncam/dataset.hpp"
#include "ncam/errors.hpp"

namespace ncam {

enum class Activation { Tanh, Identity };

inline std::string activation_name(Activation a) {
  return a == Activation::Tanh ? "tanh" : "identity";
}

// A stack of affine layers. weights[l] maps dims[l] -> dims[l+1]
// (inputs are row vectors, so the transform is Z * W + b).
struct LayerStack {
  std::vector<Eigen::Index> dims;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  std::vector<Activation> activations;

  Eigen::Index n_layers() const { return static_cast<Eigen::Index>(weights.size()); }
  Eigen::Index input_dim() const { return dims.front(); }
  Eigen::Index output_dim() const { return dims.back(); }
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int epochs_per_outer = 200;
  std::uint64_t seed = 0;
};

// N x p matrix of encoded features, one row per sample.
using FeatureMatrix = Matrix;

struct LayerGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

namespace detail {

// Glorot-range uniform weights, zero biases, deterministic in seed.
inline LayerStack make_stack(const std::vector<Eigen::Index>& dims,
                             const std::vector<Activation>& activations,
                             std::uint64_t seed) {
  LayerStack s;
  s.dims = dims;
  s.activations = activations;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto fan_in = dims[l];
    const auto fan_out = dims[l + 1];
    const double r = std::sqrt(6.0 / double(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-r, r);
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < fan_in; ++i)
      for (Eigen::Index j = 0; j < fan_out; ++j) w(i, j) = u(rng);
    s.weights.push_back(std::move(w));
    s.biases.push_back(Vector::Zero(fan_out));
  }
  return s;
}

// Activations per layer, input first. result.back() is the output.
inline std::vector<Matrix> forward_trace(const LayerStack& s, const Matrix& X) {
  if (X.cols() != s.input_dim())
    throw ShapeError("forward: input has " + std::to_string(X.cols()) +
                     " columns, stack expects " + std::to_string(s.input_dim()));
  std::vector<Matrix> zs;
  zs.reserve(s.weights.size() + 1);
  zs.push_back(X);
  for (Eigen::Index l = 0; l < s.n_layers(); ++l) {
    Matrix a = (zs.back() * s.weights[l]).rowwise() + s.biases[l].transpose();
    if (s.activations[l] == Activation::Tanh) a = a.array().tanh();
    zs.push_back(std::move(a));
  }
  return zs;
}

// Backpropagates dL/dOutput through the stack; `zs` from forward_trace.
inline LayerGradients backprop(const LayerStack& s, const std::vector<Matrix>& zs,
                               Matrix d_out) {
  LayerGradients g;
  g.weights.resize(s.weights.size());
  g.biases.resize(s.biases.size());
  Matrix delta = std::move(d_out);
  for (Eigen::Index l = s.n_layers() - 1; l >= 0; --l) {
    if (s.activations[l] == Activation::Tanh)
      delta.array() *= 1.0 - zs[l + 1].array().square();
    g.weights[l] = zs[l].transpose() * delta;
    g.biases[l] = delta.colwise().sum();
    if (l > 0) delta = delta * s.weights[l].transpose();
  }
  return g;
}

}  // namespace detail

// Nonlinear encoder g(x; W, b): tanh hidden layers, identity output.
struct FeedforwardEncoder {
  LayerStack stack;

  Eigen::Index input_dim() const { return stack.input_dim(); }
  Eigen::Index output_dim() const { return stack.output_dim(); }
};

inline FeedforwardEncoder init_encoder(const std::vector<Eigen::Index>& layer_dims,
                                       std::uint64_t seed) {
  if (layer_dims.size() < 2) throw ValidationError("encoder needs at least two layer dims");
  for (auto d : layer_dims)
    if (d < 1) throw ValidationError("layer dimensions must be positive");
  if (layer_dims.back() >= layer_dims.front())
    throw ValidationError("encoder output dimension must be smaller than its input");
  std::vector<Activation> acts(layer_dims.size() - 1, Activation::Tanh);
  acts.back() = Activation::Identity;
  return FeedforwardEncoder{detail::make_stack(layer_dims, acts, seed)};
}

// Default architecture: one tanh hidden layer of size ceil((n+p)/2).
inline std::vector<Eigen::Index> default_encoder_dims(Eigen::Index n, Eigen::Index p) {
  return {n, (n + p + 1) / 2, p};
}

inline FeatureMatrix forward(const FeedforwardEncoder& enc, const Matrix& X) {
  return detail::forward_trace(enc.stack, X).back();
}

// Squared Frobenius norm of X - G * B^T.
inline double nca_loss(const Matrix& X, const FeatureMatrix& G, const Matrix& B) {
  if (G.rows() != X.rows() || B.rows() != X.cols() || B.cols() != G.cols())
    throw ShapeError("nca_loss: nonconforming shapes");
  return (X - G * B.transpose()).squaredNorm();
}

// Exact gradient of nca_loss w.r.t. every weight and bias.
inline LayerGradients loss_gradients(const FeedforwardEncoder& enc, const Matrix& X,
                                     const Matrix& B) {
  auto zs = detail::forward_trace(enc.stack, X);
  const Matrix& G = zs.back();
  if (B.rows() != X.cols() || B.cols() != G.cols())
    throw ShapeError("loss_gradients: decoder shape does not conform");
  Matrix d_g = 2.0 * (G * B.transpose() - X) * B;
  return detail::backprop(enc.stack, zs, std::move(d_g));
}

namespace detail {

// Full-batch gradient descent with momentum on the mean per-sample
// loss (gradients are scaled by 1/N so learning rates transfer across
// dataset sizes). `grad_fn` maps the stack output to (loss, dL/dOutput).
template <typename GradFn>
inline std::vector<double> train_stack(LayerStack& s, const Matrix& X, GradFn&& grad_fn,
                                       const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  const double inv_n = 1.0 / double(X.rows());
  std::vector<Matrix> vel_w;
  std::vector<Vector> vel_b;
  for (std::size_t l = 0; l < s.weights.size(); ++l) {
    vel_w.push_back(Matrix::Zero(s.weights[l].rows(), s.weights[l].cols()));
    vel_b.push_back(Vector::Zero(s.biases[l].size()));
  }
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(std::max(cfg.epochs_per_outer, 0)));
  for (int epoch = 0; epoch < cfg.epochs_per_outer; ++epoch) {
    auto zs = forward_trace(s, X);
    auto [loss, d_out] = grad_fn(zs.back());
    if (!std::isfinite(loss))
      throw DivergenceError("training diverged (non-finite loss); try a smaller learning_rate");
    auto grads = backprop(s, zs, std::move(d_out));
    for (Eigen::Index l = 0; l < s.n_layers(); ++l) {
      vel_w[l] = cfg.momentum * vel_w[l] - cfg.learning_rate * inv_n * grads.weights[l];
      vel_b[l] = cfg.momentum * vel_b[l] - cfg.learning_rate * inv_n * grads.biases[l];
      s.weights[l] += vel_w[l];
      s.biases[l] += vel_b[l];
    }
    double post = grad_fn(forward_trace(s, X).back()).first;
    if (!std::isfinite(post))
      throw DivergenceError("training diverged (non-finite loss); try a smaller learning_rate");
    trace.push_back(post);
  }
  return trace;
}

}  // namespace detail

// Trains the encoder against a fixed decoder B; returns the updated
// encoder and the per-epoch loss trace.
inline std::pair<FeedforwardEncoder, std::vector<double>> train_encoder(
    const FeedforwardEncoder& enc, const Matrix& X, const Matrix& B,
    const TrainConfig& cfg) {
  FeedforwardEncoder out = enc;
  auto grad_fn = [&](const Matrix& G) {
    double loss = (X - G * B.transpose()).squaredNorm();
    Matrix d_g = 2.0 * (G * B.transpose() - X) * B;
    return std::make_pair(loss, std::move(d_g));
  };
  auto trace = detail::train_stack(out.stack, X, grad_fn, cfg);
  return {std::move(out), std::move(trace)};
}

}  // namespace ncam
