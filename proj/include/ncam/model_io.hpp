#pragma once

// JSON persistence of the offline-modeling outputs: scaler, fitted
// model, feature statistics and control limits, under one versioned
// envelope keyed by a "kind" discriminator.

#include <fstream>
#include <memory>
#include <string>

#include <json.hpp>

#include "ncam/detector.hpp"

namespace ncam {

inline constexpr int kModelFormatVersion = 1;

namespace io_detail {

using nlohmann::json;

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

// Row-major nested arrays.
inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Vector vector_from_json(const json& a) {
  Vector v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

inline Matrix matrix_from_json(const json& a) {
  const auto rows = static_cast<Eigen::Index>(a.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(a[0].size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& r = a[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(r.size()) != cols)
      throw FormatError("model file: ragged matrix");
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r[static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

inline json stack_to_json(const LayerStack& s) {
  json j;
  json dims = json::array();
  for (auto d : s.dims) dims.push_back(d);
  j["layer_dims"] = std::move(dims);
  j["weights"] = json::array();
  j["biases"] = json::array();
  j["activations"] = json::array();
  for (std::size_t l = 0; l < s.weights.size(); ++l) {
    j["weights"].push_back(to_json(s.weights[l]));
    j["biases"].push_back(to_json(s.biases[l]));
    j["activations"].push_back(activation_name(s.activations[l]));
  }
  return j;
}

inline LayerStack stack_from_json(const json& j) {
  LayerStack s;
  for (const auto& d : j.at("layer_dims")) s.dims.push_back(d.get<Eigen::Index>());
  for (const auto& w : j.at("weights")) s.weights.push_back(matrix_from_json(w));
  for (const auto& b : j.at("biases")) s.biases.push_back(vector_from_json(b));
  for (const auto& a : j.at("activations"))
    s.activations.push_back(a.get<std::string>() == "tanh" ? Activation::Tanh
                                                           : Activation::Identity);
  return s;
}

}  // namespace io_detail

struct ModelEnvelope {
  Scaler scaler;
  std::unique_ptr<Detector> detector;
  ControlLimits limits;
  std::uint64_t seed = 0;
  nlohmann::json config;  // fit configuration, echoed for reproducibility
};

inline nlohmann::json envelope_to_json(const ModelEnvelope& env) {
  using io_detail::to_json;
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = env.detector->kind();
  j["scaler"] = {{"means", to_json(env.scaler.means)}, {"stds", to_json(env.scaler.stds)}};

  const FeatureStats& fs = env.detector->feature_stats();
  j["feature_stats"] = {{"covariance_inverse", to_json(fs.covariance_inverse)},
                        {"feature_mean", to_json(fs.feature_mean)},
                        {"ridge_used", fs.ridge_used}};
  j["control_limits"] = {{"t2_limit", env.limits.t2_limit},
                         {"spe_limit", env.limits.spe_limit},
                         {"h_t2", env.limits.h_t2},
                         {"h_spe", env.limits.h_spe},
                         {"confidence", env.limits.confidence}};
  j["metadata"] = {{"seed", env.seed}, {"config", env.config}};

  nlohmann::json m;
  const std::string kind = env.detector->kind();
  if (kind == "pca") {
    const auto& pca = static_cast<const PcaDetector&>(*env.detector).model();
    m["loadings"] = to_json(pca.loadings);
    m["eigenvalues"] = to_json(pca.eigenvalues);
    m["all_eigenvalues"] = to_json(pca.all_eigenvalues);
  } else if (kind == "kpca") {
    const auto& k = static_cast<const KpcaDetector&>(*env.detector).model();
    m["c"] = k.c;
    m["train_data"] = to_json(k.train_data);
    m["alphas"] = to_json(k.alphas);
    m["eigenvalues"] = to_json(k.eigenvalues);
    m["row_means"] = to_json(k.row_means);
    m["grand_mean"] = k.grand_mean;
  } else if (kind == "autoencoder") {
    const auto& ae = static_cast<const AutoencoderDetector&>(*env.detector).model();
    m["encoder"] = io_detail::stack_to_json(ae.encoder.stack);
    m["decoder"] = io_detail::stack_to_json(ae.decoder);
    m["loss_trace"] = ae.loss_trace;
  } else if (kind == "nca") {
    const auto& nca = static_cast<const NcaDetector&>(*env.detector).model();
    m["encoder"] = io_detail::stack_to_json(nca.encoder.stack);
    m["B"] = to_json(nca.decoder);
    m["feature_mean"] = to_json(nca.feature_mean);
    m["loss_trace"] = nca.loss_trace;
    m["decoder_deltas"] = nca.decoder_deltas;
    m["converged"] = nca.converged;
  }
  j["model"] = std::move(m);
  return j;
}

inline ModelEnvelope envelope_from_json(const nlohmann::json& j) {
  using io_detail::matrix_from_json;
  using io_detail::vector_from_json;
  if (!j.contains("format_version") || j["format_version"].get<int>() != kModelFormatVersion)
    throw FormatError("model file: unsupported or missing format_version");

  ModelEnvelope env;
  env.scaler.means = vector_from_json(j.at("scaler").at("means"));
  env.scaler.stds = vector_from_json(j.at("scaler").at("stds"));
  env.limits.t2_limit = j.at("control_limits").at("t2_limit").get<double>();
  env.limits.spe_limit = j.at("control_limits").at("spe_limit").get<double>();
  env.limits.h_t2 = j.at("control_limits").at("h_t2").get<double>();
  env.limits.h_spe = j.at("control_limits").at("h_spe").get<double>();
  env.limits.confidence = j.at("control_limits").at("confidence").get<double>();
  env.seed = j.at("metadata").at("seed").get<std::uint64_t>();
  env.config = j.at("metadata").at("config");

  FeatureStats stats;
  stats.covariance_inverse = matrix_from_json(j.at("feature_stats").at("covariance_inverse"));
  stats.feature_mean = vector_from_json(j.at("feature_stats").at("feature_mean"));
  stats.ridge_used = j.at("feature_stats").at("ridge_used").get<double>();

  const std::string kind = j.at("kind").get<std::string>();
  const auto& m = j.at("model");
  if (kind == "pca") {
    PcaModel pca;
    pca.loadings = matrix_from_json(m.at("loadings"));
    pca.eigenvalues = vector_from_json(m.at("eigenvalues"));
    pca.all_eigenvalues = vector_from_json(m.at("all_eigenvalues"));
    env.detector = std::make_unique<PcaDetector>(std::move(pca), std::move(stats));
  } else if (kind == "kpca") {
    KpcaModel k;
    k.c = m.at("c").get<double>();
    k.train_data = matrix_from_json(m.at("train_data"));
    k.alphas = matrix_from_json(m.at("alphas"));
    k.eigenvalues = vector_from_json(m.at("eigenvalues"));
    k.row_means = vector_from_json(m.at("row_means"));
    k.grand_mean = m.at("grand_mean").get<double>();
    env.detector = std::make_unique<KpcaDetector>(std::move(k), std::move(stats));
  } else if (kind == "autoencoder") {
    AutoencoderModel ae;
    ae.encoder.stack = io_detail::stack_from_json(m.at("encoder"));
    ae.decoder = io_detail::stack_from_json(m.at("decoder"));
    ae.loss_trace = m.value("loss_trace", std::vector<double>());
    env.detector = std::make_unique<AutoencoderDetector>(std::move(ae), std::move(stats));
  } else if (kind == "nca") {
    NcaModel nca;
    nca.encoder.stack = io_detail::stack_from_json(m.at("encoder"));
    nca.decoder = matrix_from_json(m.at("B"));
    nca.feature_mean = vector_from_json(m.at("feature_mean"));
    nca.loss_trace = m.value("loss_trace", std::vector<double>());
    nca.decoder_deltas = m.value("decoder_deltas", std::vector<double>());
    nca.converged = m.value("converged", false);
    env.detector = std::make_unique<NcaDetector>(std::move(nca), std::move(stats));
  } else {
    throw FormatError("model file: unknown kind '" + kind + "'");
  }
  return env;
}

inline void save_model(const std::string& path, const ModelEnvelope& env) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open model file for writing: " + path);
  out << envelope_to_json(env).dump(2) << '\n';
}

inline ModelEnvelope load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model file: invalid JSON: ") + e.what());
  }
  return envelope_from_json(j);
}

// MonitorRecord stream as CSV with a comment line carrying both limits.
inline void write_records_csv(std::ostream& out, const std::vector<MonitorRecord>& records,
                              const ControlLimits& limits) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "# t2_limit=%.17g spe_limit=%.17g confidence=%.17g",
                limits.t2_limit, limits.spe_limit, limits.confidence);
  out << buf << '\n';
  out << "sample_index,t2,spe,t2_alarm,spe_alarm\n";
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%d,%d",
                  static_cast<long long>(r.sample_index), r.t2, r.spe, r.t2_alarm ? 1 : 0,
                  r.spe_alarm ? 1 : 0);
    out << buf << '\n';
  }
}

}  // namespace ncam
