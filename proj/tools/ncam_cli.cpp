// Command-line surface for the monitoring toolkit: train a detector,
// monitor new data against a saved model, run the MDR/FAR benchmark,
// generate synthetic runs and export diagnostics for plotting.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ncam/dataset.hpp"
#include "ncam/detector.hpp"
#include "ncam/evaluation.hpp"
#include "ncam/model_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitArgument = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct DimSpec {
  Eigen::Index fixed = 0;   // 0 -> use CPV
  double cpv_energy = 0.85;
};

DimSpec parse_dim(const std::string& s) {
  DimSpec d;
  try {
    if (s.rfind("cpv:", 0) == 0) {
      d.cpv_energy = std::stod(s.substr(4));
      if (!(d.cpv_energy > 0.0 && d.cpv_energy <= 1.0))
        throw ncam::ValidationError("--dim cpv fraction must lie in (0, 1]");
      return d;
    }
    d.fixed = std::stoll(s);
  } catch (const std::logic_error&) {
    throw ncam::ValidationError("--dim must be a positive integer or cpv:<frac>");
  }
  if (d.fixed < 1) throw ncam::ValidationError("--dim must be a positive integer or cpv:<frac>");
  return d;
}

Eigen::Index resolve_dim(const DimSpec& dim, const ncam::DataMatrix& X_scaled) {
  if (dim.fixed > 0) return dim.fixed;
  ncam::PcaModel full = ncam::fit_pca(X_scaled, X_scaled.n_vars());
  return ncam::select_dimension_cpv(full.all_eigenvalues, dim.cpv_energy);
}

std::vector<std::string> parse_methods(const std::string& arg) {
  if (arg == "all") return {"pca", "kpca", "autoencoder", "nca"};
  std::vector<std::string> out;
  std::stringstream ss(arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok != "pca" && tok != "kpca" && tok != "autoencoder" && tok != "nca")
      throw ncam::ValidationError("unknown method: " + tok);
    out.push_back(tok);
  }
  if (out.empty()) throw ncam::ValidationError("no methods given");
  return out;
}

void write_matrix_csv(const std::string& path, const ncam::Matrix& m) {
  ncam::save_csv(path, m);
}

int cmd_train(const std::string& method, const std::string& data_path,
              const std::string& dim_arg, double confidence, int epochs, double lr,
              std::uint64_t seed, const std::string& out_path) {
  DimSpec dim = parse_dim(dim_arg);
  ncam::DataMatrix raw = ncam::load_csv(data_path);
  ncam::ModelEnvelope env;
  env.scaler = ncam::fit_scaler(raw);
  ncam::DataMatrix Xs = ncam::apply_scaler(env.scaler, raw);

  const Eigen::Index p = resolve_dim(dim, Xs);
  ncam::TrainConfig tc;
  tc.epochs_per_outer = epochs;
  tc.learning_rate = lr;
  tc.seed = seed;
  env.detector = ncam::fit_detector(method, Xs, p, tc);
  env.limits = ncam::fit_limits_for(*env.detector, Xs, confidence);
  env.seed = seed;
  env.config = {{"method", method}, {"dim", dim_arg}, {"p", p},
                {"confidence", confidence}, {"epochs", epochs}, {"learning_rate", lr}};
  ncam::save_model(out_path, env);

  std::cout << "trained " << method << " (p=" << p << ") on " << raw.n_samples()
            << " samples; t2_limit=" << env.limits.t2_limit
            << " spe_limit=" << env.limits.spe_limit << "\n";
  if (method == "nca") {
    const auto& m = static_cast<const ncam::NcaDetector&>(*env.detector).model();
    std::cout << "loss trace:";
    for (double v : m.loss_trace) std::cout << ' ' << v;
    std::cout << "\nconverged=" << (m.converged ? "yes" : "no");
    if (!m.decoder_deltas.empty())
      std::cout << " final |B - B_hat|_F=" << m.decoder_deltas.back();
    std::cout << "\n";
  } else if (method == "autoencoder") {
    const auto& m = static_cast<const ncam::AutoencoderDetector&>(*env.detector).model();
    if (!m.loss_trace.empty())
      std::cout << "loss: initial-epoch " << m.loss_trace.front() << " final "
                << m.loss_trace.back() << "\n";
  }
  return kExitOk;
}

int cmd_monitor(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
  ncam::ModelEnvelope env = ncam::load_model(model_path);
  std::vector<ncam::MonitorRecord> records;
  try {
    ncam::DataMatrix raw = ncam::load_csv(data_path);
    if (raw.n_vars() != env.scaler.dim())
      throw ncam::ShapeError("test data has " + std::to_string(raw.n_vars()) +
                             " variables, model expects " + std::to_string(env.scaler.dim()));
    ncam::DataMatrix Xs = ncam::apply_scaler(env.scaler, raw);
    records = ncam::monitor(*env.detector, env.detector->feature_stats(), env.limits, Xs);
  } catch (const ncam::FormatError& e) {
    // an empty test file yields an empty record stream, not a failure
    if (std::string(e.what()).rfind("empty input", 0) != 0) throw;
  }

  std::ofstream out(out_path);
  if (!out) throw ncam::FormatError("cannot open output file: " + out_path);
  ncam::write_records_csv(out, records, env.limits);
  std::cout << records.size() << " records written to " << out_path << "\n";
  return kExitOk;
}

int cmd_benchmark(const std::string& train_path, const std::vector<std::string>& test_paths,
                  Eigen::Index onset, const std::string& methods_arg,
                  const std::string& dim_arg, double confidence, int epochs, double lr,
                  std::uint64_t seed, const std::string& out_path) {
  ncam::BenchmarkConfig cfg;
  cfg.methods = parse_methods(methods_arg);
  DimSpec dim = parse_dim(dim_arg);
  cfg.p = dim.fixed;
  cfg.cpv_energy = dim.cpv_energy;
  cfg.confidence = confidence;
  cfg.train.epochs_per_outer = epochs;
  cfg.train.learning_rate = lr;
  cfg.train.seed = seed;

  ncam::DataMatrix train = ncam::load_csv(train_path);
  std::vector<ncam::LabeledRun> runs;
  for (const auto& path : test_paths) {
    ncam::LabeledRun run;
    run.data = ncam::load_csv(path);
    if (onset < 0 || onset >= run.data.n_samples())
      throw ncam::ValidationError("--onset out of range for " + path);
    run.fault_onset = onset;
    runs.push_back(std::move(run));
  }

  auto rows = ncam::run_benchmark(train, runs, cfg);

  std::ofstream csv(out_path);
  if (!csv) throw ncam::FormatError("cannot open output file: " + out_path);
  csv << "fault,method,t2_mdr,t2_far,spe_mdr,spe_far,error\n";
  char buf[256];
  for (const auto& r : rows) {
    if (r.error.empty())
      std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%.17g,%.17g,", r.fault_id.c_str(),
                    r.method.c_str(), r.t2_mdr, r.t2_far, r.spe_mdr, r.spe_far);
    else
      std::snprintf(buf, sizeof(buf), "%s,%s,,,,,%s", r.fault_id.c_str(), r.method.c_str(),
                    r.error.c_str());
    csv << buf << '\n';
  }

  // aligned text table, MDR(FAR) cells; '*' marks the best usable MDR
  // per fault and statistic (MDR < 50, FAR <= 5)
  std::printf("%-6s %-12s %-16s %-16s\n", "fault", "method", "T2 MDR(FAR)", "SPE MDR(FAR)");
  std::string current_fault;
  auto best_cell = [&](const std::string& fault, bool spe) {
    double best = 1e18;
    for (const auto& r : rows) {
      if (r.fault_id != fault || !r.error.empty()) continue;
      const double m = spe ? r.spe_mdr : r.t2_mdr;
      const double f = spe ? r.spe_far : r.t2_far;
      if (m < 50.0 && f <= 5.0 && m < best) best = m;
    }
    return best;
  };
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      std::printf("%-6s %-12s FAILED: %s\n", r.fault_id.c_str(), r.method.c_str(),
                  r.error.c_str());
      continue;
    }
    char t2cell[32], specell[32];
    const bool t2_best = r.t2_mdr < 50.0 && r.t2_far <= 5.0 &&
                         r.t2_mdr <= best_cell(r.fault_id, false);
    const bool spe_best = r.spe_mdr < 50.0 && r.spe_far <= 5.0 &&
                          r.spe_mdr <= best_cell(r.fault_id, true);
    std::snprintf(t2cell, sizeof(t2cell), "%.2f(%.2f)%s", r.t2_mdr, r.t2_far,
                  t2_best ? "*" : "");
    std::snprintf(specell, sizeof(specell), "%.2f(%.2f)%s", r.spe_mdr, r.spe_far,
                  spe_best ? "*" : "");
    std::printf("%-6s %-12s %-16s %-16s\n", r.fault_id.c_str(), r.method.c_str(), t2cell,
                specell);
  }
  std::cout << "table written to " << out_path << "\n";
  return kExitOk;
}

int cmd_synth(Eigen::Index n_vars, Eigen::Index n_train, Eigen::Index n_test,
              const std::string& fault_kind, double magnitude, Eigen::Index onset,
              std::uint64_t seed, const std::string& out_train, const std::string& out_test) {
  ncam::FaultSpec fault;
  if (fault_kind == "step")
    fault.kind = ncam::FaultKind::Step;
  else if (fault_kind == "drift")
    fault.kind = ncam::FaultKind::Drift;
  else if (fault_kind == "none")
    fault.kind = ncam::FaultKind::None;
  else
    throw ncam::ValidationError("--fault must be step, drift or none");
  fault.magnitude = magnitude;
  fault.onset = onset;

  auto [train, test] = ncam::generate_synthetic(n_vars, n_train, n_test, fault, seed);
  ncam::save_csv(out_train, train.values);
  ncam::save_csv(out_test, test.data.values);
  std::cout << "wrote " << out_train << " (" << train.n_samples() << " rows) and "
            << out_test << " (" << test.data.n_samples() << " rows)";
  if (test.fault_onset) std::cout << ", fault onset " << *test.fault_onset;
  std::cout << "\n";
  return kExitOk;
}

int cmd_inspect(const std::string& model_path, const std::string& data_path,
                const std::string& out_prefix, bool scatter, int epochs, double lr,
                std::uint64_t seed) {
  ncam::ModelEnvelope env = ncam::load_model(model_path);
  ncam::DataMatrix raw = ncam::load_csv(data_path);
  ncam::DataMatrix Xs = ncam::apply_scaler(env.scaler, raw);

  if (env.detector->kind() == "nca") {
    const auto& m = static_cast<const ncam::NcaDetector&>(*env.detector).model();
    ncam::Matrix trace(static_cast<Eigen::Index>(m.loss_trace.size()), 3);
    for (Eigen::Index i = 0; i < trace.rows(); ++i) {
      trace(i, 0) = double(i);
      trace(i, 1) = m.loss_trace[static_cast<std::size_t>(i)];
      trace(i, 2) = m.decoder_deltas[static_cast<std::size_t>(i)];
    }
    write_matrix_csv(out_prefix + "_losstrace.csv", trace);

    ncam::PcaModel pca = ncam::fit_pca(Xs, m.decoder.cols());
    auto [btb, btu] = ncam::orthogonality_report(m, pca);
    write_matrix_csv(out_prefix + "_btb.csv", btb);
    write_matrix_csv(out_prefix + "_btu.csv", btu);
    const double defect =
        (btb - ncam::Matrix::Identity(btb.rows(), btb.cols())).norm();
    std::cout << "|B^T B - I|_F = " << defect << "\n";
    if (!m.decoder_deltas.empty())
      std::cout << "final |B - B_hat|_F = " << m.decoder_deltas.back()
                << (m.converged ? " (converged)" : " (iteration cap reached)") << "\n";
  }

  if (scatter) {
    ncam::TrainConfig tc;
    tc.epochs_per_outer = epochs;
    tc.learning_rate = lr;
    tc.seed = seed;
    for (const std::string method : {"pca", "kpca", "autoencoder", "nca"}) {
      auto det = ncam::fit_detector(method, Xs, 2, tc);
      write_matrix_csv(out_prefix + "_scatter_" + method + ".csv",
                       det->extract(Xs.values));
    }
  }
  std::cout << "diagnostics written with prefix " << out_prefix << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Process-monitoring toolkit: nonlinear component detectors with "
               "T2/SPE fault detection"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Fit a detector and write a model file");
  std::string t_method = "nca", t_data, t_dim = "cpv:0.85", t_out = "model.json";
  double t_conf = 0.99, t_lr = 1e-3;
  int t_epochs = 200;
  std::uint64_t t_seed = 0;
  train->add_option("--method", t_method, "pca|kpca|autoencoder|nca");
  train->add_option("--data", t_data, "training CSV")->required();
  train->add_option("--dim", t_dim, "feature dimension: integer or cpv:<frac>");
  train->add_option("--confidence", t_conf, "control-limit confidence");
  train->add_option("--epochs", t_epochs, "training epochs per outer iteration");
  train->add_option("--lr", t_lr, "learning rate");
  train->add_option("--seed", t_seed, "RNG seed");
  train->add_option("--out", t_out, "output model JSON")->required();

  // monitor
  auto* mon = app.add_subcommand("monitor", "Score new data against a saved model");
  std::string m_model, m_data, m_out = "records.csv";
  mon->add_option("--model", m_model, "model JSON")->required();
  mon->add_option("--data", m_data, "test CSV")->required();
  mon->add_option("--out", m_out, "output records CSV")->required();

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "MDR/FAR table across methods and runs");
  std::string b_train, b_methods = "all", b_dim = "cpv:0.85", b_out = "benchmark.csv";
  std::vector<std::string> b_tests;
  long long b_onset = 160;
  double b_conf = 0.99, b_lr = 1e-3;
  int b_epochs = 200;
  std::uint64_t b_seed = 0;
  bench->add_option("--train", b_train, "training CSV")->required();
  bench->add_option("--tests", b_tests, "fault-run CSVs")->required();
  bench->add_option("--onset", b_onset, "0-based fault onset index (default 160)");
  bench->add_option("--methods", b_methods, "comma list or 'all'");
  bench->add_option("--dim", b_dim, "feature dimension: integer or cpv:<frac>");
  bench->add_option("--confidence", b_conf, "control-limit confidence");
  bench->add_option("--epochs", b_epochs, "training epochs per outer iteration");
  bench->add_option("--lr", b_lr, "learning rate");
  bench->add_option("--seed", b_seed, "RNG seed");
  bench->add_option("--out", b_out, "output table CSV");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic train/test CSVs");
  long long s_vars = 8, s_train_n = 500, s_test_n = 960, s_onset = 160;
  std::string s_fault = "step", s_out_train = "train.csv", s_out_test = "test.csv";
  double s_mag = 2.0;
  std::uint64_t s_seed = 42;
  synth->add_option("--vars", s_vars, "number of process variables (>= 3)");
  synth->add_option("--train-samples", s_train_n, "training rows");
  synth->add_option("--test-samples", s_test_n, "test rows");
  synth->add_option("--fault", s_fault, "step|drift|none");
  synth->add_option("--magnitude", s_mag, "fault magnitude on the latent drive");
  synth->add_option("--onset", s_onset, "0-based fault onset");
  synth->add_option("--seed", s_seed, "RNG seed");
  synth->add_option("--out-train", s_out_train, "training CSV path");
  synth->add_option("--out-test", s_out_test, "test CSV path");

  // inspect
  auto* insp = app.add_subcommand("inspect", "Export plot data: loss trace, B^T B, B^T U");
  std::string i_model, i_data, i_out = "inspect";
  bool i_scatter = false;
  double i_lr = 1e-3;
  int i_epochs = 200;
  std::uint64_t i_seed = 0;
  insp->add_option("--model", i_model, "model JSON")->required();
  insp->add_option("--data", i_data, "training CSV the model was fit on")->required();
  insp->add_option("--out", i_out, "output file prefix");
  insp->add_flag("--scatter", i_scatter, "also refit every method at dim 2 and emit scatters");
  insp->add_option("--epochs", i_epochs, "epochs for scatter refits");
  insp->add_option("--lr", i_lr, "learning rate for scatter refits");
  insp->add_option("--seed", i_seed, "seed for scatter refits");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitArgument;
  }

  try {
    if (*train)
      return cmd_train(t_method, t_data, t_dim, t_conf, t_epochs, t_lr, t_seed, t_out);
    if (*mon) return cmd_monitor(m_model, m_data, m_out);
    if (*bench)
      return cmd_benchmark(b_train, b_tests, b_onset, b_methods, b_dim, b_conf, b_epochs,
                           b_lr, b_seed, b_out);
    if (*synth)
      return cmd_synth(s_vars, s_train_n, s_test_n, s_fault, s_mag, s_onset, s_seed,
                       s_out_train, s_out_test);
    if (*insp) return cmd_inspect(i_model, i_data, i_out, i_scatter, i_epochs, i_lr, i_seed);
  } catch (const ncam::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitArgument;
  } catch (const ncam::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ncam::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ncam::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ncam::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}
