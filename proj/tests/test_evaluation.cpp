#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "ncam/evaluation.hpp"
#include "ncam/model_io.hpp"

using namespace ncam;

namespace {

std::vector<MonitorRecord> make_records(const std::vector<int>& t2_alarms,
                                        const std::vector<int>& spe_alarms) {
  std::vector<MonitorRecord> r(t2_alarms.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i].sample_index = static_cast<Eigen::Index>(i);
    r[i].t2 = double(i);
    r[i].spe = double(i) * 0.5;
    r[i].t2_alarm = t2_alarms[i] != 0;
    r[i].spe_alarm = spe_alarms[i] != 0;
  }
  return r;
}

}  // namespace

TEST_CASE("mdr counts misses in the fault region exactly") {
  // 960 records, onset 160: 800 fault samples, 4 of them missed
  std::vector<int> t2(960, 1), spe(960, 0);
  t2[200] = t2[300] = t2[400] = t2[500] = 0;
  auto records = make_records(t2, spe);
  CHECK(mdr(records, 160, Statistic::T2) == 0.5);
  CHECK(mdr(records, 160, Statistic::Spe) == 100.0);

  std::vector<int> all(960, 1);
  CHECK(mdr(make_records(all, all), 160, Statistic::T2) == 0.0);
  CHECK_THROWS_AS(mdr(records, 960, Statistic::T2), ValidationError);
}

TEST_CASE("far counts alarms in the normal region exactly") {
  std::vector<int> t2(960, 0), spe(960, 0);
  for (int i : {3, 17, 40, 55, 90, 120, 140, 159}) t2[i] = 1;
  spe[159] = 1;
  auto records = make_records(t2, spe);
  CHECK(far_rate(records, 160, Statistic::T2) == 5.0);
  CHECK(far_rate(records, 160, Statistic::Spe) == 100.0 / 160.0);

  std::vector<int> quiet(960, 0);
  CHECK(far_rate(make_records(quiet, quiet), 160, Statistic::T2) == 0.0);
  std::vector<int> loud(960, 1);
  CHECK(far_rate(make_records(loud, loud), 160, Statistic::Spe) == 100.0);
  CHECK_THROWS_AS(far_rate(records, 0, Statistic::T2), ValidationError);
}

TEST_CASE("benchmark emits one row per fault and method, faults outermost") {
  FaultSpec step{FaultKind::Step, 2.0, 40};
  FaultSpec drift{FaultKind::Drift, 3.0, 40};
  auto [train, run1] = generate_synthetic(5, 200, 120, step, 11);
  auto [train2, run2] = generate_synthetic(5, 200, 120, drift, 11);
  (void)train2;

  BenchmarkConfig cfg;
  cfg.methods = {"pca", "nca"};
  cfg.p = 2;
  cfg.train.seed = 1;
  cfg.train.epochs_per_outer = 40;
  auto rows = run_benchmark(train, {run1, run2, run1}, cfg);
  REQUIRE(rows.size() == 6);
  const char* expected_fault[] = {"1", "1", "2", "2", "3", "3"};
  const char* expected_method[] = {"pca", "nca", "pca", "nca", "pca", "nca"};
  for (int i = 0; i < 6; ++i) {
    CHECK(rows[i].fault_id == expected_fault[i]);
    CHECK(rows[i].method == expected_method[i]);
    CHECK(rows[i].error.empty());
  }
  // identical runs, one fitted model: identical rates
  CHECK(rows[0].t2_mdr == rows[4].t2_mdr);
  CHECK(rows[1].spe_mdr == rows[5].spe_mdr);

  auto again = run_benchmark(train, {run1, run2, run1}, cfg);
  for (int i = 0; i < 6; ++i) {
    CHECK(rows[i].t2_mdr == again[i].t2_mdr);
    CHECK(rows[i].spe_far == again[i].spe_far);
  }
}

TEST_CASE("benchmark validates its inputs") {
  auto [train, run] = generate_synthetic(4, 50, 20, FaultSpec{}, 3);
  BenchmarkConfig cfg;
  cfg.methods = {"pca"};
  cfg.p = 1;
  CHECK_THROWS_AS(run_benchmark(train, {}, cfg), ValidationError);
  // a run without an onset label cannot be scored
  CHECK_THROWS_AS(run_benchmark(train, {run}, cfg), ValidationError);
}

TEST_CASE("rates recomputed from the emitted csv match bit for bit") {
  FaultSpec step{FaultKind::Step, 2.886751345948129, 50};
  auto [train, run] = generate_synthetic(6, 300, 150, step, 9);
  Scaler sc = fit_scaler(train);
  DataMatrix Xs = apply_scaler(sc, train);
  auto det = fit_detector("pca", Xs, 2, TrainConfig{});
  ControlLimits lim = fit_limits_for(*det, Xs, 0.99);
  auto records = monitor(*det, det->feature_stats(), lim, apply_scaler(sc, run.data));

  std::ostringstream out;
  write_records_csv(out, records, lim);

  // reparse the alarm flags and rates from the text
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);  // limits comment
  std::getline(in, line);  // header
  std::vector<MonitorRecord> parsed;
  while (std::getline(in, line)) {
    MonitorRecord r;
    long long idx;
    int ta, sa;
    REQUIRE(std::sscanf(line.c_str(), "%lld,%lf,%lf,%d,%d", &idx, &r.t2, &r.spe, &ta,
                        &sa) == 5);
    r.sample_index = idx;
    r.t2_alarm = ta != 0;
    r.spe_alarm = sa != 0;
    parsed.push_back(r);
  }
  REQUIRE(parsed.size() == records.size());
  CHECK(mdr(parsed, 50, Statistic::T2) == mdr(records, 50, Statistic::T2));
  CHECK(mdr(parsed, 50, Statistic::Spe) == mdr(records, 50, Statistic::Spe));
  CHECK(far_rate(parsed, 50, Statistic::T2) == far_rate(records, 50, Statistic::T2));
  CHECK(far_rate(parsed, 50, Statistic::Spe) == far_rate(records, 50, Statistic::Spe));
  // full-precision statistics survive the round trip
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].t2 == records[i].t2);
    CHECK(parsed[i].spe == records[i].spe);
  }
}

TEST_CASE("orthogonality report separates decoder basis from pca loadings") {
  auto [train, run] = generate_synthetic(8, 300, 10, FaultSpec{}, 42);
  (void)run;
  DataMatrix Xs = apply_scaler(fit_scaler(train), train);

  NcaFitConfig cfg;
  cfg.p = 2;
  cfg.train.seed = 42;
  cfg.train.epochs_per_outer = 80;
  cfg.max_outer = 10;
  NcaModel nca = fit_nca(Xs, cfg);
  PcaModel pca = fit_pca(Xs, 2);

  auto [btb, btu] = orthogonality_report(nca, pca);
  CHECK((btb - Matrix::Identity(2, 2)).norm() < 1e-10);
  CHECK((btu - nca.decoder.transpose() * pca.loadings).norm() == 0.0);
  // both bases are orthonormal, so the cross product is a contraction
  Eigen::JacobiSVD<Matrix> svd(btu);
  CHECK(svd.singularValues().maxCoeff() <= 1.0 + 1e-12);
  CHECK((pca.loadings.transpose() * pca.loadings - Matrix::Identity(2, 2)).norm() <
        1e-12);

  PcaModel wide = fit_pca(Xs, 3);
  CHECK_THROWS_AS(orthogonality_report(nca, wide), ShapeError);
}
