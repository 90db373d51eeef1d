#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "ncam/dataset.hpp"

using namespace ncam;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("load_csv parses a plain numeric file") {
  auto p = write_temp("ncam_plain.csv", "1,2\n3,4\n");
  DataMatrix m = load_csv(p.string());
  REQUIRE(m.n_samples() == 2);
  REQUIRE(m.n_vars() == 2);
  CHECK(m.values(0, 0) == 1.0);
  CHECK(m.values(0, 1) == 2.0);
  CHECK(m.values(1, 0) == 3.0);
  CHECK(m.values(1, 1) == 4.0);
}

TEST_CASE("load_csv skips a non-numeric header row") {
  auto p = write_temp("ncam_header.csv", "a,b\n1,2\n");
  DataMatrix m = load_csv(p.string());
  REQUIRE(m.n_samples() == 1);
  CHECK(m.values(0, 0) == 1.0);
  CHECK(m.values(0, 1) == 2.0);
}

TEST_CASE("load_csv rejects ragged rows with the row index") {
  auto p = write_temp("ncam_ragged.csv", "1,2\n3\n");
  CHECK_THROWS_MATCHES(load_csv(p.string()), FormatError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("row 2")));
}

TEST_CASE("load_csv reports the coordinates of a non-numeric cell") {
  auto p = write_temp("ncam_badcell.csv", "1,2\n3,x\n");
  CHECK_THROWS_MATCHES(load_csv(p.string()), ParseError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("row 2") &&
                           Catch::Matchers::ContainsSubstring("column 2")));
}

TEST_CASE("load_csv rejects an empty file") {
  auto p = write_temp("ncam_empty.csv", "");
  CHECK_THROWS_AS(load_csv(p.string()), FormatError);
}

TEST_CASE("save_csv/load_csv round-trips exactly") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  Matrix m(7, 4);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = u(rng);
  auto p = std::filesystem::temp_directory_path() / "ncam_roundtrip.csv";
  save_csv(p.string(), m);
  DataMatrix back = load_csv(p.string());
  REQUIRE(back.values.rows() == m.rows());
  CHECK(back.values == m);  // bit-exact
}

TEST_CASE("fit_scaler computes mean and sample std with divisor N-1") {
  DataMatrix d;
  d.values.resize(3, 1);
  d.values << 1, 2, 3;
  Scaler s = fit_scaler(d);
  CHECK(s.means(0) == Catch::Approx(2.0));
  CHECK(s.stds(0) == Catch::Approx(1.0));

  DataMatrix d2;
  d2.values.resize(2, 1);
  d2.values << 0, 2;
  Scaler s2 = fit_scaler(d2);
  CHECK(s2.means(0) == Catch::Approx(1.0));
  CHECK(s2.stds(0) == Catch::Approx(std::sqrt(2.0)));
}

TEST_CASE("fit_scaler rejects constant columns") {
  DataMatrix d;
  d.values.resize(3, 2);
  d.values << 1, 5, 2, 5, 3, 5;
  CHECK_THROWS_MATCHES(fit_scaler(d), DegenerateError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("column 2")));
}

TEST_CASE("apply_scaler z-scores and checks dimensions") {
  Scaler s;
  s.means = Vector::Constant(1, 2.0);
  s.stds = Vector::Constant(1, 1.0);
  DataMatrix d;
  d.values.resize(3, 1);
  d.values << 1, 2, 3;
  DataMatrix out = apply_scaler(s, d);
  CHECK(out.values(0, 0) == Catch::Approx(-1.0));
  CHECK(out.values(1, 0) == Catch::Approx(0.0));
  CHECK(out.values(2, 0) == Catch::Approx(1.0));

  Scaler s3;
  s3.means = Vector::Zero(3);
  s3.stds = Vector::Ones(3);
  CHECK_THROWS_AS(apply_scaler(s3, d), ShapeError);
}

TEST_CASE("z-scoring its own training data gives mean 0 and std 1") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(3.0, 2.5);
  DataMatrix d;
  d.values.resize(40, 5);
  for (Eigen::Index i = 0; i < 40; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) d.values(i, j) = g(rng);
  DataMatrix z = apply_scaler(fit_scaler(d), d);
  for (Eigen::Index j = 0; j < 5; ++j) {
    double mean = z.values.col(j).mean();
    double var = (z.values.col(j).array() - mean).square().sum() / 39.0;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-12);
  }
}

TEST_CASE("generate_synthetic is deterministic in the seed") {
  FaultSpec f{FaultKind::Step, 1.5, 50};
  auto [tr1, te1] = generate_synthetic(6, 80, 100, f, 7);
  auto [tr2, te2] = generate_synthetic(6, 80, 100, f, 7);
  CHECK(tr1.values == tr2.values);
  CHECK(te1.data.values == te2.data.values);
}

TEST_CASE("fault kind none leaves the run unlabeled") {
  auto [tr, te] = generate_synthetic(4, 10, 20, FaultSpec{}, 1);
  CHECK_FALSE(te.fault_onset.has_value());
  CHECK(te.data.n_samples() == 20);
}

TEST_CASE("a zero-magnitude step reproduces the normal stream") {
  FaultSpec none{FaultKind::None, 0.0, 0};
  FaultSpec zero_step{FaultKind::Step, 0.0, 5};
  auto [tr1, te1] = generate_synthetic(5, 30, 40, none, 9);
  auto [tr2, te2] = generate_synthetic(5, 30, 40, zero_step, 9);
  CHECK(tr1.values == tr2.values);
  CHECK(te1.data.values == te2.data.values);
  CHECK(te2.fault_onset == 5);
}

TEST_CASE("generate_synthetic validates its fault spec") {
  CHECK_THROWS_AS(generate_synthetic(2, 10, 10, FaultSpec{}, 0), ValidationError);
  CHECK_THROWS_AS(generate_synthetic(4, 10, 10, FaultSpec{FaultKind::Step, 1.0, 10}, 0),
                  ValidationError);
}
