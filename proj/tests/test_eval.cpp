#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <set>

#include "regimecurve/eval.hpp"
#include "regimecurve/simulate.hpp"

using namespace regimecurve;
using Catch::Approx;

TEST_CASE("approximation error arithmetic") {
  const Eigen::VectorXd mu = Eigen::Vector3d(0, 1, 2);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd offset = mu.array() + 0.5;
  CHECK(approximation_mse(mu, mu) == 0.0);
  CHECK(approximation_mse(mu, offset) == Approx(0.25));
  CHECK(approximation_mse(mu, zero) == Approx(5.0 / 3.0));
  const Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(1, 3);
  CHECK(approximation_mse(mu, rows) == Approx(5.0 / 3.0));
  const Eigen::VectorXd permuted = Eigen::Vector3d(2, 0, 1);
  CHECK(approximation_mse(permuted, zero) == approximation_mse(mu, zero));
  CHECK_THROWS_AS(approximation_mse(mu, Eigen::VectorXd(Eigen::VectorXd::Zero(2))), DomainError);
}

TEST_CASE("stratified folds partition the rows") {
  std::vector<int> labels;
  for (int i = 0; i < 23; ++i) labels.push_back(i % 3 == 0 ? 7 : 2);
  const auto folds = stratified_folds(labels, 5, 42);
  std::vector<std::size_t> all;
  for (const auto& f : folds) all.insert(all.end(), f.begin(), f.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expected(23);
  std::iota(expected.begin(), expected.end(), std::size_t{0});
  CHECK(all == expected);
  for (const auto& f : folds) {
    const auto sevens = std::count_if(f.begin(), f.end(), [&](std::size_t i) { return labels[i] == 7; });
    CHECK(sevens >= 1);
    CHECK(sevens <= 2);
  }
  CHECK(stratified_folds(labels, 5, 42) == folds);
  try {
    stratified_folds({1, 1, 1, 1, 1, 3, 3}, 5, 1);
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("class 3") != std::string::npos);
  }
}

TEST_CASE("cross-validation with oracle predictors") {
  const LabeledCurves data = waveform(10, 1);
  const CurveTrainer memorize = [](const LabeledCurves&) -> CurvePredictor {
    const LabeledCurves all = waveform(10, 1);
    return [all](std::span<const double> x) {
      for (std::size_t i = 0; i < all.curves.n(); ++i)
        if (all.curves.values()(static_cast<Eigen::Index>(i), 0) == x[0]) return all.labels[i];
      return -1;
    };
  };
  const CvReport perfect = kfold_cv(data, 5, 3, memorize, 2);
  CHECK(perfect.mean_error == 0.0);
  for (double e : perfect.folds) CHECK(e == 0.0);

  const CurveTrainer constant = [](const LabeledCurves&) -> CurvePredictor {
    return [](std::span<const double>) { return 1; };
  };
  const CvReport always_one = kfold_cv(data, 5, 3, constant);
  CHECK(always_one.mean_error == Approx(2.0 / 3.0));
  CHECK(always_one.mean_error ==
        Approx(std::accumulate(always_one.folds.begin(), always_one.folds.end(), 0.0) / 5.0).margin(1e-12));
  for (double e : always_one.folds) {
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
  }
}

TEST_CASE("single class cross-validation has zero error") {
  LabeledCurves data = waveform(10, 2);
  std::vector<std::size_t> rows(10);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const LabeledCurves one{data.curves.subset(rows), std::vector<int>(10, 1)};
  FitSettings s;
  s.family = Family::Piecewise;
  s.K = 2;
  s.p = 3;
  const CvReport r = kfold_cv(one, 5, s, 42);
  CHECK(r.mean_error == 0.0);
  CHECK(r.std_error == 0.0);
}

TEST_CASE("runtime bench rows") {
  FitSettings s;
  s.K = 3;
  s.p = 2;
  s.em.restarts = 1;
  const BenchReport one = runtime_bench({{5, 50}}, {Family::Piecewise}, 1, 1, s);
  REQUIRE(one.rows.size() == 1);
  CHECK(one.rows[0].seconds > 0.0);
  CHECK(one.rows[0].repetitions == 1);
  const BenchReport warm = runtime_bench({{5, 50}, {5, 60}}, {Family::Piecewise, Family::Rhlp}, 3, 1, s);
  CHECK(warm.rows.size() == 4);
  for (const auto& r : warm.rows) CHECK(r.repetitions == 2);
  CHECK_THROWS_AS(runtime_bench({}, {Family::Rhlp}, 1, 1, s), DomainError);
}

TEST_CASE("Spearman correlation") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> down{10, 8, 7, 3, 1};
  const std::vector<double> up{1, 4, 9, 16, 25};
  CHECK(spearman_rho(x, down) == Approx(-1.0));
  CHECK(spearman_rho(x, up) == Approx(1.0));
  const std::vector<double> tied{1, 1, 2, 2, 3};
  CHECK(spearman_rho(x, tied) == Approx(0.9486832980505138));
}
