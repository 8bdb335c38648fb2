#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "regimecurve/rhlp.hpp"
#include "regimecurve/simulate.hpp"

using namespace regimecurve;
using Catch::Approx;

TEST_CASE("noise-free single regime reproduces the polynomial") {
  SimSpec s;
  s.K = 1;
  s.p = 2;
  s.betas = {Eigen::Vector3d(1, 2, -0.5)};
  s.w = Eigen::MatrixXd::Zero(1, 2);
  s.sigmas = {0.0};
  s.n = 4;
  s.m = 20;
  const SimResult r = sample_rhlp(s);
  for (std::size_t j = 0; j < 20; ++j) {
    const double t = r.curves.grid()[j];
    for (Eigen::Index i = 0; i < 4; ++i)
      CHECK(r.curves.values()(i, static_cast<Eigen::Index>(j)) == Approx(1 + 2 * t - 0.5 * t * t));
  }
}

TEST_CASE("invalid specs are rejected") {
  SimSpec s = experiment23_spec(2, 10);
  s.sigmas[0] = -1.0;
  CHECK_THROWS_AS(sample_rhlp(s), DomainError);
  s = experiment23_spec(2, 10);
  s.t_end = s.t_start;
  CHECK_THROWS_AS(sample_rhlp(s), DomainError);
  s = experiment23_spec(2, 10);
  s.betas.pop_back();
  CHECK_THROWS_AS(sample_rhlp(s), DomainError);
  CHECK_THROWS_AS(smoothness_spec(0), DomainError);
  CHECK_THROWS_AS(smoothness_spec(11), DomainError);
  CHECK_THROWS_AS(experiment23_spec(1, 1), DomainError);
}

TEST_CASE("smoothness levels scale the gate and keep transition locations") {
  const SimSpec l1 = smoothness_spec(1);
  CHECK(l1.w(0, 1) == -1706.96);
  CHECK(l1.w(0, 0) == 3341.33);
  CHECK(l1.w(1, 0) == 2436.97);
  CHECK(l1.w(1, 1) == -810.07);
  CHECK(l1.w.row(2).isZero());
  CHECK(smoothness_spec(10).w(0, 1) == Approx(-1706.96 / 125));
  for (int level = 1; level <= 10; ++level) {
    const SimSpec s = smoothness_spec(level);
    CHECK(s.w(0, 0) / s.w(0, 1) == Approx(3341.33 / -1706.96).epsilon(1e-12));
    CHECK(s.n == 10);
    CHECK(s.m == 100);
    CHECK(s.sigmas == std::vector<double>{2, 2, 2});
  }

  const SimResult r = sample_rhlp(smoothness_spec(1));
  std::vector<double> switches;
  for (std::size_t j = 1; j < r.z.size(); ++j)
    if (r.z[j] != r.z[j - 1]) switches.push_back(r.curves.grid()[j]);
  REQUIRE(switches.size() == 2);
  CHECK(std::abs(switches[0] - 1.0) < 0.1);
  CHECK(std::abs(switches[1] - 3.0) < 0.1);
}

TEST_CASE("experiment 2/3 parameters and gate transitions") {
  const SimSpec s = experiment23_spec(50, 100);
  CHECK(s.betas[0] == Eigen::Vector3d(23, -36, 18));
  CHECK(s.betas[1] == Eigen::Vector3d(-3.9, 11.08, -2.2));
  CHECK(s.betas[2] == Eigen::Vector3d(-337, 141.5, -14));
  CHECK(s.w == Eigen::MatrixXd{{92.72, -46.72}, {61.16, -15.28}, {0, 0}});
  CHECK(s.sigmas == std::vector<double>{1.0, 1.25, 0.75});
  CHECK(s.t_start == 0.0);
  CHECK(s.t_end == 5.0);

  const TimeGrid g = TimeGrid::uniform(0.0, 5.0, 501);
  const GateMatrix pi = logistic_proportions(GateWeights(s.w), g);
  std::vector<double> crossings;
  for (Eigen::Index j = 1; j < pi.rows(); ++j) {
    Eigen::Index now = 0, before = 0;
    pi.row(j).maxCoeff(&now);
    pi.row(j - 1).maxCoeff(&before);
    if (now != before) crossings.push_back(g[static_cast<std::size_t>(j)]);
  }
  REQUIRE(crossings.size() == 2);
  CHECK(std::abs(crossings[0] - 1.0) < 0.1);
  CHECK(std::abs(crossings[1] - 4.0) < 0.1);

  const SimResult r = sample_rhlp(experiment23_spec(2, 100));
  CHECK(r.mean(0) == Approx(23.0).epsilon(1e-6));
}

TEST_CASE("hidden labels follow the gate proportions") {
  SimSpec s = experiment23_spec(1, 6);
  s.w = Eigen::MatrixXd{{1.0, -0.8}, {0.2, 0.1}, {0, 0}};
  const GateMatrix pi = logistic_proportions(GateWeights(s.w), s.grid());
  const int draws = 10000;
  Eigen::MatrixXd freq = Eigen::MatrixXd::Zero(6, 3);
  for (int d = 0; d < draws; ++d) {
    s.seed = static_cast<std::uint64_t>(d);
    const SimResult r = sample_rhlp(s);
    for (std::size_t j = 0; j < 6; ++j) freq(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(r.z[j] - 1)) += 1.0;
  }
  freq /= draws;
  for (Eigen::Index j = 0; j < 6; ++j)
    for (Eigen::Index k = 0; k < 3; ++k) {
      const double p = pi(j, k);
      CHECK(std::abs(freq(j, k) - p) <= 3.0 * std::sqrt(p * (1 - p) / draws) + 1e-12);
    }
}

TEST_CASE("per-point moments match the drawn regimes") {
  const SimResult r = sample_rhlp(experiment23_spec(4000, 30));
  const SimSpec s = experiment23_spec(1, 30);
  const Eigen::VectorXd mean = r.curves.values().colwise().mean();
  for (std::size_t j = 0; j < 30; ++j) {
    const std::size_t k = r.z[j] - 1;
    const PolyRegime reg{s.betas[k], 1.0};
    const double sd = s.sigmas[k];
    CHECK(std::abs(mean(static_cast<Eigen::Index>(j)) - reg.mean_at(r.curves.grid()[j])) < 4 * sd / std::sqrt(4000.0));
    const Eigen::VectorXd col = r.curves.values().col(static_cast<Eigen::Index>(j));
    const double var = (col.array() - col.mean()).square().sum() / 3999.0;
    CHECK(std::abs(var - sd * sd) < 4 * sd * sd * std::sqrt(2.0 / 3999.0));
  }
}

TEST_CASE("generators are deterministic given the seed") {
  const SimResult a = sample_rhlp(experiment23_spec(3, 40));
  const SimResult b = sample_rhlp(experiment23_spec(3, 40));
  CHECK(a.curves.values() == b.curves.values());
  CHECK(a.z == b.z);
  SimSpec other = experiment23_spec(3, 40);
  other.seed = 43;
  CHECK(sample_rhlp(other).curves.values() != a.curves.values());
  CHECK(waveform(5, 9).curves.values() == waveform(5, 9).curves.values());
}

TEST_CASE("waveform shapes") {
  CHECK(waveform_base(11) == 6);
  CHECK(waveform_base(15 - 4) == 6);
  CHECK(waveform_base(7 + 4) == 6);
  CHECK(waveform_base(0) == 0);
  const LabeledCurves w = waveform(4, 1);
  CHECK(w.curves.m() == 21);
  CHECK(w.curves.grid().back() == 20.0);
  CHECK(w.curves.n() == 12);
  CHECK(w.labels == std::vector<int>{1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3});
  CHECK(waveform(2, 1, false).curves.m() == 20);
}

TEST_CASE("waveform class means converge to the envelope average") {
  const std::size_t n = 10000;
  const LabeledCurves w = waveform(n, 3);
  const Eigen::MatrixXd block = w.curves.values().topRows(static_cast<Eigen::Index>(n));
  const Eigen::VectorXd mean = block.colwise().mean();
  for (std::size_t j = 0; j < 21; ++j) {
    const double t = static_cast<double>(j);
    const double h1 = waveform_base(t), h2 = waveform_base(t - 4.0);
    // sd of u*h1 + (1-u)*h2 + e is sqrt(1 + (h1-h2)^2/12).
    const double sd = std::sqrt(1.0 + (h1 - h2) * (h1 - h2) / 12.0);
    CHECK(std::abs(mean(static_cast<Eigen::Index>(j)) - 0.5 * (h1 + h2)) < 3 * sd / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("complex scenario class sizes and degenerate generators") {
  const auto models = standin_complex_models();
  const LabeledCurves c = complex_classes(models[0], models[1], models[2], 1);
  CHECK(c.curves.n() == 77);
  CHECK(std::count(c.labels.begin(), c.labels.end(), 1) == 40);
  CHECK(std::count(c.labels.begin(), c.labels.end(), 2) == 37);
  const LabeledCurves h = homogeneous_classes(models[0], models[2], 1);
  CHECK(std::count(h.labels.begin(), h.labels.end(), 2) == 37);
  CHECK(models[1].regimes[1].beta(0) == Approx(models[0].regimes[1].beta(0) + 6.0));
}
