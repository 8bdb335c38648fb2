// Acceptance suite.  Run with no argument for every criterion, or with one
// criterion number.  Prints one PASS/FAIL line per criterion; exit code 1 if
// any selected criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <spdlog/fmt/fmt.h>

#include "oracles.hpp"
#include "regimecurve/classify.hpp"
#include "regimecurve/eval.hpp"
#include "regimecurve/parallel.hpp"
#include "regimecurve/piecewise.hpp"
#include "regimecurve/rhlp.hpp"
#include "regimecurve/select.hpp"
#include "regimecurve/simulate.hpp"

using namespace regimecurve;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

// Curves with a few random level/slope changes plus noise.
CurveSet random_instance(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> cut(0, m);
  std::vector<double> t(m);
  for (std::size_t j = 0; j < m; ++j) t[j] = 0.5 * static_cast<double>(j);
  const std::size_t c1 = cut(rng), c2 = cut(rng);
  const double a = 5.0 * noise(rng), b = 5.0 * noise(rng);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (j >= c1 ? a : 0.0) + (j >= c2 ? b * t[j] : 0.0) + noise(rng);
  return {TimeGrid(std::move(t)), std::move(x)};
}

Verdict dp_optimality() {
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 1 + rng() % 3;
    const std::size_t m = 4 + rng() % 9;
    const std::size_t K = 1 + rng() % 3;
    const int p = static_cast<int>(rng() % 2);
    const CurveSet c = random_instance(rng, n, m);
    const double dp = fisher_segment(c, K, p).cost;
    const double brute = oracle::brute_force_min_cost(c, K, p);
    worst = std::max(worst, oracle::rel_err(dp, brute));
  }
  return {worst <= 1e-9, fmt::format("200 instances, worst relative gap {:.3e} (tol 1e-9)", worst)};
}

Verdict em_monotonicity() {
  double worst_drop = 0.0;
  std::size_t fits = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SimSpec spec = experiment23_spec(50, 100);
    spec.seed = seed;
    const SimResult sim = sample_rhlp(spec);
    EmConfig cfg;
    cfg.seed = seed;
    cfg.threads = default_threads();
    const EmResult r = fit_em(sim.curves, 3, 2, cfg);
    const auto& ll = r.trace.logliks;
    for (std::size_t q = 1; q < ll.size(); ++q) worst_drop = std::max(worst_drop, ll[q - 1] - ll[q]);
    ++fits;
  }
  return {worst_drop <= 1e-8, fmt::format("{} fits, largest log-likelihood decrease {:.3e} (tol 1e-8)", fits, worst_drop)};
}

Verdict irls_gradient() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::normal_distribution<double> g(0.0, 1.5);
  double worst = 0.0;
  for (int point = 0; point < 20; ++point) {
    const std::size_t K = 2 + static_cast<std::size_t>(point % 3);
    const std::size_t n = 1 + rng() % 5, m = 10 + rng() % 30;
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0 + 4.0 * u(rng), m);
    Eigen::MatrixXd totals(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(K));
    for (Eigen::Index j = 0; j < totals.rows(); ++j) {
      for (Eigen::Index k = 0; k < totals.cols(); ++k) totals(j, k) = u(rng);
      totals.row(j) *= static_cast<double>(n) / totals.row(j).sum();
    }
    Eigen::MatrixXd w(static_cast<Eigen::Index>(K), 2);
    for (Eigen::Index k = 0; k < w.rows(); ++k) w.row(k) << g(rng), g(rng);
    const GateWeights gate(w);
    const Eigen::VectorXd v = gate.free_parameters();
    const Eigen::VectorXd grad = gate_gradient(totals, static_cast<double>(n), grid, gate);
    const std::vector<double> t(grid.values().begin(), grid.values().end());
    Eigen::VectorXd fd(v.size());
    for (Eigen::Index q = 0; q < v.size(); ++q) {
      const double h = 1e-6 * std::max(std::abs(v(q)), 1.0);
      Eigen::VectorXd up = v, dn = v;
      up(q) += h;
      dn(q) -= h;
      fd(q) = (oracle::q1(totals, GateWeights::from_free_parameters(up, K).matrix(), t) -
               oracle::q1(totals, GateWeights::from_free_parameters(dn, K).matrix(), t)) /
              (2 * h);
    }
    worst = std::max(worst, oracle::rel_err(grad, fd));
  }
  return {worst < 1e-5, fmt::format("20 points, worst relative error {:.3e} (tol 1e-5)", worst)};
}

// Bayes error of the three-class waveform problem under the generator used
// here (one u per curve), by Monte Carlo: each class density integrates the
// Gaussian over u in (0,1) with a midpoint rule.
double waveform_bayes_error(std::size_t draws, std::uint64_t seed) {
  const LabeledCurves data = waveform(draws, seed);
  const std::size_t m = data.curves.m();
  std::vector<std::array<double, 21>> h(3);
  for (std::size_t j = 0; j < m; ++j) {
    const double t = static_cast<double>(j);
    h[0][j] = waveform_base(t);
    h[1][j] = waveform_base(t - 4.0);
    h[2][j] = waveform_base(t + 4.0);
  }
  const std::array<std::pair<int, int>, 3> pairs{{{0, 1}, {1, 2}, {0, 2}}};
  const int grid = 400;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < data.curves.n(); ++i) {
    std::array<double, 3> logdens{};
    for (std::size_t g = 0; g < 3; ++g) {
      std::vector<double> terms(grid);
      for (int q = 0; q < grid; ++q) {
        const double u = (q + 0.5) / grid;
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          const double mu = u * h[static_cast<std::size_t>(pairs[g].first)][j] +
                            (1 - u) * h[static_cast<std::size_t>(pairs[g].second)][j];
          const double r = data.curves.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - mu;
          s -= 0.5 * r * r;
        }
        terms[static_cast<std::size_t>(q)] = s;
      }
      logdens[g] = log_sum_exp(terms);
    }
    const auto best = static_cast<int>(std::max_element(logdens.begin(), logdens.end()) - logdens.begin()) + 1;
    if (best != data.labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.curves.n());
}

Verdict waveform_classification() {
  std::vector<double> rhlp, piecewise;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const LabeledCurves data = waveform(500, seed);
    for (Family f : {Family::Rhlp, Family::Piecewise}) {
      FitSettings s;
      s.family = f;
      s.K = 2;
      s.p = 3;
      const CvReport r = kfold_cv(data, 5, s, seed, default_threads());
      (f == Family::Rhlp ? rhlp : piecewise).push_back(r.mean_error);
      std::printf("  waveform seed %llu %-9s mean error %.4f (fold sd %.4f)\n", static_cast<unsigned long long>(seed),
                  std::string(family_name(f)).c_str(), r.mean_error, r.std_error);
    }
  }
  const double bayes = waveform_bayes_error(2000, 99);
  const double er = mean_of(rhlp), ep = mean_of(piecewise);
  const bool ok = er >= 0.005 && er <= 0.035 && ep >= 0.012 && ep <= 0.045 && er <= ep;
  return {ok, fmt::format("RHLP {:.2f}% (target 0.5-3.5), piecewise {:.2f}% (target 1.2-4.5); "
                          "Bayes error of this generator ~ {:.1f}%",
                          100 * er, 100 * ep, 100 * bayes)};
}

struct MsePair {
  double rhlp = 0.0;
  double piecewise = 0.0;
};

// Mean approximation error over `seeds` samples of `spec` for both estimators.
MsePair mean_mse(SimSpec spec, std::size_t seeds) {
  std::vector<MsePair> per(seeds);
  parallel_for(seeds, default_threads(), [&](std::size_t s) {
    SimSpec local = spec;
    local.seed = 1000 + s;
    const SimResult sim = sample_rhlp(local);
    EmConfig cfg;
    cfg.seed = local.seed;
    const EmResult r = fit_em(sim.curves, spec.K, spec.p, cfg);
    const PiecewiseModel pw = fisher_segment(sim.curves, spec.K, spec.p);
    per[s] = {approximation_mse(sim.mean, rhlp_approximation(r.model)),
              approximation_mse(sim.mean, piecewise_approximation(pw))};
  });
  MsePair out;
  for (const auto& p : per) {
    out.rhlp += p.rhlp / static_cast<double>(seeds);
    out.piecewise += p.piecewise / static_cast<double>(seeds);
  }
  return out;
}

Verdict smoothness_study() {
  bool ok = true;
  std::string detail;
  for (int level = 1; level <= 10; ++level) {
    if (level == 4 || level == 5) continue;
    const MsePair e = mean_mse(smoothness_spec(level), 20);
    std::printf("  smoothness level %2d: RHLP %.4f piecewise %.4f\n", level, e.rhlp, e.piecewise);
    if (level >= 6 && !(e.rhlp < e.piecewise)) {
      ok = false;
      detail += fmt::format(" level {} RHLP not below piecewise;", level);
    }
    if (level <= 3) {
      const double ratio = std::max(e.rhlp, e.piecewise) / std::min(e.rhlp, e.piecewise);
      if (!(ratio <= 1.5)) {
        ok = false;
        detail += fmt::format(" level {} ratio {:.2f} > 1.5;", level, ratio);
      }
    }
  }
  return {ok, ok ? "levels 6-10 RHLP < piecewise, levels 1-3 within factor 1.5" : detail};
}

Verdict scaling_trends() {
  std::vector<double> ms, ns, m_rhlp, m_pw, n_rhlp, n_pw;
  for (std::size_t m = 100; m <= 500; m += 100) {
    const MsePair e = mean_mse(experiment23_spec(50, m), 20);
    ms.push_back(static_cast<double>(m));
    m_rhlp.push_back(e.rhlp);
    m_pw.push_back(e.piecewise);
    std::printf("  n=50 m=%zu: RHLP %.5f piecewise %.5f\n", m, e.rhlp, e.piecewise);
  }
  for (std::size_t n = 10; n <= 100; n += 10) {
    const MsePair e = mean_mse(experiment23_spec(n, 100), 20);
    ns.push_back(static_cast<double>(n));
    n_rhlp.push_back(e.rhlp);
    n_pw.push_back(e.piecewise);
    std::printf("  n=%zu m=100: RHLP %.5f piecewise %.5f\n", n, e.rhlp, e.piecewise);
  }
  const double a = spearman_rho(ms, m_rhlp), b = spearman_rho(ms, m_pw);
  const double c = spearman_rho(ns, n_rhlp), d = spearman_rho(ns, n_pw);
  const bool ok = a < -0.5 && b < -0.5 && c < -0.5 && d < -0.5;
  return {ok, fmt::format("Spearman rho over m: RHLP {:.2f} piecewise {:.2f}; over n: RHLP {:.2f} piecewise {:.2f} (need < -0.5)",
                          a, b, c, d)};
}

Verdict runtime_crossover() {
  FitSettings s;
  s.K = 3;
  s.p = 2;
  const BenchReport r = runtime_bench({{50, 200}, {50, 400}}, {Family::Piecewise, Family::Rhlp}, 5, 7, s);
  const double pw = r.rows[1].seconds / r.rows[0].seconds;
  const double rh = r.rows[3].seconds / r.rows[2].seconds;
  for (const auto& row : r.rows)
    std::printf("  %-9s n=%zu m=%zu: %.4f s\n", std::string(family_name(row.method)).c_str(), row.n, row.m, row.seconds);
  return {pw >= 3.0 && rh < pw,
          fmt::format("m 200->400 time ratio: piecewise {:.2f} (need >= 3), RHLP {:.2f} (need < piecewise)", pw, rh)};
}

Verdict bic_recovery() {
  std::vector<int> hit(20, 0);
  std::vector<std::string> picks(20);
  std::vector<std::size_t> K_range{1, 2, 3, 4, 5};
  std::vector<int> p_range{0, 1, 2, 3};
  for (std::size_t seed = 0; seed < 20; ++seed) {
    SimSpec spec = experiment23_spec(50, 100);
    spec.seed = 500 + seed;
    EmConfig cfg;
    cfg.seed = spec.seed;
    cfg.threads = default_threads();
    const BicReport rep = grid_select(sample_rhlp(spec).curves, K_range, p_range, cfg);
    hit[seed] = rep.best_K == 3 && rep.best_p == 2;
    picks[seed] = fmt::format("({},{})", rep.best_K, rep.best_p);
  }
  const int hits = std::accumulate(hit.begin(), hit.end(), 0);
  std::string all;
  for (const auto& p : picks) all += p + " ";
  std::printf("  selections: %s\n", all.c_str());
  return {hits >= 16, fmt::format("(3,2) selected in {}/20 seeds (need >= 16)", hits)};
}

Verdict hard_gate() {
  double worst = 0.0;
  std::mt19937_64 rng(9);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SimSpec spec = experiment23_spec(20, 100);
    spec.seed = seed;
    const SimResult sim = sample_rhlp(spec);
    const std::size_t a = 10 + rng() % 30, b = 50 + rng() % 40;
    const std::vector<std::size_t> gamma{0, a, b, 100};
    Eigen::MatrixXd log_pi = Eigen::MatrixXd::Constant(100, 3, -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t j = gamma[k]; j < gamma[k + 1]; ++j)
        log_pi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = 0.0;
    RhlpModel init{sim.curves.grid(), 2, GateWeights(3), {}, 0.0};
    for (int k = 0; k < 3; ++k) init.regimes.push_back({Eigen::Vector3d::Zero(), 1.0});
    const EmResult r = run_em(sim.curves, init, EmConfig{}, log_pi);
    for (std::size_t k = 0; k < 3; ++k) {
      const SegmentFit f = segment_fit(sim.curves, gamma[k], gamma[k + 1], 2);
      worst = std::max(worst, oracle::rel_err(r.model.regimes[k].beta, f.beta));
      worst = std::max(worst, oracle::rel_err(r.model.regimes[k].sigma2, f.sigma2));
    }
  }
  return {worst <= 1e-8, fmt::format("10 segmentations, worst relative deviation {:.3e} (tol 1e-8)", worst)};
}

Verdict complex_classes_study() {
  const auto models = standin_complex_models();
  FitSettings s;
  s.family = Family::Rhlp;
  s.K = 3;
  s.p = 2;
  std::vector<double> hetero, homo;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    hetero.push_back(kfold_cv(complex_classes(models[0], models[1], models[2], seed), 5, s, seed, default_threads()).mean_error);
    homo.push_back(kfold_cv(homogeneous_classes(models[0], models[2], seed), 5, s, seed, default_threads()).mean_error);
  }
  const double gap = mean_of(hetero) - mean_of(homo);
  return {gap >= 0.05, fmt::format("heterogeneous {:.1f}% vs homogeneous {:.1f}%: gap {:.1f} points (need >= 5)",
                                   100 * mean_of(hetero), 100 * mean_of(homo), 100 * gap)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"DP optimality", dp_optimality},
      {"EM monotonicity", em_monotonicity},
      {"IRLS gradient check", irls_gradient},
      {"waveform classification", waveform_classification},
      {"smoothness study", smoothness_study},
      {"scaling trends", scaling_trends},
      {"runtime crossover", runtime_crossover},
      {"BIC recovery", bic_recovery},
      {"hard-gate equivalence", hard_gate},
      {"complex classes", complex_classes_study},
  };
  std::vector<std::size_t> selected;
  if (argc > 1) {
    const int c = std::atoi(argv[1]);
    if (c < 1 || c > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "criterion must be 1..%zu\n", criteria.size());
      return 2;
    }
    selected.push_back(static_cast<std::size_t>(c - 1));
  } else {
    for (std::size_t i = 0; i < criteria.size(); ++i) selected.push_back(i);
  }
  bool all = true;
  for (std::size_t i : selected) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v{false, ""};
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("CRITERION %zu %s: %s: %s [%.1fs]\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first,
                v.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
