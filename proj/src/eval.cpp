#include "regimecurve/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <string>

#include "regimecurve/parallel.hpp"
#include "regimecurve/piecewise.hpp"
#include "regimecurve/rhlp.hpp"
#include "regimecurve/simulate.hpp"

namespace regimecurve {

double approximation_mse(const Eigen::VectorXd& true_mean, const Eigen::VectorXd& fitted) {
  if (true_mean.size() != fitted.size()) throw DomainError("approximation_mse: length mismatch");
  if (true_mean.size() == 0) throw DomainError("approximation_mse: empty input");
  return (true_mean - fitted).squaredNorm() / static_cast<double>(true_mean.size());
}

double approximation_mse(const Eigen::VectorXd& true_mean, const Eigen::MatrixXd& fitted) {
  if (fitted.cols() != true_mean.size()) throw DomainError("approximation_mse: length mismatch");
  if (fitted.size() == 0) throw DomainError("approximation_mse: empty input");
  return (fitted.rowwise() - true_mean.transpose()).squaredNorm() / static_cast<double>(fitted.size());
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels, std::size_t k,
                                                       std::uint64_t seed) {
  if (k < 2) throw DomainError("cross-validation needs k >= 2 folds");
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  std::vector<std::vector<std::size_t>> folds(k);
  for (auto& [label, rows] : groups) {
    if (rows.size() < k)
      throw DomainError("class " + std::to_string(label) + " has " + std::to_string(rows.size()) +
                        " curves, fewer than k = " + std::to_string(k));
    std::seed_seq seq{static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(static_cast<std::int64_t>(label))};
    std::mt19937_64 rng(seq);
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t r = 0; r < rows.size(); ++r) folds[r % k].push_back(rows[r]);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CvReport kfold_cv(const LabeledCurves& data, std::size_t k, std::uint64_t seed, const CurveTrainer& trainer,
                  unsigned threads) {
  if (data.labels.size() != data.curves.n()) throw DomainError("label count differs from curve count");
  const auto folds = stratified_folds(data.labels, k, seed);
  const std::size_t n = data.curves.n();

  CvReport report;
  report.k = k;
  report.seed = seed;
  report.folds.assign(k, 0.0);
  parallel_for(k, threads, [&](std::size_t f) {
    std::vector<bool> held(n, false);
    for (std::size_t i : folds[f]) held[i] = true;
    std::vector<std::size_t> train_rows;
    std::vector<int> train_labels;
    for (std::size_t i = 0; i < n; ++i)
      if (!held[i]) {
        train_rows.push_back(i);
        train_labels.push_back(data.labels[i]);
      }
    const CurvePredictor predictor = trainer({data.curves.subset(train_rows), std::move(train_labels)});
    std::size_t wrong = 0;
    for (std::size_t i : folds[f]) {
      const Eigen::VectorXd row = data.curves.values().row(static_cast<Eigen::Index>(i)).transpose();
      if (predictor(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))) != data.labels[i])
        ++wrong;
    }
    report.folds[f] = static_cast<double>(wrong) / static_cast<double>(folds[f].size());
  });

  report.mean_error = std::accumulate(report.folds.begin(), report.folds.end(), 0.0) / static_cast<double>(k);
  double ss = 0.0;
  for (double e : report.folds) ss += (e - report.mean_error) * (e - report.mean_error);
  report.std_error = std::sqrt(ss / static_cast<double>(k - 1));
  return report;
}

CvReport kfold_cv(const LabeledCurves& data, std::size_t k, const FitSettings& settings, std::uint64_t seed,
                  unsigned threads) {
  FitSettings inner = settings;
  inner.em.threads = 1;
  return kfold_cv(
      data, k, seed,
      [inner](const LabeledCurves& split) -> CurvePredictor {
        auto clf = std::make_shared<const Classifier>(train(split, inner));
        return [clf](std::span<const double> curve) { return predict(*clf, curve); };
      },
      threads);
}

BenchReport runtime_bench(const std::vector<BenchCell>& cells, const std::vector<Family>& methods,
                          std::size_t repetitions, std::uint64_t seed, const FitSettings& settings) {
  if (cells.empty()) throw DomainError("runtime_bench needs at least one cell");
  if (methods.empty()) throw DomainError("runtime_bench needs at least one method");
  if (repetitions < 1) throw DomainError("runtime_bench needs repetitions >= 1");
  EmConfig em = settings.em;
  em.threads = 1;

  BenchReport report;
  for (Family method : methods) {
    for (const auto& cell : cells) {
      double total = 0.0;
      std::size_t timed = 0;
      for (std::size_t r = 0; r < repetitions; ++r) {
        SimSpec spec = experiment23_spec(cell.n, cell.m);
        spec.seed = seed + r;
        const SimResult sim = sample_rhlp(spec);
        const auto start = std::chrono::steady_clock::now();
        if (method == Family::Piecewise) {
          (void)fisher_segment(sim.curves, settings.K, settings.p, settings.min_segment);
        } else {
          (void)fit_em(sim.curves, settings.K, settings.p, em);
        }
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        if (repetitions >= 3 && r == 0) continue;
        total += elapsed.count();
        ++timed;
      }
      report.rows.push_back({method, cell.n, cell.m, settings.K, settings.p,
                             std::max(total / static_cast<double>(timed), 1e-12), timed});
    }
  }
  return report;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t q = i; q <= j; ++q) ranks[idx[q]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("spearman_rho needs two equal-length samples (>= 2)");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace regimecurve
