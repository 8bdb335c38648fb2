#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "regimecurve/classify.hpp"
#include "regimecurve/core.hpp"

namespace regimecurve {

/// (1/m) sum_j (mu_j - fit_j)^2 for one shared fitted curve.
double approximation_mse(const Eigen::VectorXd& true_mean, const Eigen::VectorXd& fitted);
/// (1/(n m)) sum_i sum_j (mu_j - fit_ij)^2 with one fitted row per curve.
double approximation_mse(const Eigen::VectorXd& true_mean, const Eigen::MatrixXd& fitted);

/// Seeded shuffle within each class, then round-robin into k folds.  Returns
/// the held-out row indexes of each fold, sorted.
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels, std::size_t k,
                                                       std::uint64_t seed);

struct CvReport {
  std::vector<double> folds;
  double mean_error = 0.0;
  /// Sample standard deviation across folds.
  double std_error = 0.0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
};

/// A trained predictor for one curve.
using CurvePredictor = std::function<int(std::span<const double>)>;
/// Builds a predictor from a training split.
using CurveTrainer = std::function<CurvePredictor(const LabeledCurves&)>;

/// Stratified k-fold misclassification rate for an arbitrary trainer.
CvReport kfold_cv(const LabeledCurves& data, std::size_t k, std::uint64_t seed, const CurveTrainer& trainer,
                  unsigned threads = 1);

/// Same, training a MAP classifier of `settings.family` per fold.
CvReport kfold_cv(const LabeledCurves& data, std::size_t k, const FitSettings& settings, std::uint64_t seed,
                  unsigned threads = 1);

struct BenchCell {
  std::size_t n = 0;
  std::size_t m = 0;
};

struct BenchRow {
  Family method = Family::Rhlp;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t K = 0;
  int p = 0;
  /// Mean wall time of the timed repetitions.
  double seconds = 0.0;
  std::size_t repetitions = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
};

/// Times fisher_segment / fit_em on fresh data from the three-regime quadratic
/// generator for every (method, cell).  The first repetition is a discarded
/// warm-up when repetitions >= 3.  Timing runs sequentially.
BenchReport runtime_bench(const std::vector<BenchCell>& cells, const std::vector<Family>& methods,
                          std::size_t repetitions, std::uint64_t seed, const FitSettings& settings);

/// Spearman rank correlation (average ranks for ties).
double spearman_rho(std::span<const double> x, std::span<const double> y);

}  // namespace regimecurve
