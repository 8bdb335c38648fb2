#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace regimecurve {

/// Raised when an input violates an operation's preconditions.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an estimator cannot produce a usable model.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relative scale of the variance floor: sigma2 >= kVarianceFloorScale * var(X).
inline constexpr double kVarianceFloorScale = 1e-8;

/// Strictly increasing, finite sampling instants shared by every curve of a set.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> t);

  /// m equally spaced instants covering [start, end] inclusively.
  static TimeGrid uniform(double start, double end, std::size_t m);

  std::size_t size() const { return t_.size(); }
  double operator[](std::size_t j) const { return t_[j]; }
  std::span<const double> values() const { return t_; }
  double front() const { return t_.front(); }
  double back() const { return t_.back(); }

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> t_;
};

/// n curves sampled on one grid; row i of values() is curve i.
class CurveSet {
 public:
  CurveSet(TimeGrid grid, Eigen::MatrixXd values);

  const TimeGrid& grid() const { return grid_; }
  const Eigen::MatrixXd& values() const { return values_; }
  std::size_t n() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t m() const { return grid_.size(); }

  /// Curves at the given row indexes, in that order.
  CurveSet subset(std::span<const std::size_t> rows) const;

  /// Column means, i.e. the pointwise average curve.
  Eigen::VectorXd mean_curve() const;

 private:
  TimeGrid grid_;
  Eigen::MatrixXd values_;
};

/// Smallest admissible noise variance for models fitted on `curves`:
/// kVarianceFloorScale times the global variance of all entries (or times 1
/// when that variance is zero).
double variance_floor(const CurveSet& curves);

/// m x (p+1) Vandermonde matrix, entry (j,d) = t_j^d.
Eigen::MatrixXd design_matrix(std::span<const double> t, int p);
Eigen::MatrixXd design_matrix(const TimeGrid& grid, int p);

double gaussian_logpdf(double x, double mean, double var);

/// log(sum(exp(v))) ignoring -inf entries; -inf when every entry is -inf.
double log_sum_exp(std::span<const double> v);

/// Least-squares solution of A b ~ y through a column-pivoted QR.  When the
/// factorization reports rank deficiency a ridge of 1e-10 * trace(A^T A) is
/// added and `rank_deficient` (if given) is set.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                              bool* rank_deficient = nullptr);

/// One polynomial regime: coefficients (lowest degree first) and noise variance.
struct PolyRegime {
  Eigen::VectorXd beta;
  double sigma2 = 1.0;

  /// beta^T r(t).
  double mean_at(double t) const;
};

/// Piecewise polynomial model with hard segment bounds gamma (0 = gamma_1 < ... < gamma_{K+1} = m).
/// Segment k covers 0-based sample indexes [gamma[k], gamma[k+1]).
struct PiecewiseModel {
  TimeGrid grid;
  int p = 0;
  std::vector<std::size_t> gamma;
  std::vector<PolyRegime> regimes;
  /// Optimal additive segmentation cost C(gamma), as found by fisher_segment.
  double cost = 0.0;

  std::size_t K() const { return regimes.size(); }
  /// Segment index (0-based) owning sample j.
  std::size_t segment_of(std::size_t j) const;
  void validate() const;
};

/// K x 2 logistic gate weights; row k = (w_k0, w_k1).  The last row is the
/// reference component and stays at (0, 0).
class GateWeights {
 public:
  /// All-zero gate, i.e. uniform proportions.
  explicit GateWeights(std::size_t k);
  /// Takes `w` as given and re-expresses every row against the last one so the
  /// reference row becomes (0, 0); the proportions are unchanged.
  explicit GateWeights(Eigen::MatrixXd w);

  std::size_t K() const { return static_cast<std::size_t>(w_.rows()); }
  const Eigen::MatrixXd& matrix() const { return w_; }
  double intercept(std::size_t k) const { return w_(static_cast<Eigen::Index>(k), 0); }
  double slope(std::size_t k) const { return w_(static_cast<Eigen::Index>(k), 1); }

  /// Free (K-1) x 2 block flattened row-major: (w_10, w_11, w_20, ...).
  Eigen::VectorXd free_parameters() const;
  static GateWeights from_free_parameters(const Eigen::VectorXd& free, std::size_t k);

 private:
  Eigen::MatrixXd w_;
};

/// Curves with one integer class label per row.
struct LabeledCurves {
  CurveSet curves;
  std::vector<int> labels;
};

/// Regression model with a hidden logistic process.
struct RhlpModel {
  TimeGrid grid;
  int p = 0;
  GateWeights gate{1};
  std::vector<PolyRegime> regimes;
  double loglik = 0.0;

  std::size_t K() const { return regimes.size(); }
  void validate() const;
};

}  // namespace regimecurve
