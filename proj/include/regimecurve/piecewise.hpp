#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "regimecurve/core.hpp"

namespace regimecurve {

/// Least-squares fit of one polynomial to samples (a, b] of every curve.
struct SegmentFit {
  Eigen::VectorXd beta;
  double sigma2 = 0.0;
  /// Residual sum of squares over all n curves in the segment.
  double ssr = 0.0;
  /// ssr / sigma2 + n (b - a) log sigma2.
  double cost = 0.0;
};

/// Dynamic-programming tables.  Indexes are sample bounds in [0, m]; a segment
/// (a, b] holds 0-based samples a .. b-1.
struct CostTables {
  /// c1(a, b) = one-segment cost of (a, b]; +inf where a >= b.
  Eigen::MatrixXd c1;
  /// ck(k - 1, b) = optimal cost of splitting (0, b] into k segments; +inf if infeasible.
  Eigen::MatrixXd ck;
  /// back[k - 1][b] = start bound of the last segment in the optimal k-split of (0, b].
  std::vector<std::vector<std::size_t>> back;
};

SegmentFit segment_fit(const CurveSet& curves, std::size_t a, std::size_t b, int p);
/// Same, with an explicit variance floor.
SegmentFit segment_fit(const CurveSet& curves, std::size_t a, std::size_t b, int p,
                       double sigma2_floor);

/// Step 1 and Step 2 of Fisher's algorithm.  Segments shorter than `min_len`
/// samples are inadmissible.
CostTables build_cost_tables(const CurveSet& curves, std::size_t K, int p,
                             std::size_t min_len = 1);

/// Globally optimal K-segment piecewise polynomial fit of the whole curve set.
/// Ties in the split search resolve to the smallest split index.
PiecewiseModel fisher_segment(const CurveSet& curves, std::size_t K, int p,
                              std::size_t min_len = 1);

/// C(gamma): sum of segment_fit costs over the segments of `gamma`.
double segmentation_cost(const CurveSet& curves, std::span<const std::size_t> gamma, int p);

double piecewise_loglik(const PiecewiseModel& model, const CurveSet& curves);

/// J(psi, gamma) = sum_k [ SSR_k / sigma2_k + n m_k log sigma2_k ].
double piecewise_criterion(const PiecewiseModel& model, const CurveSet& curves);

/// Hard-assignment reconstruction: the owning segment's polynomial at each t_j.
Eigen::VectorXd piecewise_approximation(const PiecewiseModel& model);

/// 1-based segment label of every sample.
std::vector<std::size_t> segment_labels(const PiecewiseModel& model);

}  // namespace regimecurve
