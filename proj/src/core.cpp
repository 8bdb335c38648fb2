#include "regimecurve/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace regimecurve {

TimeGrid::TimeGrid(std::vector<double> t) : t_(std::move(t)) {
  if (t_.empty()) throw DomainError("time grid must contain at least one instant");
  for (std::size_t j = 0; j < t_.size(); ++j) {
    if (!std::isfinite(t_[j]))
      throw DomainError("time grid entry " + std::to_string(j) + " is not finite");
    if (j > 0 && !(t_[j - 1] < t_[j]))
      throw DomainError("time grid is not strictly increasing at index " + std::to_string(j));
  }
}

TimeGrid TimeGrid::uniform(double start, double end, std::size_t m) {
  if (m < 2) throw DomainError("uniform grid needs m >= 2");
  if (!(start < end)) throw DomainError("uniform grid needs start < end");
  std::vector<double> t(m);
  const double step = (end - start) / static_cast<double>(m - 1);
  for (std::size_t j = 0; j < m; ++j) t[j] = start + step * static_cast<double>(j);
  t.back() = end;
  return TimeGrid(std::move(t));
}

CurveSet::CurveSet(TimeGrid grid, Eigen::MatrixXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.rows() < 1) throw DomainError("curve set must contain at least one curve");
  if (static_cast<std::size_t>(values_.cols()) != grid_.size())
    throw DomainError("curve length " + std::to_string(values_.cols()) +
                      " does not match grid length " + std::to_string(grid_.size()));
  if (!values_.allFinite()) throw DomainError("curve values must be finite");
}

CurveSet CurveSet::subset(std::span<const std::size_t> rows) const {
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), values_.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n()) throw DomainError("curve index out of range");
    sub.row(static_cast<Eigen::Index>(r)) = values_.row(static_cast<Eigen::Index>(rows[r]));
  }
  return CurveSet(grid_, std::move(sub));
}

Eigen::VectorXd CurveSet::mean_curve() const { return values_.colwise().mean().transpose(); }

double variance_floor(const CurveSet& curves) {
  const auto& x = curves.values();
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  return kVarianceFloorScale * (var > 0.0 ? var : 1.0);
}

Eigen::MatrixXd design_matrix(std::span<const double> t, int p) {
  if (p < 0) throw DomainError("polynomial degree must be >= 0");
  Eigen::MatrixXd r(static_cast<Eigen::Index>(t.size()), p + 1);
  for (std::size_t j = 0; j < t.size(); ++j) {
    double power = 1.0;
    for (int d = 0; d <= p; ++d) {
      r(static_cast<Eigen::Index>(j), d) = power;
      power *= t[j];
    }
  }
  return r;
}

Eigen::MatrixXd design_matrix(const TimeGrid& grid, int p) { return design_matrix(grid.values(), p); }

double gaussian_logpdf(double x, double mean, double var) {
  if (!(var > 0.0)) throw DomainError("gaussian_logpdf: variance must be positive");
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi) + std::log(var) + d * d / var);
}

double log_sum_exp(std::span<const double> v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                              bool* rank_deficient) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  const bool deficient = qr.rank() < a.cols();
  if (rank_deficient) *rank_deficient = deficient;
  if (!deficient) return qr.solve(y);

  // Ridge through an augmented system so we stay on a QR route.
  double lambda = 1e-10 * a.squaredNorm();
  if (!(lambda > 0.0)) lambda = 1e-10;
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  Eigen::MatrixXd aug(rows + cols, cols);
  aug.topRows(rows) = a;
  aug.bottomRows(cols) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(cols, cols);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows + cols);
  rhs.head(rows) = y;
  return aug.colPivHouseholderQr().solve(rhs);
}

double PolyRegime::mean_at(double t) const {
  double acc = 0.0;
  for (Eigen::Index d = beta.size() - 1; d >= 0; --d) acc = acc * t + beta(d);
  return acc;
}

std::size_t PiecewiseModel::segment_of(std::size_t j) const {
  auto it = std::upper_bound(gamma.begin(), gamma.end(), j);
  return static_cast<std::size_t>(it - gamma.begin()) - 1;
}

void PiecewiseModel::validate() const {
  if (regimes.empty()) throw DomainError("piecewise model has no segments");
  if (gamma.size() != regimes.size() + 1)
    throw DomainError("piecewise model: gamma must have K+1 entries");
  if (gamma.front() != 0 || gamma.back() != grid.size())
    throw DomainError("piecewise model: gamma must start at 0 and end at m");
  for (std::size_t k = 0; k + 1 < gamma.size(); ++k)
    if (!(gamma[k] < gamma[k + 1])) throw DomainError("piecewise model: empty segment");
  for (const auto& r : regimes) {
    if (r.beta.size() != p + 1) throw DomainError("piecewise model: beta size does not match p");
    if (!(r.sigma2 > 0.0)) throw DomainError("piecewise model: sigma2 must be positive");
  }
}

GateWeights::GateWeights(std::size_t k) : w_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), 2)) {
  if (k < 1) throw DomainError("gate needs at least one component");
}

GateWeights::GateWeights(Eigen::MatrixXd w) : w_(std::move(w)) {
  if (w_.rows() < 1 || w_.cols() != 2) throw DomainError("gate weights must be K x 2");
  if (!w_.allFinite()) throw DomainError("gate weights must be finite");
  const Eigen::RowVector2d ref = w_.row(w_.rows() - 1);
  w_.rowwise() -= ref;
}

Eigen::VectorXd GateWeights::free_parameters() const {
  const Eigen::Index free_rows = w_.rows() - 1;
  Eigen::VectorXd v(2 * free_rows);
  for (Eigen::Index k = 0; k < free_rows; ++k) {
    v(2 * k) = w_(k, 0);
    v(2 * k + 1) = w_(k, 1);
  }
  return v;
}

GateWeights GateWeights::from_free_parameters(const Eigen::VectorXd& free, std::size_t k) {
  if (free.size() != 2 * static_cast<Eigen::Index>(k - 1))
    throw DomainError("free gate parameter vector has the wrong size");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), 2);
  for (Eigen::Index r = 0; r + 1 < static_cast<Eigen::Index>(k); ++r) {
    w(r, 0) = free(2 * r);
    w(r, 1) = free(2 * r + 1);
  }
  return GateWeights(std::move(w));
}

void RhlpModel::validate() const {
  if (regimes.empty()) throw DomainError("RHLP model has no regimes");
  if (gate.K() != regimes.size()) throw DomainError("RHLP model: gate and regime counts differ");
  for (const auto& r : regimes) {
    if (r.beta.size() != p + 1) throw DomainError("RHLP model: beta size does not match p");
    if (!(r.sigma2 > 0.0)) throw DomainError("RHLP model: sigma2 must be positive");
  }
}

}  // namespace regimecurve
