#include "regimecurve/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace regimecurve {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Sum over curves of squared deviations from the column mean, per sample.
Eigen::VectorXd pure_error(const CurveSet& curves) {
  const auto& x = curves.values();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  return (x.rowwise() - mean).colwise().squaredNorm().transpose();
}

double segment_cost(double ssr, double count, double floor, double* sigma2_out = nullptr) {
  const double sigma2 = std::max(ssr / count, floor);
  if (sigma2_out) *sigma2_out = sigma2;
  return ssr / sigma2 + count * std::log(sigma2);
}

// Row-by-row least squares (Givens updates of an upper-triangular factor).
// The leftover of each absorbed row contributes exactly its squared residual.
class SequentialLeastSquares {
 public:
  explicit SequentialLeastSquares(int cols)
      : r_(Eigen::MatrixXd::Zero(cols, cols)), work_(cols) {}

  void add(const double* row, double scale, double y) {
    const Eigen::Index q = r_.rows();
    for (Eigen::Index i = 0; i < q; ++i) work_(i) = scale * row[i];
    double yy = scale * y;
    for (Eigen::Index i = 0; i < q; ++i) {
      const double xi = work_(i);
      if (xi == 0.0) continue;
      const double rii = r_(i, i);
      const double h = std::hypot(rii, xi);
      const double c = rii / h;
      const double s = xi / h;
      r_(i, i) = h;
      for (Eigen::Index l = i + 1; l < q; ++l) {
        const double ril = r_(i, l);
        r_(i, l) = c * ril + s * work_(l);
        work_(l) = -s * ril + c * work_(l);
      }
      const double qi = qty_(i);
      qty_(i) = c * qi + s * yy;
      yy = -s * qi + c * yy;
    }
    rss_ += yy * yy;
  }

  double rss() const { return rss_; }

  void reset() {
    r_.setZero();
    qty_.setZero();
    rss_ = 0.0;
  }

 private:
  Eigen::MatrixXd r_;
  Eigen::VectorXd work_;
  Eigen::VectorXd qty_ = Eigen::VectorXd::Zero(work_.size());
  double rss_ = 0.0;
};

}  // namespace

SegmentFit segment_fit(const CurveSet& curves, std::size_t a, std::size_t b, int p) {
  return segment_fit(curves, a, b, p, variance_floor(curves));
}

SegmentFit segment_fit(const CurveSet& curves, std::size_t a, std::size_t b, int p,
                       double sigma2_floor) {
  if (a >= b) throw DomainError("segment_fit: empty segment (a >= b)");
  if (b > curves.m()) throw DomainError("segment_fit: segment end beyond the grid");
  if (p < 0) throw DomainError("segment_fit: degree must be >= 0");

  const auto len = static_cast<Eigen::Index>(b - a);
  const auto first = static_cast<Eigen::Index>(a);
  const auto t = curves.grid().values().subspan(a, b - a);
  const Eigen::MatrixXd phi = design_matrix(t, p);
  const Eigen::MatrixXd block = curves.values().middleCols(first, len);
  const Eigen::VectorXd mean = block.colwise().mean().transpose();

  // Stacked residuals split into within-sample scatter plus n times the
  // residual of the mean curve, so the solve is m_k x (p+1).
  SegmentFit fit;
  fit.beta = least_squares(phi, mean);
  const double n = static_cast<double>(curves.n());
  const double within = (block.rowwise() - mean.transpose()).squaredNorm();
  fit.ssr = within + n * (mean - phi * fit.beta).squaredNorm();
  fit.cost = segment_cost(fit.ssr, n * static_cast<double>(len), sigma2_floor, &fit.sigma2);
  return fit;
}

CostTables build_cost_tables(const CurveSet& curves, std::size_t K, int p, std::size_t min_len) {
  const std::size_t m = curves.m();
  if (K < 1) throw DomainError("number of segments must be >= 1");
  if (min_len < 1) min_len = 1;
  if (K * min_len > m)
    throw DomainError("cannot split " + std::to_string(m) + " samples into " + std::to_string(K) +
                      " segments of at least " + std::to_string(min_len) + " samples");
  if (p < 0) throw DomainError("degree must be >= 0");

  const double floor = variance_floor(curves);
  const double n = static_cast<double>(curves.n());
  const Eigen::MatrixXd phi = design_matrix(curves.grid(), p);
  // Row-major copy so each design row is contiguous.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = phi;
  const Eigen::VectorXd mean = curves.mean_curve();
  const Eigen::VectorXd within = pure_error(curves);
  const double scale = std::sqrt(n);

  CostTables tables;
  const auto dim = static_cast<Eigen::Index>(m + 1);
  tables.c1 = Eigen::MatrixXd::Constant(dim, dim, kInf);

  // Step 1: one-segment costs for every (a, b].
  SequentialLeastSquares ls(p + 1);
  for (std::size_t a = 0; a < m; ++a) {
    ls.reset();
    double scatter = 0.0;
    for (std::size_t b = a + 1; b <= m; ++b) {
      const auto j = static_cast<Eigen::Index>(b - 1);
      ls.add(rows.row(j).data(), scale, mean(j));
      scatter += within(j);
      const double count = n * static_cast<double>(b - a);
      tables.c1(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          segment_cost(scatter + ls.rss(), count, floor);
    }
  }

  // Step 2: optimal k-splits of every prefix (0, b].
  tables.ck = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(K), dim, kInf);
  tables.back.assign(K, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t b = min_len; b <= m; ++b)
    tables.ck(0, static_cast<Eigen::Index>(b)) = tables.c1(0, static_cast<Eigen::Index>(b));

  for (std::size_t k = 2; k <= K; ++k) {
    const auto row = static_cast<Eigen::Index>(k - 1);
    for (std::size_t b = k * min_len; b <= m; ++b) {
      double best = kInf;
      std::size_t arg = 0;
      for (std::size_t h = (k - 1) * min_len; h + min_len <= b; ++h) {
        const double c = tables.ck(row - 1, static_cast<Eigen::Index>(h)) +
                         tables.c1(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(b));
        if (c < best) {
          best = c;
          arg = h;
        }
      }
      tables.ck(row, static_cast<Eigen::Index>(b)) = best;
      tables.back[k - 1][b] = arg;
    }
  }
  return tables;
}

PiecewiseModel fisher_segment(const CurveSet& curves, std::size_t K, int p, std::size_t min_len) {
  if (K > curves.m()) throw DomainError("number of segments K exceeds the curve length m");
  const CostTables tables = build_cost_tables(curves, K, p, min_len);
  const std::size_t m = curves.m();

  // Step 3: backtrack the stored split indexes.
  std::vector<std::size_t> gamma(K + 1, 0);
  gamma[K] = m;
  for (std::size_t k = K; k >= 2; --k) gamma[k - 1] = tables.back[k - 1][gamma[k]];

  const double floor = variance_floor(curves);
  PiecewiseModel model{.grid = curves.grid(), .p = p, .gamma = gamma, .regimes = {}, .cost = 0.0};
  model.regimes.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    SegmentFit fit = segment_fit(curves, gamma[k], gamma[k + 1], p, floor);
    model.regimes.push_back({std::move(fit.beta), fit.sigma2});
  }
  model.cost = tables.ck(static_cast<Eigen::Index>(K - 1), static_cast<Eigen::Index>(m));
  return model;
}

double segmentation_cost(const CurveSet& curves, std::span<const std::size_t> gamma, int p) {
  if (gamma.size() < 2 || gamma.front() != 0 || gamma.back() != curves.m())
    throw DomainError("segmentation bounds must run from 0 to m");
  const double floor = variance_floor(curves);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < gamma.size(); ++k)
    total += segment_fit(curves, gamma[k], gamma[k + 1], p, floor).cost;
  return total;
}

double piecewise_loglik(const PiecewiseModel& model, const CurveSet& curves) {
  model.validate();
  if (!(model.grid == curves.grid())) throw DomainError("model grid differs from the curves grid");
  const auto& x = curves.values();
  double total = 0.0;
  for (std::size_t k = 0; k < model.K(); ++k) {
    const auto& reg = model.regimes[k];
    for (std::size_t j = model.gamma[k]; j < model.gamma[k + 1]; ++j) {
      const double mu = reg.mean_at(model.grid[j]);
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        total += gaussian_logpdf(x(i, static_cast<Eigen::Index>(j)), mu, reg.sigma2);
    }
  }
  return total;
}

double piecewise_criterion(const PiecewiseModel& model, const CurveSet& curves) {
  model.validate();
  const auto& x = curves.values();
  const double n = static_cast<double>(curves.n());
  double total = 0.0;
  for (std::size_t k = 0; k < model.K(); ++k) {
    const auto& reg = model.regimes[k];
    double ssr = 0.0;
    for (std::size_t j = model.gamma[k]; j < model.gamma[k + 1]; ++j) {
      const double mu = reg.mean_at(model.grid[j]);
      ssr += (x.col(static_cast<Eigen::Index>(j)).array() - mu).square().sum();
    }
    const double mk = static_cast<double>(model.gamma[k + 1] - model.gamma[k]);
    total += ssr / reg.sigma2 + n * mk * std::log(reg.sigma2);
  }
  return total;
}

Eigen::VectorXd piecewise_approximation(const PiecewiseModel& model) {
  model.validate();
  Eigen::VectorXd fit(static_cast<Eigen::Index>(model.grid.size()));
  for (std::size_t k = 0; k < model.K(); ++k)
    for (std::size_t j = model.gamma[k]; j < model.gamma[k + 1]; ++j)
      fit(static_cast<Eigen::Index>(j)) = model.regimes[k].mean_at(model.grid[j]);
  return fit;
}

std::vector<std::size_t> segment_labels(const PiecewiseModel& model) {
  model.validate();
  std::vector<std::size_t> labels(model.grid.size());
  for (std::size_t k = 0; k < model.K(); ++k)
    for (std::size_t j = model.gamma[k]; j < model.gamma[k + 1]; ++j) labels[j] = k + 1;
  return labels;
}

}  // namespace regimecurve
